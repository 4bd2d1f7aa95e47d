use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use serde_json::json;
use slrgap_core::model::{sample_pair, sample_single, Layout, SampleMatrix};
use slrgap_core::reductions::{
    distinguish_negspca, distinguish_pair, warmup_distinguish, warmup_distinguish_allcols,
    ReductionConfig,
};
use slrgap_core::rng::SeedStream;
use slrgap_harness::report::{fmt17, num17, output_stem};
use slrgap_harness::{emit_report, run_experiment, run_trials, Error, ExperimentConfig, ExperimentKind, Format, Result};

const EXIT_CONFIG: u8 = 2;
const EXIT_ASSERTION: u8 = 3;

#[derive(Parser)]
#[command(name = "slrgap", version, about = "Negative-spike sparse PCA to sparse regression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON experiment configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; `.csv` / `.json` siblings are written next to it
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trial count, overriding the configuration
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one sample matrix and write it as CSV
    Sample(Common),
    /// Classify one sample matrix (drawn, or read with --input)
    Distinguish {
        #[command(flatten)]
        common: Common,
        /// CSV sample matrix with a header row
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run the experiment described by --config
    Experiment(Common),
    /// Chi-square tail audit
    Concentration(Common),
    /// Overlap-moment enumeration audit
    Ldlr(Common),
    /// Bound-chain arithmetic at large sparsity
    SqCert(Common),
}

fn load(common: &Common, default_kind: Option<ExperimentKind>) -> Result<ExperimentConfig> {
    let mut cfg = match (&common.config, default_kind) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(kind)) => {
            let mut c = ExperimentConfig::new(kind);
            if kind == ExperimentKind::Concentration {
                c.trials = 100_000;
            }
            c
        }
        (None, None) => return Err(Error::Config("--config is required".into())),
    };
    if let Some(kind) = default_kind {
        if cfg.experiment != kind {
            return Err(Error::Config(format!("config describes {:?}, this subcommand runs {kind:?}", cfg.experiment)));
        }
    }
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(t) = common.trials {
        cfg.trials = t;
    }
    if let Some(w) = common.workers {
        cfg.workers = Some(w);
    }
    if let Some(out) = &common.out {
        cfg.output_path = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source }),
        None => {
            std::io::stdout().write_all(text.as_bytes()).ok();
            Ok(())
        }
    }
}

fn matrix_csv(z: &SampleMatrix<f64>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((0..z.ncols()).map(|j| format!("z{j}"))).expect("in-memory write");
    for row in z.data().rows() {
        w.write_record(row.iter().map(|v| fmt17(*v))).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn read_matrix(path: &Path, layout: Layout) -> Result<SampleMatrix<f64>> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let cols = rd.headers().map_err(csv_err)?.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        for field in rec.iter() {
            let v = field.trim().parse::<f64>().map_err(|e| Error::Config(format!("{}: row {}: {e}", path.display(), rows + 1)))?;
            values.push(v);
        }
        rows += 1;
    }
    let data = Array2::from_shape_vec((rows, cols), values)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(SampleMatrix::from_data(data, layout)?)
}

fn sample(common: &Common) -> Result<()> {
    let cfg = load(common, None)?;
    let params = cfg.params()?;
    let stream = SeedStream::trial(cfg.master_seed, 0);
    let mut rng = stream.named("sample").rng();
    let paired = cfg.experiment.is_paired();
    let label = cfg.truth.label(paired, 0);
    let z = if paired {
        sample_pair::<f64, _>(label, params, &mut rng)?
    } else {
        sample_single::<f64, _>(label, params, cfg.pin_first, &mut rng)?
    };
    eprintln!("sampled {} rows x {} columns under {label}", z.nrows(), z.ncols());
    write_text(cfg.output_path.as_deref(), &matrix_csv(&z))
}

fn distinguish(common: &Common, input: Option<&Path>) -> Result<()> {
    let cfg = load(common, None)?;
    let Some(path) = input else {
        let row = run_trials(&cfg, &[0])?.remove(0).record;
        let out = json!({
            "truth": row.truth,
            "verdict": row.verdict,
            "stat_left": row.stat_left.map(num17),
            "stat_right": row.stat_right.map(num17),
            "pred_error": row.pred_error.map(num17),
        });
        return write_text(cfg.output_path.as_deref(), &format!("{out}\n"));
    };
    let red = ReductionConfig { k_hint: cfg.params()?.k, sigma2_known: cfg.sigma2_known(), solver: cfg.solver };
    let out = match cfg.experiment {
        ExperimentKind::PairDistinguish | ExperimentKind::LassoRate => {
            let z = read_matrix(path, Layout::Paired)?;
            let r = distinguish_pair(&z, &cfg.oracle, &red)?;
            json!({ "verdict": r.verdict.to_string(), "stat_left": num17(r.stat_left), "stat_right": num17(r.stat_right) })
        }
        ExperimentKind::NegspcaEnd2end => {
            let z = read_matrix(path, Layout::Single)?;
            let boost = cfg.boost.expect("validated");
            let stream = SeedStream::new(cfg.master_seed).named("boost");
            let r = distinguish_negspca(&z, &cfg.oracle, &red, &boost, &stream)?;
            json!({ "verdict": r.verdict.to_string(), "agreements": r.agreements, "iterations": r.iterations })
        }
        ExperimentKind::Warmup => {
            let z = read_matrix(path, Layout::Single)?;
            let r = if cfg.all_columns {
                warmup_distinguish_allcols(&z, &cfg.oracle, cfg.threshold, &red)?
            } else {
                warmup_distinguish(&z, &cfg.oracle, cfg.threshold, &red)?
            };
            json!({ "verdict": r.verdict.to_string(), "stats": r.stats.iter().map(|v| num17(*v)).collect::<Vec<_>>() })
        }
        other => return Err(Error::Config(format!("{other:?} does not classify a sample matrix"))),
    };
    write_text(cfg.output_path.as_deref(), &format!("{out}\n"))
}

/// Runs a configuration, writes its reports and returns whether every check passed.
fn run(common: &Common, kind: Option<ExperimentKind>) -> Result<bool> {
    let cfg = load(common, kind)?;
    if let (Some(base), Some(config)) = (&cfg.output_path, &common.config) {
        let stem = output_stem(base);
        if stem.with_extension("json") == *config || stem.with_extension("csv") == *config {
            return Err(Error::Config(format!("--out {} would overwrite the config file", base.display())));
        }
    }
    let output = run_experiment(&cfg)?;
    match &cfg.output_path {
        Some(base) => {
            for format in [Format::Csv, Format::Json] {
                for path in emit_report(&output, format, base)? {
                    eprintln!("wrote {}", path.display());
                }
            }
        }
        None => println!("{}", serde_json::to_string_pretty(&output.json_value()).expect("json")),
    }
    if let slrgap_harness::RunOutput::Trials(rep) = &output {
        let a = &rep.aggregate;
        eprintln!(
            "{}: {}/{} correct, rate {:.4} (95% CI {:.4}..{:.4})",
            rep.experiment, a.success_count, a.trials, a.success_rate, a.wilson_low, a.wilson_high
        );
    }
    for c in output.checks() {
        eprintln!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(output.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sample(c) => sample(c).map(|_| true),
        Command::Distinguish { common, input } => distinguish(common, input.as_deref()).map(|_| true),
        Command::Experiment(c) => run(c, None),
        Command::Concentration(c) => run(c, Some(ExperimentKind::Concentration)),
        Command::Ldlr(c) => run(c, Some(ExperimentKind::LdlrGrid)),
        Command::SqCert(c) => run(c, Some(ExperimentKind::SqCert)),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_ASSERTION),
        Err(e) => {
            eprintln!("slrgap: {e}");
            if e.is_config() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
