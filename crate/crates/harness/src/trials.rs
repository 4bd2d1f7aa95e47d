use std::time::Instant;

use ndarray::{s, Array1};
use rayon::prelude::*;
use slrgap_core::model::{column_regression, sample_pair, sample_single, HypothesisLabel};
use slrgap_core::reductions::{
    distinguish_negspca, distinguish_pair, warmup_distinguish, warmup_distinguish_allcols,
    ReductionConfig,
};
use slrgap_core::rng::{standard_normal, SeedStream};
use slrgap_core::stats::{CrossMoments, Moments};

use crate::audits;
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{config, Error, Result};
use crate::report::{Check, ExperimentReport, RunOutput, TrialRecord};

/// Pooled residual statistics from one residual-audit trial.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResidualPool {
    pub residual: Moments,
    /// Index 0 pairs the residual with `A x*`, the rest with random projections.
    pub projections: Vec<CrossMoments>,
}

impl ResidualPool {
    pub fn merge(&mut self, other: &ResidualPool) {
        self.residual.merge(&other.residual);
        if self.projections.len() < other.projections.len() {
            self.projections.resize(other.projections.len(), CrossMoments::default());
        }
        for (a, b) in self.projections.iter_mut().zip(&other.projections) {
            a.merge(b);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub pool: Option<ResidualPool>,
}

/// Runs `f` on a pool of `workers` threads (all cores when `None`).
pub(crate) fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers:?} workers: {e}")))?;
    Ok(pool.install(f))
}

fn reduction_config(cfg: &ExperimentConfig) -> Result<ReductionConfig> {
    Ok(ReductionConfig { k_hint: cfg.params()?.k, sigma2_known: cfg.sigma2_known(), solver: cfg.solver })
}

fn pair_trial(cfg: &ExperimentConfig, index: u64, stream: &SeedStream) -> Result<TrialRecord> {
    let params = cfg.params()?;
    let label = cfg.truth.label(true, index);
    let z = sample_pair::<f64, _>(label, params, &mut stream.named("sample").rng())?;
    let out = distinguish_pair(&z, &cfg.oracle, &reduction_config(cfg)?)?;
    Ok(TrialRecord {
        trial_index: index,
        seed: stream.id(),
        truth: label.to_string(),
        verdict: out.verdict.to_string(),
        stat_left: Some(out.stat_left),
        stat_right: Some(out.stat_right),
        pred_error: out.pred_error,
        sweeps: out.report.sweeps_used as u64,
        runtime_ms: 0.0,
    })
}

fn negspca_trial(cfg: &ExperimentConfig, index: u64, stream: &SeedStream) -> Result<TrialRecord> {
    let params = cfg.params()?;
    let label = cfg.truth.label(false, index);
    let z = sample_single::<f64, _>(label, params, true, &mut stream.named("sample").rng())?;
    let boost = cfg.boost.expect("validated");
    let out = distinguish_negspca(&z, &cfg.oracle, &reduction_config(cfg)?, &boost, &stream.named("boost"))?;
    Ok(TrialRecord {
        trial_index: index,
        seed: stream.id(),
        truth: label.to_string(),
        verdict: out.verdict.to_string(),
        stat_left: Some(out.agreements as f64),
        stat_right: Some(out.iterations as f64),
        pred_error: None,
        sweeps: out.distinguisher_calls as u64,
        runtime_ms: 0.0,
    })
}

fn warmup_trial(cfg: &ExperimentConfig, index: u64, stream: &SeedStream) -> Result<TrialRecord> {
    let params = cfg.params()?;
    let label = cfg.truth.label(false, index);
    let z = sample_single::<f64, _>(label, params, cfg.pin_first, &mut stream.named("sample").rng())?;
    let red = reduction_config(cfg)?;
    let out = if cfg.all_columns {
        warmup_distinguish_allcols(&z, &cfg.oracle, cfg.threshold, &red)?
    } else {
        warmup_distinguish(&z, &cfg.oracle, cfg.threshold, &red)?
    };
    let max_stat = out.stats.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(TrialRecord {
        trial_index: index,
        seed: stream.id(),
        truth: label.to_string(),
        verdict: out.verdict.to_string(),
        stat_left: Some(max_stat),
        stat_right: None,
        pred_error: None,
        sweeps: out.solver_calls as u64,
        runtime_ms: 0.0,
    })
}

/// Target residual variance of the planted first-column regression.
fn residual_target(cfg: &ExperimentConfig) -> Result<f64> {
    let p = cfg.params()?;
    Ok(p.planted_slr::<f64>()?.sigma2_resid)
}

/// Residual `w' = Z_1 - Z_{\1} x*` of a planted sample and its correlation
/// with `A x*` and with `A u` for Gaussian `u` on the support of `x*`.
fn residual_trial(cfg: &ExperimentConfig, index: u64, stream: &SeedStream) -> Result<TrialOutcome> {
    let params = cfg.params()?;
    let z = sample_single::<f64, _>(HypothesisLabel::P, params, true, &mut stream.named("sample").rng())?;
    let planted = &z.truth_blocks().expect("synthetic")[0].as_ref().expect("planted");
    let x_star = Array1::from(column_regression(&planted.spike, planted.theta, 0)?.coef);
    let a = z.data().slice(s![.., 1..]);
    let fit = a.dot(&x_star);
    let w = &z.data().column(0) - &fit;

    let mut pool = ResidualPool::default();
    for &v in &w {
        pool.residual.push(v);
    }
    let support: Vec<usize> = x_star.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, _)| j).collect();
    let mut rng = stream.named("projections").rng();
    let mut projections = vec![fit];
    for _ in 0..cfg.projections {
        let mut u = Array1::<f64>::zeros(x_star.len());
        for &j in &support {
            u[j] = standard_normal(&mut rng);
        }
        projections.push(a.dot(&u));
    }
    let mut worst: f64 = 0.0;
    for proj in &projections {
        let mut cm = CrossMoments::default();
        for (&wi, &pi) in w.iter().zip(proj.iter()) {
            cm.push(wi, pi);
        }
        worst = worst.max(cm.correlation().abs());
        pool.projections.push(cm);
    }
    let var = pool.residual.variance();
    let ok = (var - residual_target(cfg)?).abs() <= cfg.var_tol;
    let record = TrialRecord {
        trial_index: index,
        seed: stream.id(),
        truth: "ok".into(),
        verdict: if ok { "ok" } else { "off" }.into(),
        stat_left: Some(var),
        stat_right: Some(worst),
        pred_error: None,
        sweeps: 0,
        runtime_ms: 0.0,
    };
    Ok(TrialOutcome { record, pool: Some(pool) })
}

/// Runs the given trial indices; results come back in the order of `indices`.
pub fn run_trials(cfg: &ExperimentConfig, indices: &[u64]) -> Result<Vec<TrialOutcome>> {
    cfg.validate()?;
    if !cfg.experiment.is_trial_based() {
        return config(format!("{:?} is not a per-trial experiment", cfg.experiment));
    }
    let one = |index: u64| -> Result<TrialOutcome> {
        let stream = SeedStream::trial(cfg.master_seed, index);
        let start = Instant::now();
        let mut out = match cfg.experiment {
            ExperimentKind::PairDistinguish | ExperimentKind::LassoRate => {
                TrialOutcome { record: pair_trial(cfg, index, &stream)?, pool: None }
            }
            ExperimentKind::NegspcaEnd2end => TrialOutcome { record: negspca_trial(cfg, index, &stream)?, pool: None },
            ExperimentKind::Warmup => TrialOutcome { record: warmup_trial(cfg, index, &stream)?, pool: None },
            ExperimentKind::Fact21Audit => residual_trial(cfg, index, &stream)?,
            _ => unreachable!("checked above"),
        };
        out.record.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(out)
    };
    with_workers(cfg.workers, || indices.par_iter().map(|&i| one(i)).collect::<Result<Vec<_>>>())?
}

fn trial_report(cfg: &ExperimentConfig, outcomes: Vec<TrialOutcome>) -> Result<ExperimentReport> {
    let mut pool = ResidualPool::default();
    let mut rows = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        if let Some(p) = &o.pool {
            pool.merge(p);
        }
        rows.push(o.record);
    }
    let name = serde_json::to_value(cfg.experiment).expect("kind serializes");
    let mut rep = ExperimentReport::new(name.as_str().unwrap_or_default(), cfg.master_seed, rows);

    if let Some(rho) = cfg.rho {
        let within = rep.rows.iter().filter(|r| r.pred_error.is_some_and(|e| e <= rho)).count();
        rep.extras.insert("rho".into(), rho);
        rep.extras.insert("pred_error_within".into(), within as f64);
        rep.extras.insert("pred_error_within_rate".into(), within as f64 / rep.rows.len() as f64);
    }
    if let Some(min) = cfg.min_success_rate {
        for (label, agg) in &rep.by_truth {
            rep.checks.push(Check::new(
                format!("success_rate[{label}]"),
                agg.success_rate >= min,
                format!("{} of {} (need rate >= {min})", agg.success_count, agg.trials),
            ));
        }
    }
    if cfg.experiment == ExperimentKind::Fact21Audit {
        let target = residual_target(cfg)?;
        let var = pool.residual.variance();
        let direct = pool.projections.first().map_or(f64::NAN, |c| c.correlation());
        let worst = pool.projections.iter().map(|c| c.correlation().abs()).fold(0.0, f64::max);
        rep.extras.insert("pooled_entries".into(), pool.residual.count as f64);
        rep.extras.insert("pooled_variance".into(), var);
        rep.extras.insert("target_variance".into(), target);
        rep.extras.insert("corr_fit".into(), direct);
        rep.extras.insert("max_abs_corr".into(), worst);
        rep.checks.push(Check::new(
            "residual_variance",
            (var - target).abs() <= cfg.var_tol,
            format!("pooled Var(w') = {var:.6} over {} entries, target {target:.6} ± {}", pool.residual.count, cfg.var_tol),
        ));
        rep.checks.push(Check::new(
            "residual_correlation",
            worst <= cfg.corr_max,
            format!("max |corr| over {} projections = {worst:.6}, limit {}", pool.projections.len(), cfg.corr_max),
        ));
    }
    Ok(rep)
}

/// Validates `cfg`, runs every trial or audit, and aggregates by trial index.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::Concentration => Ok(RunOutput::Audit(audits::concentration_report(cfg)?)),
        ExperimentKind::LdlrGrid => Ok(RunOutput::Audit(audits::ldlr_grid_report(cfg)?)),
        ExperimentKind::SqCert => Ok(RunOutput::Audit(audits::sq_cert_report(cfg)?)),
        _ => {
            let indices: Vec<u64> = (0..cfg.trials as u64).collect();
            let outcomes = run_trials(cfg, &indices)?;
            Ok(RunOutput::Trials(trial_report(cfg, outcomes)?))
        }
    }
}
