use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Number, Value};
use slrgap_core::stats::Moments;

use crate::error::{io_err, Error, Result};

/// Column order of every per-trial CSV.
pub const CSV_COLUMNS: [&str; 9] = [
    "trial_index",
    "seed",
    "truth",
    "verdict",
    "stat_left",
    "stat_right",
    "pred_error",
    "sweeps",
    "runtime_ms",
];

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt17(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// JSON number with seventeen significant digits; non-finite values become
/// `null` (NaN) or the strings `"inf"` / `"-inf"`.
pub fn num17(v: f64) -> Value {
    if v.is_nan() {
        Value::Null
    } else if v.is_infinite() {
        Value::String(fmt17(v))
    } else {
        Value::Number(fmt17(v).parse::<Number>().expect("formatted float parses"))
    }
}

fn opt17(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num17)
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub seed: u64,
    pub truth: String,
    pub verdict: String,
    pub stat_left: Option<f64>,
    pub stat_right: Option<f64>,
    pub pred_error: Option<f64>,
    pub sweeps: u64,
    pub runtime_ms: f64,
}

impl TrialRecord {
    pub fn success(&self) -> bool {
        self.truth == self.verdict
    }

    fn csv_fields(&self) -> [String; 9] {
        let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
        [
            self.trial_index.to_string(),
            self.seed.to_string(),
            self.truth.clone(),
            self.verdict.clone(),
            opt(self.stat_left),
            opt(self.stat_right),
            opt(self.pred_error),
            self.sweeps.to_string(),
            fmt17(self.runtime_ms),
        ]
    }

    fn json(&self) -> Value {
        json!({
            "trial_index": self.trial_index,
            "seed": self.seed,
            "truth": self.truth,
            "verdict": self.verdict,
            "stat_left": opt17(self.stat_left),
            "stat_right": opt17(self.stat_right),
            "pred_error": opt17(self.pred_error),
            "sweeps": self.sweeps,
            "runtime_ms": num17(self.runtime_ms),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub trials: usize,
    pub success_count: usize,
    pub success_rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub mean_stat_left: Option<f64>,
    pub mean_stat_right: Option<f64>,
    pub mean_pred_error: Option<f64>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut m = Moments::default();
    for v in values.flatten() {
        m.push(v);
    }
    (m.count > 0).then(|| m.mean())
}

impl Aggregate {
    pub fn from_rows<'a>(rows: impl Iterator<Item = &'a TrialRecord> + Clone) -> Self {
        let trials = rows.clone().count();
        let success_count = rows.clone().filter(|r| r.success()).count();
        let (wilson_low, wilson_high) = wilson_interval(success_count, trials);
        Self {
            trials,
            success_count,
            success_rate: if trials == 0 { 0.0 } else { success_count as f64 / trials as f64 },
            wilson_low,
            wilson_high,
            mean_stat_left: mean_of(rows.clone().map(|r| r.stat_left)),
            mean_stat_right: mean_of(rows.clone().map(|r| r.stat_right)),
            mean_pred_error: mean_of(rows.map(|r| r.pred_error)),
        }
    }

    fn json(&self) -> Value {
        json!({
            "trials": self.trials,
            "success_count": self.success_count,
            "success_rate": num17(self.success_rate),
            "wilson_low": num17(self.wilson_low),
            "wilson_high": num17(self.wilson_high),
            "mean_stat_left": opt17(self.mean_stat_left),
            "mean_stat_right": opt17(self.mean_stat_right),
            "mean_pred_error": opt17(self.mean_pred_error),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }

    fn json(&self) -> Value {
        json!({ "name": self.name, "passed": self.passed, "detail": self.detail })
    }
}

/// Per-trial rows with their aggregates.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub experiment: String,
    pub master_seed: u64,
    pub rows: Vec<TrialRecord>,
    pub aggregate: Aggregate,
    /// Aggregates restricted to each truth label.
    pub by_truth: BTreeMap<String, Aggregate>,
    pub extras: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, master_seed: u64, rows: Vec<TrialRecord>) -> Self {
        let aggregate = Aggregate::from_rows(rows.iter());
        let mut labels: Vec<&str> = rows.iter().map(|r| r.truth.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        let by_truth = labels
            .into_iter()
            .map(|l| (l.to_string(), Aggregate::from_rows(rows.iter().filter(move |r| r.truth == l))))
            .collect();
        Self {
            experiment: experiment.into(),
            master_seed,
            rows,
            aggregate,
            by_truth,
            extras: BTreeMap::new(),
            checks: Vec::new(),
        }
    }

    pub fn csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.csv_fields()).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn json_value(&self) -> Value {
        let by_truth: Map<String, Value> =
            self.by_truth.iter().map(|(k, v)| (k.clone(), v.json())).collect();
        let extras: Map<String, Value> =
            self.extras.iter().map(|(k, v)| (k.clone(), num17(*v))).collect();
        json!({
            "experiment": self.experiment,
            "master_seed": self.master_seed,
            "rows": self.rows.iter().map(TrialRecord::json).collect::<Vec<_>>(),
            "aggregate": self.aggregate.json(),
            "by_truth": by_truth,
            "extras": extras,
            "checks": self.checks.iter().map(Check::json).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt17(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => num17(*v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Self { name: name.into(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    fn json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Object(self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.json())).collect())
            })
            .collect();
        json!({ "name": self.name, "rows": rows })
    }
}

/// Tabular audit output with pass/fail checks.
#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub audit: String,
    pub master_seed: u64,
    pub tables: Vec<Table>,
    pub extras: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
}

impl AuditReport {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn json_value(&self) -> Value {
        let extras: Map<String, Value> =
            self.extras.iter().map(|(k, v)| (k.clone(), num17(*v))).collect();
        json!({
            "audit": self.audit,
            "master_seed": self.master_seed,
            "tables": self.tables.iter().map(Table::json).collect::<Vec<_>>(),
            "extras": extras,
            "checks": self.checks.iter().map(Check::json).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunOutput {
    Trials(ExperimentReport),
    Audit(AuditReport),
}

impl RunOutput {
    pub fn checks(&self) -> &[Check] {
        match self {
            RunOutput::Trials(r) => &r.checks,
            RunOutput::Audit(r) => &r.checks,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks().iter().all(|c| c.passed)
    }

    pub fn json_value(&self) -> Value {
        match self {
            RunOutput::Trials(r) => r.json_value(),
            RunOutput::Audit(r) => r.json_value(),
        }
    }

    /// CSV documents keyed by file suffix (`""` for the primary table).
    pub fn csv_documents(&self) -> Vec<(String, String)> {
        match self {
            RunOutput::Trials(r) => vec![(String::new(), r.csv_string())],
            RunOutput::Audit(r) => r
                .tables
                .iter()
                .enumerate()
                .map(|(i, t)| (if i == 0 { String::new() } else { t.name.clone() }, t.csv_string()))
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(text.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// `base` with its `.csv`/`.json` extension removed.
pub fn output_stem(base: &Path) -> PathBuf {
    match base.extension().and_then(|e| e.to_str()) {
        Some("csv") | Some("json") => base.with_extension(""),
        _ => base.to_path_buf(),
    }
}

/// Writes `<stem>.csv` (plus `<stem>.<table>.csv` for extra audit tables) or
/// `<stem>.json`. Returns the paths written.
pub fn emit_report(output: &RunOutput, format: Format, base: &Path) -> Result<Vec<PathBuf>> {
    let stem = output_stem(base);
    let name = stem.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut written = Vec::new();
    match format {
        Format::Csv => {
            for (suffix, text) in output.csv_documents() {
                let file = if suffix.is_empty() { format!("{name}.csv") } else { format!("{name}.{suffix}.csv") };
                let path = stem.with_file_name(file);
                write_file(&path, &text)?;
                written.push(path);
            }
        }
        Format::Json => {
            let path = stem.with_file_name(format!("{name}.json"));
            let text = serde_json::to_string_pretty(&output.json_value())
                .map_err(|source| Error::Json { context: path.display().to_string(), source })?;
            write_file(&path, &(text + "\n"))?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(i: u64, truth: &str, verdict: &str) -> TrialRecord {
        TrialRecord {
            trial_index: i,
            seed: 100 + i,
            truth: truth.into(),
            verdict: verdict.into(),
            stat_left: Some(0.1 * i as f64),
            stat_right: None,
            pred_error: Some(1.0 / 3.0),
            sweeps: 2,
            runtime_ms: 0.5,
        }
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(fmt17(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(num17(2.5).to_string().parse::<f64>().unwrap(), 2.5);
        assert!(num17(0.1).to_string().starts_with("1.0000000000000001e"));
        assert_eq!(num17(f64::NAN), Value::Null);
    }

    #[test]
    fn wilson_known_values() {
        // 8/10 successes: classical textbook interval
        let (lo, hi) = wilson_interval(8, 10);
        assert!((lo - 0.4901625).abs() < 1e-6 && (hi - 0.9433178).abs() < 1e-6);
        let (lo, hi) = wilson_interval(10, 10);
        // all successes: the lower end is n / (n + z^2)
        let z2 = 1.959_963_984_540_054_f64.powi(2);
        assert!((hi - 1.0).abs() < 1e-12 && (lo - 10.0 / (10.0 + z2)).abs() < 1e-12);
        let (lo, hi) = wilson_interval(0, 0);
        assert_eq!((lo, hi), (0.0, 1.0));
    }

    #[test]
    fn empty_report_is_header_only() {
        let rep = ExperimentReport::new("x", 1, Vec::new());
        assert_eq!(rep.csv_string(), CSV_COLUMNS.join(",") + "\n");
    }

    #[test]
    fn one_row_round_trips() {
        let rep = ExperimentReport::new("x", 1, vec![row(0, "PxQ", "PxQ")]);
        let text = rep.csv_string();
        assert_eq!(text.lines().count(), 2);
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let headers: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(headers, CSV_COLUMNS);
        let rec = rd.records().next().unwrap().unwrap();
        assert_eq!(&rec[2], "PxQ");
        assert_eq!(rec[6].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(&rec[5], "");
    }

    #[test]
    fn aggregates_by_truth() {
        let rows = vec![row(0, "P", "P"), row(1, "Q", "P"), row(2, "P", "P"), row(3, "Q", "Q")];
        let rep = ExperimentReport::new("x", 1, rows);
        assert_eq!(rep.aggregate.success_count, 3);
        assert_eq!(rep.by_truth["P"].success_rate, 1.0);
        assert_eq!(rep.by_truth["Q"].success_count, 1);
        let a = &rep.aggregate;
        assert!(a.wilson_low <= a.success_rate && a.success_rate <= a.wilson_high);
    }

    #[test]
    fn stems() {
        assert_eq!(output_stem(Path::new("out/run.csv")), PathBuf::from("out/run"));
        assert_eq!(output_stem(Path::new("out/run")), PathBuf::from("out/run"));
    }
}
