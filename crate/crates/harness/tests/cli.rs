use std::path::Path;
use std::process::{Command, Output};

fn slrgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slrgap")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn unknown_config_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"experiment":"pair-distinguish","params":{"d":5,"k":2,"n":10},"trails":3}"#);
    let out = slrgap(&["experiment", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn invalid_values_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k.json", r#"{"experiment":"pair-distinguish","params":{"d":5,"k":9,"n":10}}"#);
    assert_eq!(slrgap(&["experiment", "--config", &cfg]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(slrgap(&["experiment", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(slrgap(&["experiment"]).status.code(), Some(2));
    assert_eq!(slrgap(&["concentration", "--trials", "10"]).status.code(), Some(2));
    let ok = write(dir.path(), "w.json", r#"{"experiment":"sq-cert"}"#);
    assert_eq!(slrgap(&["ldlr", "--config", &ok]).status.code(), Some(2));
}

#[test]
fn refuses_to_overwrite_its_config() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"experiment":"pair-distinguish","params":{"d":5,"k":2,"n":10},"oracle":"exact"}"#;
    let cfg = write(dir.path(), "run.json", text);
    let stem = dir.path().join("run");
    let out = slrgap(&["experiment", "--config", &cfg, "--out", stem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(std::fs::read_to_string(&cfg).unwrap(), text);
}

#[test]
fn sq_cert_reports_its_red_check_with_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("sq");
    let out = slrgap(&["sq-cert", "--out", stem.to_str().unwrap()]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(3), "{err}");
    assert!(err.contains("[FAIL] ldlr[k=10000]"), "{err}");
    assert!(err.contains("[PASS] ldlr[k=1000]"), "{err}");
    let csv = std::fs::read_to_string(dir.path().join("sq.csv")).unwrap();
    assert!(csv.starts_with("check,k,d,n,degree"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("sq.json")).unwrap()).unwrap();
    assert_eq!(json["checks"].as_array().unwrap().len(), 9);
}

#[test]
fn experiment_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "pair.json",
        r#"{"experiment":"pair-distinguish","params":{"d":30,"k":3,"n":200},"oracle":"exact","trials":6,"master_seed":8}"#,
    );
    let stem = dir.path().join("out");
    let out = slrgap(&["experiment", "--config", &cfg, "--out", stem.to_str().unwrap(), "--workers", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "trial_index,seed,truth,verdict,stat_left,stat_right,pred_error,sweeps,runtime_ms"
    );
    assert_eq!(lines.count(), 6);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 6);
    assert_eq!(json["aggregate"]["trials"], 6);
}

#[test]
fn sample_then_distinguish_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "p.json",
        r#"{"experiment":"pair-distinguish","params":{"d":20,"k":3,"n":2000},"oracle":"zero","truth":"QxP","master_seed":3}"#,
    );
    let matrix = dir.path().join("z.csv");
    let out = slrgap(&["sample", "--config", &cfg, "--out", matrix.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&matrix).unwrap();
    assert_eq!(text.lines().count(), 2001);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 42);

    let verdict = dir.path().join("v.json");
    let out = slrgap(&["distinguish", "--config", &cfg, "--input", matrix.to_str().unwrap(), "--out", verdict.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&verdict).unwrap()).unwrap();
    assert_eq!(v["verdict"], "QxP");
}
