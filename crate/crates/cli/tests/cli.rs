use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn evifuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evifuse")).args(args).output().expect("failed to launch evifuse")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fuse_prints_fused_json() {
    let dir = configs().join("opinions");
    let out = evifuse(&["fuse", "--a", arg(&dir.join("a.json")), "--b", arg(&dir.join("b.json"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["predicted_class"], 0);
    let u = v["opinion"]["uncertainty"].as_f64().unwrap();
    assert!((u - 0.1875 / 0.859375).abs() < 1e-12);
    let e: Vec<f64> = serde_json::from_value(v["evidence"].clone()).unwrap();
    assert!((e[0] - 5.0).abs() < 1e-12 && (e[1] - 3.75).abs() < 1e-12 && (e[2] - 2.0).abs() < 1e-12);
}

#[test]
fn fuse_accepts_evidence_files() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.json");
    let b = tmp.path().join("b.json");
    std::fs::write(&a, r#"{"evidence":[4,1,0]}"#).unwrap();
    std::fs::write(&b, r#"{"credibility":[0,0.25,0.25],"uncertainty":0.5}"#).unwrap();
    let out = evifuse(&["fuse", "--a", arg(&a), "--b", arg(&b)]);
    assert!(out.status.success());
    std::fs::write(&b, r#"{"credibility":[0.5,0.5],"uncertainty":0.5}"#).unwrap();
    assert_eq!(evifuse(&["fuse", "--a", arg(&a), "--b", arg(&b)]).status.code(), Some(2));
}

#[test]
fn experiment_writes_six_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = evifuse(&["experiment", "--config", arg(&configs().join("quick.json")), "--out", arg(tmp.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.json", "report.csv", "uncertainty_hist.csv", "credible_counts.csv", "model_a.json", "model_b.json"] {
        assert!(tmp.path().join(f).is_file(), "missing {f}");
    }
    let hist = std::fs::read_to_string(tmp.path().join("uncertainty_hist.csv")).unwrap();
    assert!(hist.starts_with("view,bin_low,bin_high,count\n"));
    assert_eq!(hist.lines().count(), 1 + 3 * 20);
    let counts = std::fs::read_to_string(tmp.path().join("credible_counts.csv")).unwrap();
    assert!(counts.starts_with("view,class,threshold,count\n"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["strategies"].as_array().unwrap().len(), 2);

    // same config, byte-identical report
    let again = tempfile::tempdir().unwrap();
    evifuse(&["experiment", "--config", arg(&configs().join("quick.json")), "--out", arg(again.path())]);
    assert_eq!(
        std::fs::read(tmp.path().join("report.json")).unwrap(),
        std::fs::read(again.path().join("report.json")).unwrap()
    );
}

#[test]
fn train_then_eval_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("quick.json");
    let models = tmp.path().join("models");
    assert!(evifuse(&["train", "--config", arg(&cfg), "--out", arg(&models)]).status.success());
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(models.join("model_a.json")).unwrap()).unwrap();
    assert_eq!(model["version"], "evifuse-model-v1");
    assert_eq!(model["w1"]["shape"], serde_json::json!([8, 16]));
    let eval_dir = tmp.path().join("eval");
    let out = evifuse(&["eval", "--config", arg(&cfg), "--models", arg(&models), "--out", arg(&eval_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.json", "report.csv", "uncertainty_hist.csv", "credible_counts.csv"] {
        assert!(eval_dir.join(f).is_file(), "missing {f}");
    }
}

#[test]
fn datagen_writes_csv_and_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(evifuse(&["datagen", "--config", arg(&configs().join("quick.json")), "--out", arg(tmp.path())]).status.success());
    let csv = std::fs::read_to_string(tmp.path().join("dataset.csv")).unwrap();
    assert!(csv.starts_with("split,label,degraded_b,xa_0,"));
    assert_eq!(csv.lines().count(), 401);
    assert!(tmp.path().join("dataset.json").is_file());
}

#[test]
fn uncertainty_report_writes_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = evifuse(&[
        "uncertainty-report",
        "--config",
        arg(&configs().join("quick.json")),
        "--out",
        arg(tmp.path()),
        "--threshold",
        "0.5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let counts = std::fs::read_to_string(tmp.path().join("credible_counts.csv")).unwrap();
    assert!(counts.lines().nth(1).unwrap().starts_with("a,0,0.5,"));
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(evifuse(&["experiment"]).status.code(), Some(2));
    assert_eq!(evifuse(&["bogus"]).status.code(), Some(2));
    assert_eq!(evifuse(&["experiment", "--config", "a.json", "--frobnicate"]).status.code(), Some(2));
    let out = evifuse(&["experiment", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"seeds": []}"#).unwrap();
    assert_eq!(evifuse(&["experiment", "--config", arg(&bad)]).status.code(), Some(2));
    let out = evifuse(&["uncertainty-report", "--config", arg(&configs().join("quick.json")), "--threshold", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&evifuse(&["bogus"]).stderr).is_empty());
}

#[test]
fn runtime_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = evifuse(&["eval", "--config", arg(&configs().join("quick.json")), "--models", arg(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
}
