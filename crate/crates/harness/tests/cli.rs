use std::fs;
use std::process::{Command, Output};

fn ota(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ota")).args(args).env_remove("OTA_SEED").output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn pareto_rows_are_monotone() {
    let out = ota(&["pareto", "--theta", "5", "--kind", "one-way", "--grid", "100"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,gamma,eta,eta_lower_bound"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 100);
    for w in rows.windows(2) {
        assert!(w[1][1] <= w[0][1] && w[1][2] >= w[0][2]);
    }
    for r in &rows {
        assert!((r[2] - r[3]).abs() <= 1e-9);
    }
}

#[test]
fn certify_within_targets_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let out = ota(&[
        "certify", "--kind", "one-max", "--bounds", "2,10", "--lambda", "0.5", "--prediction-grid", "11", "--steps",
        "500", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["kappa_curve"].as_array().unwrap().len(), 21);
    assert!(v["worst_instances"]["robustness"].is_object());
}

#[test]
fn threshold_formats() {
    let out = ota(&["threshold", "--kind", "fractional", "--lambda", "0.5", "--prediction", "8", "--bounds", "2,10"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["segments"].as_array().unwrap().len() >= 2);

    let out = ota(&["threshold", "--prediction", "8", "--format", "csv", "--points", "11"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 12);
}

#[test]
fn bad_input_exits_two() {
    assert_eq!(ota(&["certify", "--bounds", "5,1"]).status.code(), Some(2));
    assert_eq!(ota(&["threshold", "--prediction", "50", "--bounds", "2,10"]).status.code(), Some(2));
    assert_eq!(ota(&["backtest", "--data", "/nonexistent.csv", "--window", "10", "--stride", "5"]).status.code(), Some(2));
    assert_eq!(ota(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn verify_passes() {
    let out = ota(&["verify", "--theta", "5"]);
    assert!(out.status.success());
    assert!(stdout(&out).lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn synth_then_backtest() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("walk.csv");
    let report = dir.path().join("report.json");
    let boxplot = dir.path().join("box.csv");
    let out = ota(&["synth", "--ticks", "3000", "--seed", "3", "--out", data.to_str().unwrap()]);
    assert!(out.status.success());
    let out = ota(&[
        "backtest",
        "--data",
        data.to_str().unwrap(),
        "--window",
        "100",
        "--stride",
        "50",
        "--algorithms",
        "worst_case,alf",
        "--out",
        report.to_str().unwrap(),
        "--boxplot",
        boxplot.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["results"].as_array().unwrap().len(), 2);
    assert_eq!(fs::read_to_string(&boxplot).unwrap().lines().count(), 3);
}

#[test]
fn seed_comes_from_the_environment() {
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_ota"))
            .args(["synth", "--ticks", "50"])
            .env("OTA_SEED", seed)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("4"), ota(&["synth", "--ticks", "50", "--seed", "4"]).stdout);
    assert_ne!(run("4"), run("5"));
}
