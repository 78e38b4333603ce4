//! End-to-end runs of the `mindiff` binary.

use std::path::Path;
use std::process::Command;

fn mindiff(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mindiff")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.cfg");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn rates_prints_optimal_parameters() {
    let out = mindiff(&["rates", "--m", "1", "--L", "9"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("GD: α*=0.2 q*=0.8"), "{text}");
    assert!(text.contains("HB: α*=0.25 β*=0.25 q*=0.5"), "{text}");
}

#[test]
fn check_exits_zero() {
    let out = mindiff(&["check"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn run_without_config_prints_usage() {
    let out = mindiff(&["run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bad_inputs_fail_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "objective = logreg-scalar\ndata = /nonexistent.csv\nK = 5\n");
    let out = mindiff(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim().lines().count(), 1, "{err}");
    assert!(err.contains("/nonexistent.csv"));

    let out = mindiff(&["run", "--config", &cfg, "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn logreg_run_writes_all_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bn.csv");
    let mut text = String::from("variance,skewness,curtosis,entropy,class\n");
    for i in 0..40 {
        let t = i as f64 / 10.0;
        text += &format!("{},{},{},{},{}\n", t.sin() * 3.0, t.cos() * 2.0 - 1.0, t - 2.0, (3.0 * t).sin(), i % 2);
    }
    std::fs::write(&data, text).unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "objective = logreg-diag\ndata = {}\nu = uniform(0,5)\nseed = 4\nK = 300\nalgorithms = GD, HB-F, HB-RI\n",
            data.display()
        ),
    );
    let outs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let run = mindiff(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--algo", "GD", "--algo", "GD-FI", "--algo", "HB-RI"]);
            assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
            out
        })
        .collect();
    for file in ["summary.csv", "curves_GD.csv", "curves_GD-FI.csv", "curves_HB-RI.csv"] {
        let a = std::fs::read(outs[0].join(file)).unwrap();
        let b = std::fs::read(outs[1].join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
    let summary = std::fs::read_to_string(outs[0].join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows[0], "algorithm,final_original_err,final_derivative_err,predicted_rate");
    assert_eq!(rows.len(), 4);
    let curves = std::fs::read_to_string(outs[0].join("curves_GD-FI.csv")).unwrap();
    assert_eq!(curves.lines().count(), 302);
}

#[test]
fn sample_config_parses() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/accuracy.cfg");
    let cfg = mindiff::harness::ExperimentConfig::from_file(path).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.entries.len(), 10);
}
