//! End-to-end checks of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_accountability"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name).display().to_string()
}

#[test]
fn run_is_reproducible_and_dumps_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = dir.path().join("ledger.json");
    let trace = dir.path().join("trace.csv");
    let cfg = config("small.toml");
    let args = [
        "run",
        "--config",
        &cfg,
        "--seed",
        "3",
        "--dump-ledger",
        ledger.to_str().unwrap(),
        "--trace-detectors",
        trace.to_str().unwrap(),
    ];
    let first = cli(&args);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let second = cli(&args);
    assert_eq!(first.stdout, second.stdout);
    let record: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(record["seed"], 3);
    assert_eq!(record["steps"], 300);
    assert!(std::fs::metadata(&ledger).unwrap().len() > 0);
    assert!(std::fs::read_to_string(&trace).unwrap().lines().count() > 1);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[world]\nloss = 1.5\n").unwrap();
    let out = cli(&["run", "--config", bad.to_str().unwrap(), "--seed", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    std::fs::write(&bad, "unknown_key = 1\n").unwrap();
    let out = cli(&["run", "--config", bad.to_str().unwrap(), "--seed", "0"]);
    assert_eq!(out.status.code(), Some(2));

    let out = cli(&["run", "--config", "/nonexistent/config.toml", "--seed", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_suite_exits_with_two() {
    let out = cli(&["verify", "no-such-suite"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("normalisation"));
}

#[test]
fn quick_suite_exits_with_zero() {
    let out = cli(&["verify", "penalty"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("PASS penalty"));
}

#[test]
fn grid_resume_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.jsonl");
    let spec = config("grid_small.toml");
    let args = ["grid", "--spec", &spec, "--out", out.to_str().unwrap()];
    assert_eq!(cli(&args).status.code(), Some(0));
    let full = std::fs::read_to_string(&out).unwrap();
    assert_eq!(full.lines().count(), 8);

    // Keep three records plus half of the fourth, then resume.
    let cut: usize = full.lines().take(3).map(|l| l.len() + 1).sum::<usize>() + 20;
    std::fs::write(&out, &full[..cut]).unwrap();
    let mut resumed = args.to_vec();
    resumed.push("--resume");
    assert_eq!(cli(&resumed).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), full);

    let tables = dir.path().join("tables");
    let report = cli(&["report", "--in", out.to_str().unwrap(), "--out", tables.to_str().unwrap()]);
    assert_eq!(report.status.code(), Some(0));
    let tsv = std::fs::read_to_string(tables.join("summary.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 5);
    assert_eq!(tsv, String::from_utf8(report.stdout).unwrap());
    assert!(tables.join("gini.csv").exists());
}
