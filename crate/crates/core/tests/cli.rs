use std::process::Command;

use slepian_mtm::offgrid::{cs_experiment, cs_reports_csv};
use slepian_mtm::prolate::{compute_dpss, DpssParams};
use slepian_mtm::window::{window_report, window_reports_csv};
use slepian_mtm::FrequencyGrid;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_slepian-mtm"))
}

fn stdout_of(args: &[&str]) -> String {
    let out = cli().args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn dpss_matches_library() {
    let printed = stdout_of(&["dpss", "--n", "48", "--w", "0.15"]);
    let basis = compute_dpss(&DpssParams::critical(48, 0.15).unwrap(), 48).unwrap();
    assert_eq!(printed, basis.to_csv());
}

#[test]
fn window_matches_library() {
    let printed = stdout_of(&["window", "--n-list", "32,48", "--w", "0.1", "--grid", "2048"]);
    let grid = FrequencyGrid::new(2048).unwrap();
    let reports: Vec<_> = [32, 48].iter().map(|&n| window_report(n, 0.1, grid, false).unwrap()).collect();
    assert_eq!(printed, window_reports_csv(&reports));
}

#[test]
fn cs_matches_library() {
    let printed = stdout_of(&["cs", "--n", "64", "--w", "0.1", "--bands", "0,3", "--trials", "50", "--seed", "3"]);
    let report = cs_experiment(64, 0.1, 5, &[0, 3], 50, 3).unwrap();
    assert_eq!(printed, cs_reports_csv(&[report]));
}

#[test]
fn mse_writes_sweep_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let status = cli()
        .args(["mse", "--n", "32", "--k-list", "2,4", "--trials", "20", "--grid", "128", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let sweep = std::fs::read_to_string(dir.path().join("mse_sweep.csv")).unwrap();
    assert!(sweep.starts_with("N,W,K,trials,mean_mse,max_bias,mean_var\n"));
    assert_eq!(sweep.lines().count(), 3);
    let report = std::fs::read_to_string(dir.path().join("mse_report_K4.csv")).unwrap();
    assert!(report.starts_with("xi,true_S,mean_est,bias,var,mse\n"));
    assert_eq!(report.lines().count(), 129);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 16, "W": 0.25}"#).unwrap();
    let from_config = stdout_of(&["dpss", "--config", cfg.to_str().unwrap()]);
    assert_eq!(from_config, stdout_of(&["dpss", "--n", "16", "--w", "0.25"]));
    let overridden = stdout_of(&["dpss", "--config", cfg.to_str().unwrap(), "--n", "8"]);
    assert_eq!(overridden, stdout_of(&["dpss", "--n", "8", "--w", "0.25"]));
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| cli().args(args).output().unwrap().status.code();
    assert_eq!(code(&["dpss", "--n", "16", "--w", "0.7"]), Some(2));
    assert_eq!(code(&["dpss", "--n", "4", "--w", "0.1"]), Some(2));
    assert_eq!(code(&["mse", "--n", "16", "--k", "2", "--trials", "1"]), Some(2));
    assert_eq!(code(&["window", "--n", "64", "--w", "0.1", "--grid", "64"]), Some(2));
    assert_eq!(code(&["--bogus"]), Some(2));
    assert_eq!(code(&["dpss", "--n", "8", "--w", "0.25"]), Some(0));
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["cs", "--n", "64", "--w", "0.1", "--bands", "1,4", "--trials", "200", "--seed", "11"];
    let runs: Vec<Vec<u8>> = ["1", "3"]
        .iter()
        .map(|t| cli().args(args).env("SLEPIAN_MTM_THREADS", t).output().unwrap().stdout)
        .collect();
    assert_eq!(runs[0], runs[1]);
    let bad = cli().args(args).env("SLEPIAN_MTM_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
