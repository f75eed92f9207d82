//! End-to-end checks of the `polycs` binary.

use std::path::Path;
use std::process::{Command, Output};

use polycs::experiment::{read_trial_csv, summarize_trials, ExperimentConfig, ExperimentKind, Scale, TRIAL_COLUMNS};

fn polycs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polycs")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn every_subcommand_is_listed() {
    let help = stdout(&polycs(&["--help"]));
    for cmd in ["index-set", "fit", "error-vs-m", "qu-table", "noise-comparison", "eta-sweep", "diagnostics"] {
        assert!(help.contains(cmd), "{cmd} missing from\n{help}");
    }
}

#[test]
fn index_set_reports_sizes_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("hc.json");
    let o = polycs(&["index-set", "--d", "2", "--k", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n"], 8);
    // Chebyshev 1 + 6 * 2 + 4; Legendre 1 + 2 * (3 + 5 + 7) + 9.
    assert_eq!(v["weighted_size_chebyshev"], 17.0);
    assert_eq!(v["weighted_size_legendre"], 40.0);
    let set = polycs::IndexSet::from_json(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(set.len(), 8);
}

#[test]
fn smoke_run_is_byte_reproducible() {
    let a = polycs(&["error-vs-m", "--scale", "smoke"]);
    let b = polycs(&["error-vs-m", "--scale", "smoke"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().next().unwrap(), TRIAL_COLUMNS.join(","));
    let c = polycs(&["error-vs-m", "--scale", "smoke", "--seed", "2"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn config_file_run_writes_raw_and_summary_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("noise.toml");
    let cfg = ExperimentConfig::preset(ExperimentKind::NoiseComparison, Scale::Smoke);
    std::fs::write(&cfg_path, cfg.to_toml_string().unwrap()).unwrap();
    let out = dir.path().join("noise.csv");
    let o = polycs(&["noise-comparison", "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_trial_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), cfg.alpha.len() * cfg.m.len() * cfg.trials * 4);
    let summary = std::fs::read_to_string(dir.path().join("noise.summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), summarize_trials(&rows).len() + 1);
    // The summary is echoed on stdout when an output path is given.
    assert_eq!(stdout(&o), summary);
}

#[test]
fn mismatched_config_and_bad_input_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("qu.toml");
    let cfg = ExperimentConfig::preset(ExperimentKind::QuTable, Scale::Smoke);
    std::fs::write(&p, cfg.to_toml_string().unwrap()).unwrap();
    let o = polycs(&["eta-sweep", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("qu_table"));
    let o = polycs(&["qu-table", "--config", Path::new("/nonexistent/x.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = polycs(&["fit", "--d", "2", "--k", "5", "--m", "4", "--function", "f7"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn nonconverged_runs_exit_with_two_unless_allowed() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("tight.toml");
    let mut cfg = ExperimentConfig::preset(ExperimentKind::ErrorVsM, Scale::Smoke);
    cfg.solver.max_iterations = 1;
    cfg.m = vec![20];
    cfg.trials = 1;
    std::fs::write(&p, cfg.to_toml_string().unwrap()).unwrap();
    let o = polycs(&["error-vs-m", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let o = polycs(&["error-vs-m", "--config", p.to_str().unwrap(), "--allow-nonconverged"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().skip(1).all(|l| l.contains(",false,")));
}

#[test]
fn fit_and_diagnostics_print_json() {
    let o = polycs(&["fit", "--d", "2", "--k", "12", "--m", "15", "--function", "planted", "--basis", "chebyshev"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["converged"], true);
    assert!(v["l2_error"].as_f64().unwrap() < 1e-6);
    let o = polycs(&["diagnostics", "--d", "2", "--k", "3", "--m", "4", "--trials", "200"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n"], 5);
    assert!((v["gram_min_eig"].as_f64().unwrap() - 0.8).abs() < 0.15);
}
