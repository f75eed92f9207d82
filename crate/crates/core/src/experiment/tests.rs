use super::*;
use crate::estimators::EtaStrategy;
use crate::polybasis::Family;

fn smoke(kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig::preset(kind, Scale::Smoke)
}

fn csv_bytes(r: &RunReport) -> Vec<u8> {
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    buf
}

#[test]
fn presets() {
    let p = ExperimentConfig::full(ExperimentKind::ErrorVsM);
    assert_eq!((p.d, p.k, p.trials), (8, 22, 50));
    assert_eq!(p.m, vec![125, 250, 375, 500, 625, 750, 875, 1000]);
    let desk = p.clone().scaled(Scale::Desk);
    assert_eq!(desk.trials, 10);
    assert_eq!(desk.m, vec![250, 500, 750, 1000]);
    let s = smoke(ExperimentKind::ErrorVsM);
    assert_eq!((s.d, s.k, s.trials, s.m.clone()), (2, 25, 3, vec![20, 40, 80]));
    let n = ExperimentConfig::full(ExperimentKind::NoiseComparison);
    assert_eq!((n.d, n.k, n.noise, n.function.as_str()), (8, 19, 1e-3, "f3"));
    for kind in ExperimentKind::ALL {
        for scale in [Scale::Paper, Scale::Desk, Scale::Smoke] {
            ExperimentConfig::preset(kind, scale).validate().unwrap();
        }
    }
}

#[test]
fn eta_grid_endpoints() {
    let g = EtaGrid::default().values();
    assert_eq!(g.len(), 31);
    assert!((g[0] - 1e-5).abs() < 1e-20 && (g[30] - 10.0).abs() < 1e-12);
    assert!((g[15] - 1e-2).abs() < 1e-15);
}

#[test]
fn toml_round_trip_and_defaults() {
    let text = r#"
        experiment = "error_vs_m"
        basis = "chebyshev"
        d = 4
        k = 10
        m = [20, 40]
        trials = 2
        eta = { kind = "oracle" }
        [solver]
        tol = 1e-9
    "#;
    let c = ExperimentConfig::from_toml_str(text).unwrap();
    assert_eq!(c.alpha, vec![0.0, 1.0]);
    assert_eq!(c.eta, EtaStrategy::Oracle);
    assert_eq!(c.solver.tol, 1e-9);
    assert_eq!(c.linf_points, 100_000);
    let back = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
    assert_eq!(back, c);
}

#[test]
fn invalid_configs_are_rejected() {
    let base = smoke(ExperimentKind::ErrorVsM);
    let cases: Vec<ExperimentConfig> = vec![
        ExperimentConfig { m: vec![40, 20], ..base.clone() },
        ExperimentConfig { m: vec![20, 20], ..base.clone() },
        ExperimentConfig { trials: 0, ..base.clone() },
        ExperimentConfig { function: "f9".into(), ..base.clone() },
        ExperimentConfig { function: "f1".into(), d: 3, ..base.clone() },
        ExperimentConfig { alpha: vec![-1.0], ..base.clone() },
        ExperimentConfig { eta: EtaStrategy::Fixed(-1.0), ..base.clone() },
        ExperimentConfig { noise: 0.0, ..smoke(ExperimentKind::EtaSweep) },
    ];
    for c in cases {
        assert!(c.validate().is_err(), "{c:?}");
    }
    assert!(ExperimentConfig::from_toml_str("experiment = \"error_vs_m\"\nbogus = 1").is_err());
    let wrong = ExperimentConfig { experiment: ExperimentKind::QuTable, ..base.clone() };
    assert!(run_error_vs_m(&wrong).is_err());
}

#[test]
fn error_vs_m_smoke_is_deterministic_and_ordered() {
    let c = smoke(ExperimentKind::ErrorVsM);
    let r1 = run(&c).unwrap();
    assert!(r1.all_converged(), "{:?}", r1.failures);
    let rows = r1.trial_records().unwrap();
    assert_eq!(rows.len(), c.alpha.len() * c.m.len() * c.trials);
    let keys: Vec<(u64, usize, u64)> = rows.iter().map(|r| (r.alpha.to_bits(), r.m, r.trial)).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| f64::from_bits(a.0).total_cmp(&f64::from_bits(b.0)).then((a.1, a.2).cmp(&(b.1, b.2))));
    assert_eq!(keys, sorted);
    assert!(rows.iter().all(|r| r.wall_ms == 0 && r.linf_error.unwrap() >= 0.0 && r.n == 87));
    assert_eq!(csv_bytes(&r1), csv_bytes(&run(&c).unwrap()));
    let other = run(&ExperimentConfig { seed: c.seed + 1, ..c.clone() }).unwrap();
    assert_ne!(csv_bytes(&r1), csv_bytes(&other));
}

#[test]
fn csv_schema_and_summary_consistency() {
    let c = smoke(ExperimentKind::ErrorVsM);
    let r = run(&c).unwrap();
    let bytes = csv_bytes(&r);
    let header = String::from_utf8(bytes.clone()).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, TRIAL_COLUMNS.join(","));
    let rows = read_trial_csv(bytes.as_slice()).unwrap();
    assert_eq!(rows, r.trial_records().unwrap());
    let summary = summarize_trials(&rows);
    assert_eq!(summary.len(), c.alpha.len() * c.m.len());
    for s in &summary {
        let group: Vec<&TrialRecord> = rows.iter().filter(|x| x.alpha == s.alpha && x.m == s.m).collect();
        let mean = group.iter().map(|x| x.l2_error.unwrap()).sum::<f64>() / group.len() as f64;
        assert!((s.l2_mean.unwrap() - mean).abs() <= 1e-15 * mean.max(1e-300));
        assert_eq!(s.trials, c.trials);
    }
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let sp = r.write_files(&out).unwrap();
    assert_eq!(sp, dir.path().join("run.summary.csv"));
    assert_eq!(std::fs::read(&out).unwrap(), bytes);
}

#[test]
fn floats_use_shortest_round_trip_form() {
    let c = smoke(ExperimentKind::ErrorVsM);
    let text = String::from_utf8(csv_bytes(&run(&c).unwrap())).unwrap();
    let row = text.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    // eta column of the default fixed strategy
    assert_eq!(cols[9], "1e-12");
    for v in [cols[10], cols[11]] {
        let x: f64 = v.parse().unwrap();
        assert_eq!(format!("{x:?}").parse::<f64>().unwrap().to_bits(), x.to_bits());
        assert!(v.len() <= 24);
    }
}

#[test]
fn planted_function_is_recovered() {
    let c = ExperimentConfig {
        basis: Family::Legendre,
        d: 4,
        k: 10,
        m: vec![40],
        trials: 3,
        alpha: vec![1.0],
        function: "planted".into(),
        ..smoke(ExperimentKind::ErrorVsM)
    };
    let r = run(&c).unwrap();
    for row in r.trial_records().unwrap() {
        assert!(row.n > row.m);
        assert!(row.converged && row.l2_error.unwrap() <= 1e-6 && row.linf_error.unwrap() <= 1e-6, "{row:?}");
    }
}

#[test]
fn qu_table_smoke() {
    let c = smoke(ExperimentKind::QuTable);
    let r = run(&c).unwrap();
    assert!(r.all_converged());
    let rows = r.qu_records().unwrap();
    assert_eq!(rows.len(), 9);
    let s = summarize_qu(rows);
    assert_eq!(s.iter().map(|x| x.m).collect::<Vec<_>>(), vec![20, 40, 80]);
    assert!(s.iter().all(|x| x.qu_mean.unwrap() >= 1.0 && x.valid == 3));
    let too_big = ExperimentConfig { m: vec![40, 100], ..c };
    assert!(run(&too_big).is_err());
}

#[test]
fn noise_comparison_smoke() {
    let c = smoke(ExperimentKind::NoiseComparison);
    let r = run(&c).unwrap();
    assert!(r.failures.is_empty(), "{:?}", r.failures);
    let rows = r.trial_records().unwrap();
    assert_eq!(rows.len(), c.alpha.len() * c.m.len() * c.trials * 4);
    let labels: Vec<&str> = rows[..4].iter().map(|x| x.eta_strategy.as_str()).collect();
    assert_eq!(labels, ["noiseless", "fixed", "oracle", "cv"]);
    assert_eq!((rows[0].trial, rows[4].trial), (0, 1));
    assert!(rows.iter().all(|x| x.linf_error.is_none()));
    for x in rows.iter().filter(|x| x.eta_strategy == "oracle") {
        assert!(x.eta.unwrap() > 0.5e-3 && x.eta.unwrap() < 1e-2, "{x:?}");
    }
    assert_eq!(csv_bytes(&r), csv_bytes(&run(&c).unwrap()));
}

#[test]
fn eta_sweep_smoke() {
    let c = smoke(ExperimentKind::EtaSweep);
    let r = run(&c).unwrap();
    let rows = r.trial_records().unwrap();
    let per_cell = c.eta_grid.points + 2;
    assert_eq!(rows.len(), c.alpha.len() * c.m.len() * c.trials * per_cell);
    let grid = c.eta_grid.values();
    for (j, row) in rows[..per_cell].iter().enumerate() {
        if j < grid.len() {
            assert_eq!((row.eta_strategy.as_str(), row.eta), ("fixed", Some(grid[j])));
        }
    }
    assert_eq!(rows[per_cell - 2].eta_strategy, "oracle");
    assert_eq!(rows[per_cell - 1].eta_strategy, "cv");
    let summary = summarize_trials(rows);
    assert_eq!(summary.len(), c.alpha.len() * per_cell);
}

#[test]
fn failed_trials_are_flagged_not_fatal() {
    let c = smoke(ExperimentKind::ErrorVsM);
    let template = run(&ExperimentConfig { trials: 1, m: vec![20], alpha: vec![0.0], ..c }).unwrap();
    let blank = template.trial_records().unwrap()[0].clone();
    let (rows, failures) = super::runner::settle(vec![
        (blank.clone(), Ok(blank.clone())),
        (blank.clone(), Err(crate::Error::NonFinite)),
    ]);
    assert_eq!(rows.len(), 2);
    assert_eq!(failures.len(), 1);
    let report = RunReport { config: template.config.clone(), records: Records::Trials(rows), failures };
    assert!(!report.all_converged());
}
