use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::functions::resolve_function;
use super::output::{QuRecord, Records, RunReport, TrialRecord};
use crate::diagnostics::{error_l2_mc, error_linf_mc, qu_constant};
use crate::estimators::{
    estimate_eta_cv, fit_cs_system, fit_with_eta, misfit, oracle_coefficients, CsFit, EtaStrategy,
};
use crate::measurement::{add_noise, assemble, sampling_matrix, MeasurementSystem, TargetFunction};
use crate::multiindex::{hyperbolic_cross, IndexSet, WeightVector};
use crate::polybasis::{sample_measure, BasisSpec};
use crate::rng::{tag, SeedKey};
use crate::Result;

/// Shared, read-only state of one run.
struct Setup {
    cfg: ExperimentConfig,
    basis: BasisSpec,
    lambda: IndexSet,
    f: TargetFunction,
    master: SeedKey,
}

impl Setup {
    fn new(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<Self> {
        cfg.validate()?;
        if cfg.experiment != kind {
            return Err(crate::Error::Config(format!(
                "config describes `{}`, not `{kind}`",
                cfg.experiment
            )));
        }
        let basis = cfg.basis_spec()?;
        Ok(Self {
            cfg: cfg.clone(),
            basis,
            lambda: hyperbolic_cross(cfg.d, cfg.k)?,
            f: resolve_function(&cfg.function, basis)?,
            master: SeedKey::new(cfg.seed),
        })
    }

    fn key(&self, trial: u64) -> SeedKey {
        self.master.with_trial(trial)
    }

    fn system(&self, m: usize, key: SeedKey) -> Result<MeasurementSystem> {
        let pts = sample_measure(self.basis, m, key.with_tag(tag::MEASUREMENT_POINTS));
        assemble(&self.f, &self.lambda, self.basis, pts)
    }

    fn noisy(&self, clean: &MeasurementSystem, key: SeedKey) -> Result<MeasurementSystem> {
        add_noise(clean, self.cfg.noise, key.with_tag(tag::NOISE))
    }

    fn blank(&self, alpha: f64, m: usize, trial: u64, strategy: &str) -> TrialRecord {
        TrialRecord {
            experiment: self.cfg.experiment.name().into(),
            basis: self.basis.family.name().into(),
            d: self.cfg.d,
            k: self.cfg.k,
            n: self.lambda.len(),
            alpha,
            m,
            trial,
            eta_strategy: strategy.into(),
            eta: None,
            l2_error: None,
            linf_error: None,
            iterations: 0,
            converged: false,
            seed: self.cfg.seed,
            wall_ms: 0,
        }
    }

    /// Fills a record from a fit and its Monte-Carlo errors.
    fn record(&self, mut r: TrialRecord, fit: &CsFit, key: SeedKey, start: Instant) -> Result<TrialRecord> {
        r.eta = Some(fit.eta);
        r.l2_error = Some(error_l2_mc(&self.f, &fit.surrogate, self.cfg.l2_points, key)?);
        if self.cfg.linf_points > 0 {
            r.linf_error = Some(error_linf_mc(&self.f, &fit.surrogate, self.cfg.linf_points, key)?);
        }
        r.iterations = fit.solve.iterations;
        r.converged = fit.converged();
        r.wall_ms = self.elapsed(start);
        Ok(r)
    }

    fn elapsed(&self, start: Instant) -> u64 {
        if self.cfg.timing {
            start.elapsed().as_millis() as u64
        } else {
            0
        }
    }
}

fn failure(r: &TrialRecord, e: &crate::Error) -> String {
    format!(
        "alpha={} m={} trial={} strategy={}: {e}",
        r.alpha, r.m, r.trial, r.eta_strategy
    )
}

/// Collects per-trial outcomes, keeping a flagged row for every failure.
pub(super) fn settle(rows: Vec<(TrialRecord, Result<TrialRecord>)>) -> (Vec<TrialRecord>, Vec<String>) {
    let mut out = Vec::with_capacity(rows.len());
    let mut failures = Vec::new();
    for (blank, res) in rows {
        match res {
            Ok(r) => out.push(r),
            Err(e) => {
                failures.push(failure(&blank, &e));
                out.push(blank);
            }
        }
    }
    (out, failures)
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    match cfg.experiment {
        ExperimentKind::ErrorVsM => run_error_vs_m(cfg),
        ExperimentKind::QuTable => run_qu_table(cfg),
        ExperimentKind::NoiseComparison => run_noise_comparison(cfg),
        ExperimentKind::EtaSweep => run_eta_sweep(cfg),
    }
}

/// Compressed-sensing fits with the configured `eta` strategy for every
/// `(alpha, m, trial)`, with `L^2` and `L^inf` errors.
pub fn run_error_vs_m(cfg: &ExperimentConfig) -> Result<RunReport> {
    let s = Setup::new(cfg, ExperimentKind::ErrorVsM)?;
    let mut tasks = Vec::new();
    for &alpha in &cfg.alpha {
        for &m in &cfg.m {
            for t in 0..cfg.trials as u64 {
                tasks.push((alpha, m, t));
            }
        }
    }
    let strategy = cfg.eta.name();
    let rows: Vec<_> = tasks
        .par_iter()
        .map(|&(alpha, m, t)| {
            let blank = s.blank(alpha, m, t, strategy);
            let res = (|| {
                let start = Instant::now();
                let key = s.key(t);
                let mut sys = s.system(m, key)?;
                if cfg.noise > 0.0 {
                    sys = s.noisy(&sys, key)?;
                }
                let fit = fit_cs_system(&sys, Some(&s.f), alpha, cfg.eta, key, &cfg.solver)?;
                s.record(blank.clone(), &fit, key, start)
            })();
            (blank, res)
        })
        .collect();
    let (records, failures) = settle(rows);
    Ok(RunReport { config: cfg.clone(), records: Records::Trials(records), failures })
}

/// `Q_u(A)` for every `(m, trial)`.
pub fn run_qu_table(cfg: &ExperimentConfig) -> Result<RunReport> {
    let s = Setup::new(cfg, ExperimentKind::QuTable)?;
    let n = s.lambda.len();
    if let Some(&m) = cfg.m.iter().find(|&&m| m > n) {
        return Err(crate::Error::Config(format!("Q_u needs m <= n, got m = {m} > n = {n}")));
    }
    let tasks: Vec<(usize, u64)> =
        cfg.m.iter().flat_map(|&m| (0..cfg.trials as u64).map(move |t| (m, t))).collect();
    let rows: Vec<(QuRecord, Option<String>)> = tasks
        .par_iter()
        .map(|&(m, t)| {
            let start = Instant::now();
            let pts = sample_measure(s.basis, m, s.key(t).with_tag(tag::MEASUREMENT_POINTS));
            let qu = sampling_matrix(&s.lambda, s.basis, &pts)
                .and_then(|a| qu_constant(a.as_ref(), &s.lambda, s.basis));
            let rec = QuRecord {
                experiment: cfg.experiment.name().into(),
                basis: s.basis.family.name().into(),
                d: cfg.d,
                k: cfg.k,
                n,
                m,
                trial: t,
                qu: qu.as_ref().ok().copied(),
                seed: cfg.seed,
                wall_ms: s.elapsed(start),
            };
            let msg = qu.err().map(|e| format!("m={m} trial={t}: {e}"));
            (rec, msg)
        })
        .collect();
    let failures = rows.iter().filter_map(|r| r.1.clone()).collect();
    let records = rows.into_iter().map(|r| r.0).collect();
    Ok(RunReport { config: cfg.clone(), records: Records::Qu(records), failures })
}

/// Per-trial quantities shared by every `(alpha, m)` of the noisy experiments.
fn oracle_for_trial(s: &Setup, t: u64) -> Result<Vec<f64>> {
    oracle_coefficients(&s.f, &s.lambda, s.basis, s.key(t))
}

/// Runs `per_cell` for every `(alpha, m)` of each trial (trials in parallel, one
/// oracle fit per trial) and orders the rows by `(alpha, m, trial)`.
fn noisy_experiment<F>(s: &Setup, per_cell: F) -> (Vec<TrialRecord>, Vec<String>)
where
    F: Fn(&Setup, f64, usize, u64, &Result<Vec<f64>>) -> Vec<(TrialRecord, Result<TrialRecord>)> + Sync,
{
    let cfg = &s.cfg;
    let per_trial: Vec<Vec<Vec<(TrialRecord, Result<TrialRecord>)>>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let oracle = oracle_for_trial(s, t);
            let mut cells = Vec::new();
            for &alpha in &cfg.alpha {
                for &m in &cfg.m {
                    cells.push(per_cell(s, alpha, m, t, &oracle));
                }
            }
            cells
        })
        .collect();
    let cells = cfg.alpha.len() * cfg.m.len();
    let mut trials: Vec<_> = per_trial.into_iter().map(Vec::into_iter).collect();
    let mut rows = Vec::new();
    for _ in 0..cells {
        for trial in trials.iter_mut() {
            rows.extend(trial.next().expect("one entry per cell"));
        }
    }
    settle(rows)
}

/// Flags every expected row of a cell whose shared setup failed.
fn all_failed(blanks: Vec<TrialRecord>, e: crate::Error) -> Vec<(TrialRecord, Result<TrialRecord>)> {
    let msg = e.to_string();
    blanks
        .into_iter()
        .map(|b| (b, Err(crate::Error::InvalidArgument(msg.clone()))))
        .collect()
}

fn oracle_eta(oracle: &Result<Vec<f64>>, sys: &MeasurementSystem) -> Result<f64> {
    match oracle {
        Ok(c) => misfit(sys.a.as_ref(), &sys.y, c),
        Err(e) => Err(crate::Error::InvalidArgument(format!("oracle fit failed: {e}"))),
    }
}

/// For every `(alpha, m, trial)`: a noiseless baseline at the `eta` floor, then
/// noisy fits with `eta` at the floor, the oracle estimate, and cross validation.
pub fn run_noise_comparison(cfg: &ExperimentConfig) -> Result<RunReport> {
    let s = Setup::new(cfg, ExperimentKind::NoiseComparison)?;
    let (records, failures) = noisy_experiment(&s, |s, alpha, m, t, oracle| {
        let key = s.key(t);
        let opts = &s.cfg.solver;
        let labels = ["noiseless", "fixed", "oracle", "cv"];
        let blanks: Vec<TrialRecord> = labels.iter().map(|l| s.blank(alpha, m, t, l)).collect();
        let prepared = (|| -> Result<_> {
            let clean = s.system(m, key)?;
            let noisy = s.noisy(&clean, key)?;
            let w = WeightVector::intrinsic(&s.lambda, s.basis.family, alpha)?;
            Ok((clean, noisy, w))
        })();
        let (clean, noisy, w) = match prepared {
            Ok(p) => p,
            Err(e) => return all_failed(blanks, e),
        };
        let run = |b: &TrialRecord| -> Result<TrialRecord> {
            let start = Instant::now();
            let fit = match b.eta_strategy.as_str() {
                "noiseless" => fit_with_eta(&clean, &w, alpha, EtaStrategy::Fixed(0.0), 0.0, key, opts)?,
                "fixed" => fit_with_eta(&noisy, &w, alpha, EtaStrategy::Fixed(0.0), 0.0, key, opts)?,
                "oracle" => {
                    let eta = oracle_eta(oracle, &noisy)?;
                    fit_with_eta(&noisy, &w, alpha, EtaStrategy::Oracle, eta, key, opts)?
                }
                _ => {
                    let anchor = oracle_eta(oracle, &noisy)?;
                    let sel = estimate_eta_cv(noisy.a.as_ref(), &noisy.y, &w, anchor, key, opts)?;
                    fit_with_eta(&noisy, &w, alpha, EtaStrategy::CrossValidation, sel.eta, key, opts)?
                }
            };
            s.record(b.clone(), &fit, key, start)
        };
        blanks
            .into_iter()
            .map(|b| {
                let r = run(&b);
                (b, r)
            })
            .collect()
    });
    Ok(RunReport { config: cfg.clone(), records: Records::Trials(records), failures })
}

/// For every `(alpha, m, trial)`: fits at each `eta` of the grid, then at the
/// oracle and cross-validation estimates.
pub fn run_eta_sweep(cfg: &ExperimentConfig) -> Result<RunReport> {
    let s = Setup::new(cfg, ExperimentKind::EtaSweep)?;
    let grid = cfg.eta_grid.values();
    let (records, failures) = noisy_experiment(&s, |s, alpha, m, t, oracle| {
        let key = s.key(t);
        let opts = &s.cfg.solver;
        let mut blanks: Vec<TrialRecord> = grid
            .iter()
            .map(|&eta| TrialRecord { eta: Some(eta), ..s.blank(alpha, m, t, "fixed") })
            .collect();
        blanks.push(s.blank(alpha, m, t, "oracle"));
        blanks.push(s.blank(alpha, m, t, "cv"));
        let prepared = (|| -> Result<_> {
            let noisy = s.noisy(&s.system(m, key)?, key)?;
            let w = WeightVector::intrinsic(&s.lambda, s.basis.family, alpha)?;
            let anchor = oracle_eta(oracle, &noisy);
            Ok((noisy, w, anchor))
        })();
        let (noisy, w, anchor) = match prepared {
            Ok(p) => p,
            Err(e) => return all_failed(blanks, e),
        };
        let run = |b: &TrialRecord| -> Result<TrialRecord> {
            let start = Instant::now();
            let fit = match b.eta_strategy.as_str() {
                "fixed" => {
                    let eta = b.eta.expect("grid rows carry their eta");
                    fit_with_eta(&noisy, &w, alpha, EtaStrategy::Fixed(eta), eta, key, opts)?
                }
                "oracle" => {
                    let eta = *anchor.as_ref().map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
                    fit_with_eta(&noisy, &w, alpha, EtaStrategy::Oracle, eta, key, opts)?
                }
                _ => {
                    let eta = *anchor.as_ref().map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
                    let sel = estimate_eta_cv(noisy.a.as_ref(), &noisy.y, &w, eta, key, opts)?;
                    fit_with_eta(&noisy, &w, alpha, EtaStrategy::CrossValidation, sel.eta, key, opts)?
                }
            };
            s.record(b.clone(), &fit, key, start)
        };
        blanks
            .into_iter()
            .map(|b| {
                let r = run(&b);
                (b, r)
            })
            .collect()
    });
    Ok(RunReport { config: cfg.clone(), records: Records::Trials(records), failures })
}
