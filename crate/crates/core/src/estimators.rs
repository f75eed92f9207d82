//! Recovery pipelines: compressed-sensing fits, the oracle least-squares
//! baseline, choices of `eta`, and best `k`-term approximation in lower sets.

use std::collections::HashSet;

use faer::MatRef;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::measurement::{assemble, Expansion, MeasurementSystem, TargetFunction};
use crate::multiindex::{enumerate_lower_sets_with_cap, hyperbolic_cross, IndexSet, MultiIndex, WeightVector};
use crate::polybasis::{sample_measure, BasisSpec, SamplePoint};
use crate::rng::{tag, SeedKey};
use crate::solvers::linalg::{matvec, norm2};
use crate::solvers::{solve_least_squares, solve_wqcbp, SolverOptions, SolverResult};
use crate::{Error, Result};

/// How the constraint radius `eta` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum EtaStrategy {
    Fixed(f64),
    Oracle,
    CrossValidation,
}

impl EtaStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            EtaStrategy::Fixed(_) => "fixed",
            EtaStrategy::Oracle => "oracle",
            EtaStrategy::CrossValidation => "cv",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EtaStrategy::Fixed(v) if !(v.is_finite() && v >= 0.0) => {
                Err(Error::InvalidArgument(format!("fixed eta {v} must be finite and >= 0")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    CompressedSensing,
    OracleLeastSquares,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub estimator: Estimator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_strategy: Option<EtaStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub m: usize,
    pub seed: SeedKey,
    pub converged: bool,
    pub iterations: usize,
}

/// `f~ = sum_i c_i phi_i` over an index set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Surrogate {
    pub basis: BasisSpec,
    pub index_set: IndexSet,
    pub coefficients: Vec<f64>,
    pub provenance: Provenance,
}

impl Surrogate {
    pub fn new(
        basis: BasisSpec,
        index_set: IndexSet,
        coefficients: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        // Reuses the shape checks.
        let e = Expansion::new(basis, index_set, coefficients)?;
        Ok(Self { basis: e.basis, index_set: e.index_set, coefficients: e.coefficients, provenance })
    }

    pub fn expansion(&self) -> Expansion {
        Expansion {
            basis: self.basis,
            index_set: self.index_set.clone(),
            coefficients: self.coefficients.clone(),
        }
    }

    pub fn eval_points(&self, points: &[SamplePoint]) -> Result<Vec<f64>> {
        if let Some(p) = points.iter().find(|p| p.dim() != self.basis.d) {
            return Err(Error::DimensionMismatch { expected: self.basis.d, found: p.dim() });
        }
        let e = self.expansion();
        Ok(points.par_iter().map(|p| e.eval(p.coords())).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: Surrogate = serde_json::from_str(s)?;
        Self::new(raw.basis, raw.index_set, raw.coefficients, raw.provenance)
    }
}

pub fn evaluate_surrogate(s: &Surrogate, z: &SamplePoint) -> Result<f64> {
    if z.dim() != s.basis.d {
        return Err(Error::DimensionMismatch { expected: s.basis.d, found: z.dim() });
    }
    Ok(s.expansion().eval(z.coords()))
}

/// Outcome of one compressed-sensing fit.
#[derive(Clone, Debug)]
pub struct CsFit {
    pub surrogate: Surrogate,
    pub eta: f64,
    pub solve: SolverResult,
}

impl CsFit {
    pub fn converged(&self) -> bool {
        self.solve.converged
    }
}

/// End-to-end fit on the hyperbolic cross of order `k` from `m` samples of `f`.
#[allow(clippy::too_many_arguments)]
pub fn fit_cs(
    f: &TargetFunction,
    k: u64,
    basis: BasisSpec,
    m: usize,
    alpha: f64,
    strategy: EtaStrategy,
    key: SeedKey,
    opts: &SolverOptions,
) -> Result<CsFit> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let lambda = hyperbolic_cross(basis.d, k)?;
    let points = sample_measure(basis, m, key.with_tag(tag::MEASUREMENT_POINTS));
    let system = assemble(f, &lambda, basis, points)?;
    fit_cs_system(&system, Some(f), alpha, strategy, key, opts)
}

/// Resolves `eta` per `strategy` and solves the weighted problem on `system`.
/// `f` is needed by the oracle and cross-validation strategies.
pub fn fit_cs_system(
    system: &MeasurementSystem,
    f: Option<&TargetFunction>,
    alpha: f64,
    strategy: EtaStrategy,
    key: SeedKey,
    opts: &SolverOptions,
) -> Result<CsFit> {
    strategy.validate()?;
    let w = WeightVector::intrinsic(&system.index_set, system.basis.family, alpha)?;
    let eta = match strategy {
        EtaStrategy::Fixed(v) => v,
        EtaStrategy::Oracle | EtaStrategy::CrossValidation => {
            let f = f.ok_or_else(|| {
                Error::InvalidArgument(format!("the {} strategy needs the target function", strategy.name()))
            })?;
            let oracle = estimate_eta_oracle(f, &system.index_set, system.basis, system.a.as_ref(), &system.y, key)?;
            if strategy == EtaStrategy::Oracle {
                oracle
            } else {
                estimate_eta_cv(system.a.as_ref(), &system.y, &w, oracle, key, opts)?.eta
            }
        }
    };
    fit_with_eta(system, &w, alpha, strategy, eta, key, opts)
}

/// Solves with a resolved `eta` and packages the surrogate.
pub fn fit_with_eta(
    system: &MeasurementSystem,
    w: &WeightVector,
    alpha: f64,
    strategy: EtaStrategy,
    eta: f64,
    key: SeedKey,
    opts: &SolverOptions,
) -> Result<CsFit> {
    let solve = solve_wqcbp(system.a.as_ref(), &system.y, w, eta, opts)?;
    let provenance = Provenance {
        estimator: Estimator::CompressedSensing,
        eta_strategy: Some(strategy),
        eta: Some(solve.eta),
        alpha: Some(alpha),
        m: system.m(),
        seed: key,
        converged: solve.converged,
        iterations: solve.iterations,
    };
    let surrogate = Surrogate::new(
        system.basis,
        system.index_set.clone(),
        solve.coefficients.clone(),
        provenance,
    )?;
    Ok(CsFit { surrogate, eta: solve.eta, solve })
}

/// Least-squares fit on the columns of `support` from `m` fresh samples.
pub fn fit_oracle_ls(
    f: &TargetFunction,
    support: &IndexSet,
    basis: BasisSpec,
    m: usize,
    key: SeedKey,
) -> Result<Surrogate> {
    if m < support.len() {
        return Err(Error::InvalidArgument(format!(
            "least squares needs m >= |S| (m = {m}, |S| = {})",
            support.len()
        )));
    }
    let coefficients = least_squares_coefficients(f, support, basis, m, key.with_tag(tag::LS_POINTS))?;
    let provenance = Provenance {
        estimator: Estimator::OracleLeastSquares,
        eta_strategy: None,
        eta: None,
        alpha: None,
        m,
        seed: key,
        converged: true,
        iterations: 0,
    };
    Surrogate::new(basis, support.clone(), coefficients, provenance)
}

fn least_squares_coefficients(
    f: &TargetFunction,
    set: &IndexSet,
    basis: BasisSpec,
    m: usize,
    key: SeedKey,
) -> Result<Vec<f64>> {
    let points = sample_measure(basis, m, key);
    let system = assemble(f, set, basis, points)?;
    solve_least_squares(system.a.as_ref(), &system.y)
}

/// Least-squares coefficients on `lambda` from `10 n` fresh samples. They do not
/// depend on the measurement system, so experiments compute them once per trial.
pub fn oracle_coefficients(f: &TargetFunction, lambda: &IndexSet, basis: BasisSpec, key: SeedKey) -> Result<Vec<f64>> {
    least_squares_coefficients(f, lambda, basis, 10 * lambda.len(), key.with_tag(tag::ORACLE_POINTS))
}

/// `||A c - y||_2`.
pub fn misfit(a: MatRef<'_, f64>, y: &[f64], c: &[f64]) -> Result<f64> {
    if a.ncols() != c.len() {
        return Err(Error::DimensionMismatch { expected: a.ncols(), found: c.len() });
    }
    if a.nrows() != y.len() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: y.len() });
    }
    let ac = matvec(a, c);
    Ok(norm2(&ac.iter().zip(y).map(|(p, q)| p - q).collect::<Vec<_>>()))
}

/// `eta = ||A c_oracle - y||_2` with `c_oracle` from [`oracle_coefficients`].
pub fn estimate_eta_oracle(
    f: &TargetFunction,
    lambda: &IndexSet,
    basis: BasisSpec,
    a: MatRef<'_, f64>,
    y: &[f64],
    key: SeedKey,
) -> Result<f64> {
    let c = oracle_coefficients(f, lambda, basis, key)?;
    misfit(a, y, &c)
}

/// Number of candidates and the exponent range of the cross-validation grid.
pub const CV_GRID_POINTS: usize = 11;
pub const CV_EXPONENT_RANGE: (f64, f64) = (-3.0, 3.0);

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CvCandidate {
    pub eta: f64,
    /// Validation residual, or `None` if the solve failed.
    pub score: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CvSelection {
    pub eta: f64,
    pub candidates: Vec<CvCandidate>,
}

/// `10^kappa eta_ref` for `kappa` equispaced on the exponent range.
pub fn cv_grid(eta_ref: f64) -> Vec<f64> {
    let (lo, hi) = CV_EXPONENT_RANGE;
    (0..CV_GRID_POINTS)
        .map(|j| {
            let kappa = lo + (hi - lo) * j as f64 / (CV_GRID_POINTS - 1) as f64;
            10f64.powf(kappa) * eta_ref
        })
        .collect()
}

/// Picks `eta` from [`cv_grid`] by a single random 3/4 : 1/4 split of the rows.
///
/// Each candidate is solved on the reconstruction rows with radius
/// `eta sqrt(m_r / m)`, which matches the reduced noise energy of the subset, and
/// scored by `||A_v d - y_v||_2` on the validation rows.
pub fn estimate_eta_cv(
    a: MatRef<'_, f64>,
    y: &[f64],
    w: &WeightVector,
    eta_ref: f64,
    key: SeedKey,
    opts: &SolverOptions,
) -> Result<CvSelection> {
    if !(eta_ref.is_finite() && eta_ref > 0.0) {
        return Err(Error::InvalidArgument(format!("eta_ref = {eta_ref} must be positive")));
    }
    let m = a.nrows();
    if y.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: y.len() });
    }
    if m < 2 {
        return Err(Error::InvalidArgument("cross validation needs at least 2 rows".into()));
    }
    let m_r = ((3 * m) as f64 / 4.0).round().clamp(1.0, (m - 1) as f64) as usize;
    let mut rows: Vec<usize> = (0..m).collect();
    rows.shuffle(&mut key.with_tag(tag::CV_SPLIT).rng());
    let (rec, val) = rows.split_at(m_r);
    let pick = |idx: &[usize]| {
        let sub = faer::Mat::from_fn(idx.len(), a.ncols(), |i, j| a[(idx[i], j)]);
        let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        (sub, ys)
    };
    let (a_r, y_r) = pick(rec);
    let (a_v, y_v) = pick(val);
    let shrink = (m_r as f64 / m as f64).sqrt();

    let candidates: Vec<CvCandidate> = cv_grid(eta_ref)
        .into_par_iter()
        .map(|eta| {
            let score = solve_wqcbp(a_r.as_ref(), &y_r, w, eta * shrink, opts)
                .ok()
                .filter(|r| r.converged)
                .and_then(|r| misfit(a_v.as_ref(), &y_v, &r.coefficients).ok());
            CvCandidate { eta, score }
        })
        .collect();
    let best = candidates
        .iter()
        .filter_map(|c| c.score.map(|s| (c.eta, s)))
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .ok_or(Error::CrossValidationFailed)?;
    Ok(CvSelection { eta: best.0, candidates })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KTermMode {
    Exact,
    Greedy,
}

#[derive(Clone, Debug)]
pub struct LowerKTerm {
    pub set: IndexSet,
    /// `sigma_{k,L}(c)_{1,u} = ||c - c_S||_{1,u}`.
    pub sigma: f64,
}

/// Lower-set enumeration budget for [`KTermMode::Exact`].
pub const EXACT_KTERM_CAP: u64 = 2_000_000;

/// Best approximation of `c` (indexed by `lambda`) by a vector supported on a
/// lower set of size at most `k`, in the `u`-weighted l1 norm.
///
/// `Exact` scans every lower set of size `<= k`; `Greedy` grows a set from the
/// origin, each time adding the admissible index with the largest `u_i |c_i|`.
pub fn best_lower_kterm(
    c: &[f64],
    lambda: &IndexSet,
    k: usize,
    u: &WeightVector,
    mode: KTermMode,
) -> Result<LowerKTerm> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if c.len() != lambda.len() {
        return Err(Error::DimensionMismatch { expected: lambda.len(), found: c.len() });
    }
    if u.len() != lambda.len() {
        return Err(Error::DimensionMismatch { expected: lambda.len(), found: u.len() });
    }
    let mass: Vec<f64> = c.iter().zip(u.values()).map(|(ci, ui)| ci.abs() * ui).collect();
    let total: f64 = mass.iter().sum();
    let gain = |i: &MultiIndex| lambda.position(i).map_or(0.0, |p| mass[p]);
    let d = lambda.dim();

    let set = match mode {
        KTermMode::Exact => {
            let mut best: Option<(f64, IndexSet)> = None;
            for s in enumerate_lower_sets_with_cap(d, k, EXACT_KTERM_CAP) {
                let s = s?;
                let captured: f64 = s.iter().map(gain).sum();
                if best.as_ref().is_none_or(|(b, _)| captured > *b) {
                    best = Some((captured, s));
                }
            }
            best.expect("the origin alone is a lower set").1
        }
        KTermMode::Greedy => {
            let mut members = vec![MultiIndex::zero(d)];
            let mut lookup: HashSet<MultiIndex> = members.iter().cloned().collect();
            while members.len() < k {
                let mut best: Option<(f64, MultiIndex)> = None;
                for s in &members {
                    for j in 0..d {
                        let mut e = s.entries().to_vec();
                        e[j] += 1;
                        let cand = MultiIndex::new(e);
                        if lookup.contains(&cand) || !admissible(&cand, &lookup) {
                            continue;
                        }
                        let g = gain(&cand);
                        let better = match &best {
                            None => true,
                            Some((bg, bi)) => g > *bg || (g == *bg && cand < *bi),
                        };
                        if better {
                            best = Some((g, cand));
                        }
                    }
                }
                let (_, next) = best.expect("a lower set always has a successor");
                lookup.insert(next.clone());
                members.push(next);
            }
            IndexSet::new(d, members)?
        }
    };
    let captured: f64 = set.iter().map(gain).sum();
    Ok(LowerKTerm { set, sigma: (total - captured).max(0.0) })
}

fn admissible(i: &MultiIndex, set: &HashSet<MultiIndex>) -> bool {
    (0..i.dim()).filter(|&l| i.entries()[l] > 0).all(|l| {
        let mut e = i.entries().to_vec();
        e[l] -= 1;
        set.contains(&MultiIndex::new(e))
    })
}
