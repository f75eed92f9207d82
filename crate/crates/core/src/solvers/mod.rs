//! Weighted quadratically-constrained basis pursuit
//!
//! ```text
//! minimise sum_i w_i |d_i|  subject to  ||A d - y||_2 <= eta
//! ```
//!
//! plus least squares and spectral utilities.
//!
//! Two algorithms are available. The default is a primal-dual interior-point
//! method on the dual problem `max y^T l - eta ||l||  s.t. |A^T l| <= w`, followed
//! by an exact solve on the identified support. The alternative is the
//! Chambolle-Pock primal-dual splitting built from [`weighted_soft_threshold`] and
//! [`project_l2_ball`]; it is simple and matrix-free but needs many iterations to
//! reach tight tolerances when `eta` is small.

mod ipm;
pub mod linalg;
mod pdhg;
pub mod prox;

use std::io::Write;

use faer::MatRef;
use serde::{Deserialize, Serialize};

use crate::multiindex::WeightVector;
use crate::{Error, Result};

pub use linalg::{conditioning_check, min_singular_value, operator_norm, solve_least_squares};
pub use prox::{project_l2_ball, weighted_soft_threshold};

/// Substituted for `eta = 0` to keep the constraint set well posed.
pub const ETA_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    InteriorPoint,
    PrimalDual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Relative tolerance on the duality gap and residuals.
    pub tol: f64,
    /// Step-size safety factor for the primal-dual splitting.
    pub safety: f64,
    pub algorithm: Algorithm,
    /// Keep one telemetry record per iteration.
    pub record_history: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            tol: 1e-8,
            safety: 0.99,
            algorithm: Algorithm::InteriorPoint,
            record_history: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return Err(Error::InvalidArgument("safety factor must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Primal infeasibility of the current iterate.
    pub residual: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverResult {
    pub coefficients: Vec<f64>,
    /// `||A d - y||_2`.
    pub residual_norm: f64,
    /// `||d||_{1,w}`.
    pub objective: f64,
    /// Best dual objective found (a lower bound on the optimum).
    pub dual_objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The constraint radius actually used (after the floor).
    pub eta: f64,
    pub algorithm: Algorithm,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<IterationRecord>,
}

impl SolverResult {
    /// Writes the iteration history as JSON lines.
    pub fn write_telemetry<W: Write>(&self, mut out: W) -> Result<()> {
        for rec in &self.history {
            serde_json::to_writer(&mut out, rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    fn zero(n: usize, y: &[f64], eta: f64, algorithm: Algorithm) -> Self {
        Self {
            coefficients: vec![0.0; n],
            residual_norm: linalg::norm2(y),
            objective: 0.0,
            dual_objective: 0.0,
            iterations: 0,
            converged: true,
            eta,
            algorithm,
            history: Vec::new(),
        }
    }
}

pub(crate) fn weighted_l1(x: &[f64], w: &[f64]) -> f64 {
    x.iter().zip(w).map(|(a, b)| a.abs() * b).sum()
}

pub(crate) fn residual(a: MatRef<'_, f64>, x: &[f64], y: &[f64]) -> Vec<f64> {
    let ax = linalg::matvec(a, x);
    ax.iter().zip(y).map(|(p, q)| p - q).collect()
}

/// Feasibility slack granted to a converged solve.
pub fn feasible(residual_norm: f64, eta: f64) -> bool {
    residual_norm <= eta * (1.0 + 1e-6) + 1e-10
}

/// Solves `min ||d||_{1,w} s.t. ||A d - y||_2 <= eta`.
///
/// `eta = 0` is replaced by [`ETA_FLOOR`]. Running out of iterations is not an
/// error; the last iterate is returned with `converged = false`.
pub fn solve_wqcbp(
    a: MatRef<'_, f64>,
    y: &[f64],
    w: &WeightVector,
    eta: f64,
    opts: &SolverOptions,
) -> Result<SolverResult> {
    opts.validate()?;
    let (m, n) = (a.nrows(), a.ncols());
    if y.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: y.len() });
    }
    if w.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: w.len() });
    }
    if !eta.is_finite() || eta < 0.0 {
        return Err(Error::InvalidArgument(format!("eta = {eta} must be finite and >= 0")));
    }
    linalg::check_finite(a, &[y, w.values()])?;
    let eta = eta.max(ETA_FLOOR);
    if m == 0 || n == 0 || linalg::norm2(y) <= eta {
        return Ok(SolverResult::zero(n, y, eta, opts.algorithm));
    }
    match opts.algorithm {
        Algorithm::InteriorPoint => ipm::solve(a, y, w.values(), eta, opts),
        Algorithm::PrimalDual => pdhg::solve(a, y, w.values(), eta, opts),
    }
}
