//! Error norms and conditioning diagnostics.
//!
//! The `L^inf` error is a Monte-Carlo maximum over uniform points and is therefore a
//! lower bound on the true sup norm.

use faer::{Mat, MatRef};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimators::Surrogate;
use crate::measurement::{sampling_matrix, TargetFunction};
use crate::multiindex::{enumerate_lower_sets, intrinsic_weight_sq, IndexSet, WeightVector};
use crate::polybasis::{sample_measure, sample_uniform, BasisSpec, Family, SamplePoint};
use crate::rng::{tag, SeedKey};
use crate::solvers::linalg::{conditioning_check, gram, select_columns, symmetric_eigenvalues};
use crate::{Error, Result};

pub const DEFAULT_L2_POINTS: usize = 20_000;
pub const DEFAULT_LINF_POINTS: usize = 100_000;
/// Largest `|Lambda|` accepted by the brute-force restricted isometry routines.
pub const RIC_MAX_COLUMNS: usize = 60;
/// Largest number of candidate supports the brute-force routines will visit.
pub const RIC_MAX_SUPPORTS: u64 = 5_000_000;
/// `sigma_min / sigma_max` below which `A` is treated as rank deficient.
const RANK_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub l2_error: f64,
    pub linf_error: f64,
    pub l2_points: usize,
    pub linf_points: usize,
    pub seed: SeedKey,
}

fn pointwise_errors(f: &TargetFunction, s: &Surrogate, points: &[SamplePoint]) -> Result<Vec<f64>> {
    if f.dim() != s.basis.d {
        return Err(Error::DimensionMismatch { expected: s.basis.d, found: f.dim() });
    }
    let fv = f.eval_points(points)?;
    let sv = s.eval_points(points)?;
    Ok(fv.iter().zip(&sv).map(|(a, b)| (a - b).abs()).collect())
}

/// RMS of `f - s` over `n` points drawn from the orthogonality measure.
pub fn error_l2_mc(f: &TargetFunction, s: &Surrogate, n: usize, key: SeedKey) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one Monte-Carlo point".into()));
    }
    let pts = sample_measure(s.basis, n, key.with_tag(tag::ERROR_L2_POINTS));
    let e = pointwise_errors(f, s, &pts)?;
    Ok((e.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt())
}

/// Max of `|f - s|` over `n` uniform points on `[-1, 1]^d`.
pub fn error_linf_mc(f: &TargetFunction, s: &Surrogate, n: usize, key: SeedKey) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one Monte-Carlo point".into()));
    }
    let pts = sample_uniform(s.basis.d, n, key.with_tag(tag::ERROR_LINF_POINTS));
    let e = pointwise_errors(f, s, &pts)?;
    Ok(e.into_iter().fold(0.0, f64::max))
}

pub fn error_report(
    f: &TargetFunction,
    s: &Surrogate,
    l2_points: usize,
    linf_points: usize,
    key: SeedKey,
) -> Result<ErrorReport> {
    Ok(ErrorReport {
        l2_error: error_l2_mc(f, s, l2_points, key)?,
        linf_error: error_linf_mc(f, s, linf_points, key)?,
        l2_points,
        linf_points,
        seed: key,
    })
}

/// `sigma_min(A^T)` from the eigenvalues of the `m x m` Gram `A A^T`.
fn min_singular_value_wide(a: MatRef<'_, f64>) -> Result<f64> {
    let ev = symmetric_eigenvalues(gram(a).as_ref())?;
    let (lo, hi) = (ev[0], *ev.last().unwrap());
    let ratio = if hi > 0.0 { lo.max(0.0).sqrt() / hi.sqrt() } else { 0.0 };
    if !(ratio > RANK_TOL) {
        return Err(Error::RankDeficient { ratio });
    }
    Ok(lo.sqrt())
}

/// `|Lambda|_{1,u} = sum_i u_i^2` with intrinsic weights.
pub fn lambda_weighted_size(lambda: &IndexSet, family: Family) -> Result<f64> {
    Ok(lambda.iter().map(|i| intrinsic_weight_sq(i, family)).sum())
}

/// `Q_u(A) = sqrt(|Lambda|_{1,u} / n) / sigma_min(sqrt(m/n) A^T)`.
pub fn qu_constant(a: MatRef<'_, f64>, lambda: &IndexSet, basis: BasisSpec) -> Result<f64> {
    let (m, n) = (a.nrows(), a.ncols());
    if n != lambda.len() {
        return Err(Error::DimensionMismatch { expected: lambda.len(), found: n });
    }
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    let sigma = min_singular_value_wide(a)? * (m as f64 / n as f64).sqrt();
    Ok((lambda_weighted_size(lambda, basis.family)? / n as f64).sqrt() / sigma)
}

const GRAM_CHUNK: usize = 64;

/// Smallest eigenvalue of the average of `(m/n) A A^T` over `trials` draws.
pub fn empirical_gram_min_eig(
    basis: BasisSpec,
    lambda: &IndexSet,
    m: usize,
    trials: usize,
    key: SeedKey,
) -> Result<f64> {
    if trials == 0 || m == 0 {
        return Err(Error::InvalidArgument("need trials >= 1 and m >= 1".into()));
    }
    let n = lambda.len();
    let scale = m as f64 / n as f64 / trials as f64;
    // Fixed chunks summed in order keep the result independent of scheduling.
    let chunks: Vec<usize> = (0..trials).step_by(GRAM_CHUNK).collect();
    let partial: Vec<Mat<f64>> = chunks
        .par_iter()
        .map(|&start| -> Result<Mat<f64>> {
            let mut acc = Mat::<f64>::zeros(m, m);
            for t in start..(start + GRAM_CHUNK).min(trials) {
                let k = key.with_tag(tag::GRAM_POINTS).with_trial(t as u64);
                let a = sampling_matrix(lambda, basis, &sample_measure(basis, m, k))?;
                acc += gram(a.as_ref());
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut b = Mat::<f64>::zeros(m, m);
    for p in &partial {
        b += p;
    }
    b *= faer::Scale(scale);
    Ok(symmetric_eigenvalues(b.as_ref())?[0])
}

/// Visits every maximal subset of `0..n` with `sum cost <= budget`; `cost` must be > 0.
fn for_each_maximal_support<F>(cost: &[f64], budget: f64, mut visit: F) -> Result<()>
where
    F: FnMut(&[usize]) -> Result<()>,
{
    fn rec<F: FnMut(&[usize]) -> Result<()>>(
        cost: &[f64],
        budget: f64,
        start: usize,
        used: f64,
        cur: &mut Vec<usize>,
        count: &mut u64,
        visit: &mut F,
    ) -> Result<()> {
        *count += 1;
        if *count > RIC_MAX_SUPPORTS {
            return Err(Error::EnumerationGuard(format!("more than {RIC_MAX_SUPPORTS} supports")));
        }
        let mut extended = false;
        for j in start..cost.len() {
            if used + cost[j] <= budget {
                extended = true;
                cur.push(j);
                rec(cost, budget, j + 1, used + cost[j], cur, count, visit)?;
                cur.pop();
            }
        }
        if !extended {
            // Maximal only if no skipped index fits either.
            let fits = (0..start).any(|j| !cur.contains(&j) && used + cost[j] <= budget);
            if !fits && !cur.is_empty() {
                visit(cur)?;
            }
        }
        Ok(())
    }
    let mut count = 0;
    rec(cost, budget * (1.0 + 1e-12), 0, 0.0, &mut Vec::new(), &mut count, &mut visit)
}

fn worst_gram_deviation(a: MatRef<'_, f64>, cost: &[f64], budget: f64) -> Result<f64> {
    if a.ncols() > RIC_MAX_COLUMNS {
        return Err(Error::EnumerationGuard(format!(
            "{} columns exceeds the limit of {RIC_MAX_COLUMNS}",
            a.ncols()
        )));
    }
    let mut worst = 0.0f64;
    for_each_maximal_support(cost, budget, |s| {
        worst = worst.max(conditioning_check(select_columns(a, s).as_ref())?);
        Ok(())
    })?;
    Ok(worst)
}

/// Classical restricted isometry constant: worst `||A_S^T A_S - I||_2` over `|S| <= k`.
pub fn ric_bruteforce(a: MatRef<'_, f64>, k: usize) -> Result<f64> {
    worst_gram_deviation(a, &vec![1.0; a.ncols()], k as f64)
}

/// `s(k)` restricted to lower sets inside `lambda`. Equals the unrestricted value
/// whenever `lambda` contains every lower set of size `<= k`, e.g. `lambda ⊇ HC_k`.
pub fn lower_budget_within(lambda: &IndexSet, k: usize, u: &WeightVector) -> Result<f64> {
    let mut best = 0.0f64;
    for s in enumerate_lower_sets(lambda.dim(), k) {
        let s = s?;
        let pos: Option<Vec<usize>> = s.iter().map(|i| lambda.position(i)).collect();
        if let Some(pos) = pos {
            best = best.max(pos.iter().map(|&p| u.values()[p].powi(2)).sum());
        }
    }
    Ok(best)
}

/// Lower restricted isometry constant: worst `||A_S^T A_S - I||_2` over all
/// `S ⊆ lambda` with `|S|_u <= s(k)`.
pub fn lower_ric_bruteforce(a: MatRef<'_, f64>, lambda: &IndexSet, k: usize, u: &WeightVector) -> Result<f64> {
    if a.ncols() != lambda.len() || u.len() != lambda.len() {
        return Err(Error::DimensionMismatch { expected: lambda.len(), found: a.ncols() });
    }
    if lambda.len() > RIC_MAX_COLUMNS {
        return Err(Error::EnumerationGuard(format!(
            "|Lambda| = {} exceeds the limit of {RIC_MAX_COLUMNS}",
            lambda.len()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("need k >= 1".into()));
    }
    let budget = lower_budget_within(lambda, k, u)?;
    let cost: Vec<f64> = u.values().iter().map(|v| v * v).collect();
    worst_gram_deviation(a, &cost, budget)
}

/// `Q_u(A) max(e_norm - eta, 0) k^(alpha/2)`, with `alpha = 1` for Chebyshev and
/// `2` for Legendre. The log factor of the full estimate is not included.
pub fn tail_term_bound(
    a: MatRef<'_, f64>,
    lambda: &IndexSet,
    basis: BasisSpec,
    e_norm: f64,
    eta: f64,
    k: f64,
) -> Result<f64> {
    if !(e_norm >= 0.0 && eta >= 0.0 && k >= 1.0) {
        return Err(Error::InvalidArgument("need e_norm >= 0, eta >= 0, k >= 1".into()));
    }
    let q = qu_constant(a, lambda, basis)?;
    let alpha = match basis.family {
        Family::Chebyshev => 1.0,
        Family::Legendre => 2.0,
    };
    Ok(q * (e_norm - eta).max(0.0) * k.powf(alpha / 2.0))
}

#[cfg(test)]
mod tests;
