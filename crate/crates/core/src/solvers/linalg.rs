//! Dense linear algebra helpers on top of faer.

use faer::linalg::matmul::triangular::{self as tri, BlockStructure};
use faer::linalg::solvers::SolveLstsq;
use faer::linalg::triangular_solve;
use faer::{Accum, ColRef, Mat, MatRef, Par, Side};

use crate::{Error, Result};

/// Relative pivot below which a QR factor is treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `A x`.
pub fn matvec(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    let out = a * ColRef::from_slice(x);
    out.iter().copied().collect()
}

/// `A^T x`.
pub fn matvec_t(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    let out = a.transpose() * ColRef::from_slice(x);
    out.iter().copied().collect()
}

pub fn check_finite(a: MatRef<'_, f64>, vs: &[&[f64]]) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if !a[(i, j)].is_finite() {
                return Err(Error::NonFinite);
            }
        }
    }
    if vs.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Lower triangle of `B B^T` (the strict upper triangle is left at zero).
pub fn gram_lower(b: MatRef<'_, f64>) -> Mat<f64> {
    let m = b.nrows();
    let mut g = Mat::<f64>::zeros(m, m);
    tri::matmul(
        g.as_mut(),
        BlockStructure::TriangularLower,
        Accum::Replace,
        b,
        BlockStructure::Rectangular,
        b.transpose(),
        BlockStructure::Rectangular,
        1.0,
        Par::Seq,
    );
    g
}

/// Full symmetric `B B^T`.
pub fn gram(b: MatRef<'_, f64>) -> Mat<f64> {
    let mut g = gram_lower(b);
    for j in 0..g.ncols() {
        for i in 0..j {
            g[(i, j)] = g[(j, i)];
        }
    }
    g
}

/// Solves `L L^T x = b` for a lower Cholesky factor of `m` (reading its lower triangle).
pub struct Cholesky {
    llt: faer::linalg::solvers::Llt<f64>,
}

impl Cholesky {
    pub fn new(m: MatRef<'_, f64>) -> Result<Self> {
        m.llt(Side::Lower)
            .map(|llt| Self { llt })
            .map_err(|e| Error::LinearAlgebra(format!("Cholesky factorization failed: {e:?}")))
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        use faer::linalg::solvers::Solve;
        let x = self.llt.solve(ColRef::from_slice(b));
        x.iter().copied().collect()
    }
}

/// Power-iteration estimate of `||A||_2`.
pub fn operator_norm(a: MatRef<'_, f64>, iterations: usize) -> Result<f64> {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    // Deterministic, generic start vector.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    let mut est = 0.0;
    for _ in 0..iterations.max(1) {
        let nv = norm2(&v);
        if nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let av = matvec(a, &v);
        est = norm2(&av);
        if est == 0.0 {
            break;
        }
        let next = matvec_t(a, &av);
        let rel = (norm2(&next) / est - est).abs();
        v = next;
        if rel <= 1e-12 * est {
            break;
        }
    }
    if est == 0.0 {
        return Err(Error::InvalidArgument("zero matrix has no useful operator norm".into()));
    }
    Ok(est)
}

/// Thin QR of a tall matrix with a rank check.
pub struct ThinQr {
    pub q: Mat<f64>,
    pub r: Mat<f64>,
}

impl ThinQr {
    pub fn new(a: MatRef<'_, f64>) -> Result<Self> {
        let (m, k) = (a.nrows(), a.ncols());
        if m < k {
            return Err(Error::InvalidArgument(format!(
                "least squares needs at least as many rows as columns ({m} < {k})"
            )));
        }
        let qr = a.qr();
        let r = qr.thin_R().to_owned();
        let ratio = pivot_ratio(r.as_ref());
        if ratio < RANK_TOLERANCE {
            return Err(Error::RankDeficient { ratio });
        }
        Ok(Self { q: qr.compute_thin_Q(), r })
    }

    /// `R^{-1} b`.
    pub fn solve_r(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        triangular_solve::solve_upper_triangular_in_place(self.r.as_ref(), x.as_mut(), Par::Seq);
        x.col(0).iter().copied().collect()
    }

    /// `R^{-T} b`.
    pub fn solve_rt(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        triangular_solve::solve_lower_triangular_in_place(self.r.transpose(), x.as_mut(), Par::Seq);
        x.col(0).iter().copied().collect()
    }
}

fn pivot_ratio(r: MatRef<'_, f64>) -> f64 {
    let k = r.ncols().min(r.nrows());
    if k == 0 {
        return 1.0;
    }
    let diag: Vec<f64> = (0..k).map(|i| r[(i, i)].abs()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

/// Minimiser of `||A c - y||_2` by blocked Householder QR.
pub fn solve_least_squares(a: MatRef<'_, f64>, y: &[f64]) -> Result<Vec<f64>> {
    let (m, k) = (a.nrows(), a.ncols());
    if y.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: y.len() });
    }
    if m < k {
        return Err(Error::InvalidArgument(format!(
            "least squares needs at least as many rows as columns ({m} < {k})"
        )));
    }
    check_finite(a, &[y])?;
    let qr = a.qr();
    let ratio = pivot_ratio(qr.thin_R());
    if ratio < RANK_TOLERANCE {
        return Err(Error::RankDeficient { ratio });
    }
    let x = qr.solve_lstsq(ColRef::from_slice(y));
    Ok(x.iter().copied().collect())
}

/// Singular values in nonincreasing order.
pub fn singular_values(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    a.singular_values()
        .map_err(|e| Error::LinearAlgebra(format!("SVD failed: {e:?}")))
}

/// Smallest of the `min(rows, cols)` singular values.
pub fn min_singular_value(a: MatRef<'_, f64>) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0.0);
    }
    check_finite(a, &[])?;
    Ok(singular_values(a)?.last().copied().unwrap_or(0.0))
}

/// Eigenvalues of a symmetric matrix (lower triangle read), nondecreasing.
pub fn symmetric_eigenvalues(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("eigenvalue solver failed: {e:?}")))
}

/// `||A_S^T A_S - I||_2`.
pub fn conditioning_check(a_s: MatRef<'_, f64>) -> Result<f64> {
    let mut g = gram(a_s.transpose());
    for i in 0..g.nrows() {
        g[(i, i)] -= 1.0;
    }
    let ev = symmetric_eigenvalues(g.as_ref())?;
    Ok(ev.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
}

/// Columns `cols` of `a` as a new matrix.
pub fn select_columns(a: MatRef<'_, f64>, cols: &[usize]) -> Mat<f64> {
    Mat::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}
