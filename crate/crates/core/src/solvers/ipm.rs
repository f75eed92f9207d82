//! Mehrotra predictor-corrector interior-point method.
//!
//! Variables: dual `l`, slacks `s+ = w - A^T l`, `s- = w + A^T l`, and their
//! multipliers `x+, x- >= 0`, with `d = x+ - x-`. Optimality conditions:
//!
//! ```text
//! A d + eta l / ||l|| = y,   x+ s+ = 0,   x- s- = 0.
//! ```
//!
//! Each Newton step solves `(A D A^T + eta H) dl = rhs` with
//! `D = x+/s+ + x-/s-` and `H = (I - l l^T / ||l||^2) / ||l||`, by Cholesky.
//! Once the support settles, the sign-fixed problem on the support is solved in
//! closed form and certified against the full dual.

use faer::MatRef;

use super::linalg::{self, dot, matvec, matvec_t, norm2, Cholesky, ThinQr};
use super::{feasible, residual, weighted_l1, Algorithm, IterationRecord, SolverOptions, SolverResult};
use crate::Result;

const MAX_IPM_ITERATIONS: usize = 300;
const STEP_FRACTION: f64 = 0.995;
/// Polishing is attempted once the relative gap drops below this.
const POLISH_GAP: f64 = 1e-3;
/// Slack on `|A_j^T l| <= w_j` when certifying a polished solution.
const CERT_SLACK: f64 = 1e-9;
/// A basis read off the Newton scaling is tried below this gap.
const CROSSOVER_GAP: f64 = 1e-5;
const MAX_CROSSOVERS: usize = 6;
/// Restored iterates are tracked below this gap.
const TRACK_GAP: f64 = 1e-4;

pub(super) fn solve(
    a: MatRef<'_, f64>,
    y: &[f64],
    w: &[f64],
    eta: f64,
    opts: &SolverOptions,
) -> Result<SolverResult> {
    if a.nrows() > a.ncols() {
        return solve_tall(a, y, w, eta, opts);
    }
    let mut res = core(a, y, w, eta, opts)?;
    res.residual_norm = norm2(&residual(a, &res.coefficients, y));
    res.converged &= feasible(res.residual_norm, eta);
    Ok(res)
}

/// `m > n`: with `A = QR`, `||A d - y||^2 = ||R d - Q^T y||^2 + ||(I - QQ^T) y||^2`,
/// so the problem reduces to a square one with a smaller radius.
fn solve_tall(
    a: MatRef<'_, f64>,
    y: &[f64],
    w: &[f64],
    eta: f64,
    opts: &SolverOptions,
) -> Result<SolverResult> {
    let qr = a.qr();
    let q = qr.compute_thin_Q();
    let r = qr.thin_R().to_owned();
    let yt = matvec_t(q.as_ref(), y);
    let proj = matvec(q.as_ref(), &yt);
    let perp = norm2(&y.iter().zip(&proj).map(|(p, q)| p - q).collect::<Vec<_>>());
    let n = a.ncols();
    let mut res = if perp > eta {
        // Infeasible: the closest the data allows is the least-squares fit.
        let coefficients = match ThinQr::new(a) {
            Ok(f) => f.solve_r(&yt),
            Err(_) => vec![0.0; n],
        };
        SolverResult {
            objective: weighted_l1(&coefficients, w),
            coefficients,
            residual_norm: perp,
            dual_objective: f64::NAN,
            iterations: 0,
            converged: false,
            eta,
            algorithm: Algorithm::InteriorPoint,
            history: Vec::new(),
        }
    } else {
        let eta2 = (eta * eta - perp * perp).max(0.0).sqrt();
        if norm2(&yt) <= eta2 {
            SolverResult::zero(n, &yt, eta, Algorithm::InteriorPoint)
        } else {
            core(r.as_ref(), &yt, w, eta2, opts)?
        }
    };
    res.eta = eta;
    res.residual_norm = norm2(&residual(a, &res.coefficients, y));
    res.converged &= feasible(res.residual_norm, eta);
    Ok(res)
}

struct State {
    lam: Vec<f64>,
    sp: Vec<f64>,
    sm: Vec<f64>,
    xp: Vec<f64>,
    xm: Vec<f64>,
}

impl State {
    fn x(&self) -> Vec<f64> {
        self.xp.iter().zip(&self.xm).map(|(p, m)| p - m).collect()
    }

    fn complementarity(&self) -> f64 {
        dot(&self.xp, &self.sp) + dot(&self.xm, &self.sm)
    }
}

fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

/// `y^T l - eta ||l||` after scaling `l` into the dual feasible set.
fn feasible_dual_objective(a: MatRef<'_, f64>, y: &[f64], w: &[f64], eta: f64, lam: &[f64]) -> f64 {
    let atl = matvec_t(a, lam);
    let ratio = atl
        .iter()
        .zip(w)
        .map(|(v, wi)| v.abs() / wi)
        .fold(0.0f64, f64::max);
    let t = if ratio > 1.0 { 1.0 / ratio } else { 1.0 };
    t * (dot(y, lam) - eta * norm2(lam))
}

fn rel_gap(primal: f64, dual: f64) -> f64 {
    (primal - dual).max(0.0) / primal.abs().max(dual.abs()).max(1.0)
}

/// Signed support read off complementarity: `x+ > s+` or `x- > s-`.
fn support(st: &State) -> Vec<(usize, f64)> {
    (0..st.xp.len())
        .filter_map(|i| {
            if st.xp[i] > st.sp[i] {
                Some((i, 1.0))
            } else if st.xm[i] > st.sm[i] {
                Some((i, -1.0))
            } else {
                None
            }
        })
        .collect()
}

/// The `m` columns with the largest Newton scaling `x+/s+ + x-/s-`.
fn basis(st: &State, m: usize) -> Vec<(usize, f64)> {
    let n = st.xp.len();
    let scaling: Vec<f64> = (0..n).map(|i| st.xp[i] / st.sp[i] + st.xm[i] / st.sm[i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| scaling[j].total_cmp(&scaling[i]));
    let mut cols: Vec<usize> = order.into_iter().take(m).collect();
    cols.sort_unstable();
    cols.into_iter().map(|i| (i, 0.0)).collect()
}

/// Solves `min (w o sign)^T d_S s.t. ||A_S d_S - y|| <= eta` in closed form and
/// checks it against the full problem. Returns the solution if it is certified by
/// its own dual vector or closes the gap to `dual_bound`.
fn polish(
    a: MatRef<'_, f64>,
    y: &[f64],
    w: &[f64],
    eta: f64,
    supp: &[(usize, f64)],
    dual_bound: f64,
    tol: f64,
) -> Option<(Vec<f64>, f64)> {
    let (m, n) = (a.nrows(), a.ncols());
    if supp.is_empty() || supp.len() > m {
        return None;
    }
    let cols: Vec<usize> = supp.iter().map(|&(i, _)| i).collect();
    let a_s = linalg::select_columns(a, &cols);
    let f = ThinQr::new(a_s.as_ref()).ok()?;
    let yt = matvec_t(f.q.as_ref(), y);
    let x_ls = f.solve_r(&yt);
    // r0 = A_S x_ls - y lies in the orthogonal complement of range(A_S).
    let r0: Vec<f64> = if supp.len() == m {
        vec![0.0; m]
    } else {
        matvec(f.q.as_ref(), &yt).iter().zip(y).map(|(p, q)| p - q).collect()
    };
    let r0n = norm2(&r0);
    if r0n > eta {
        return None;
    }
    // A square basis takes its signs from the interpolant.
    let supp: Vec<(usize, f64)> = if supp.len() == m {
        cols.iter().zip(&x_ls).map(|(&i, v)| (i, if *v < 0.0 { -1.0 } else { 1.0 })).collect()
    } else {
        supp.to_vec()
    };
    let ws: Vec<f64> = supp.iter().map(|&(i, s)| w[i] * s).collect();
    let b = f.solve_rt(&ws);
    let g = f.solve_r(&b);
    let bn = norm2(&b);
    if bn == 0.0 {
        return None;
    }
    let mu = (eta * eta - r0n * r0n).max(0.0).sqrt() / bn;
    let xs: Vec<f64> = x_ls.iter().zip(&g).map(|(p, q)| p - mu * q).collect();
    if xs.iter().zip(&supp).any(|(v, &(_, s))| v * s <= 0.0) {
        return None;
    }
    let mut x = vec![0.0; n];
    for (&(i, _), v) in supp.iter().zip(&xs) {
        x[i] = *v;
    }
    let primal = weighted_l1(&x, w);

    // Dual candidate l = A_S g - r0 / mu satisfies A_S^T l = w o sign.
    let qb = matvec(f.q.as_ref(), &b);
    let lam: Vec<f64> = if mu > 0.0 {
        qb.iter().zip(&r0).map(|(p, r)| p - r / mu).collect()
    } else {
        qb
    };
    let atl = matvec_t(a, &lam);
    let worst = atl
        .iter()
        .zip(w)
        .map(|(v, wi)| v.abs() / wi)
        .fold(0.0f64, f64::max);
    let own = feasible_dual_objective(a, y, w, eta, &lam);
    let dual = own.max(dual_bound);
    if worst <= 1.0 + CERT_SLACK || rel_gap(primal, dual) <= tol {
        return Some((x, dual));
    }
    None
}

fn core(
    a: MatRef<'_, f64>,
    y: &[f64],
    w: &[f64],
    eta: f64,
    opts: &SolverOptions,
) -> Result<SolverResult> {
    let (m, n) = (a.nrows(), a.ncols());
    let scale = norm2(y);
    let y: Vec<f64> = y.iter().map(|v| v / scale).collect();
    let eta_s = eta / scale;
    let tol = opts.tol;
    let max_it = opts.max_iterations.min(MAX_IPM_ITERATIONS);

    let finish = |x: Vec<f64>, dual: f64, iterations: usize, converged: bool, history: Vec<IterationRecord>| {
        let coefficients: Vec<f64> = x.iter().map(|v| v * scale).collect();
        SolverResult {
            objective: weighted_l1(&coefficients, w),
            residual_norm: f64::NAN,
            coefficients,
            dual_objective: dual * scale,
            iterations,
            converged,
            eta,
            algorithm: Algorithm::InteriorPoint,
            history,
        }
    };

    // A A^T for the starting point and the final feasibility restoration.
    let mut aat = linalg::gram_lower(a);
    let diag_max = (0..m).map(|i| aat[(i, i)]).fold(0.0f64, f64::max);
    for i in 0..m {
        aat[(i, i)] += 1e-13 * diag_max.max(1e-300);
    }
    let aat = Cholesky::new(aat.as_ref())?;

    let aty = matvec_t(a, &y);
    let ratio = aty.iter().zip(w).map(|(v, wi)| v.abs() / wi).fold(0.0f64, f64::max);
    if ratio == 0.0 {
        return Ok(finish(vec![0.0; n], 0.0, 0, false, Vec::new()));
    }
    let lam: Vec<f64> = y.iter().map(|v| v * 0.1 / ratio).collect();
    let atl = matvec_t(a, &lam);
    let sp: Vec<f64> = w.iter().zip(&atl).map(|(wi, v)| wi - v).collect();
    let sm: Vec<f64> = w.iter().zip(&atl).map(|(wi, v)| wi + v).collect();
    let x_mn = matvec_t(a, &aat.solve(&y));
    let xinf = x_mn.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let eps0 = (1e-2 * xinf).max(1e-8);
    let mut xp: Vec<f64> = x_mn.iter().map(|v| v.max(0.0) + eps0).collect();
    let mut xm: Vec<f64> = x_mn.iter().map(|v| (-v).max(0.0) + eps0).collect();
    let shift = 0.5 * (dot(&xp, &sp) + dot(&xm, &sm)) / (sp.iter().sum::<f64>() + sm.iter().sum::<f64>());
    xp.iter_mut().for_each(|v| *v += shift);
    xm.iter_mut().for_each(|v| *v += shift);
    let mut st = State { lam, sp, sm, xp, xm };

    let mut history = Vec::new();
    let mut last_support: Vec<(usize, f64)> = Vec::new();
    let mut tried_support: Vec<(usize, f64)> = Vec::new();
    let mut stall = 0usize;
    let mut last_basis: Vec<(usize, f64)> = Vec::new();
    let mut crossovers = 0usize;
    let mut best: Option<Vec<f64>> = None;
    let mut best_obj = f64::INFINITY;
    let mut best_bound = f64::NEG_INFINITY;
    let mut since_best = 0usize;
    let wnorm = norm2(w);
    let mut iterations = 0usize;

    loop {
        let x = st.x();
        let lam_norm = norm2(&st.lam);
        let lhat: Vec<f64> = st.lam.iter().map(|v| v / lam_norm).collect();
        let ax = matvec(a, &x);
        let rd: Vec<f64> = (0..m).map(|i| y[i] - eta_s * lhat[i] - ax[i]).collect();
        let atl = matvec_t(a, &st.lam);
        let rsp: Vec<f64> = (0..n).map(|i| w[i] - atl[i] - st.sp[i]).collect();
        let rsm: Vec<f64> = (0..n).map(|i| w[i] + atl[i] - st.sm[i]).collect();
        let comp = st.complementarity();
        let dual = dot(&y, &st.lam) - eta_s * lam_norm;
        let primal = weighted_l1(&x, w);
        let gap = comp / (1.0 + dual.abs());
        let rd_n = norm2(&rd);
        let rs_n = (norm2(&rsp) + norm2(&rsm)) / (1.0 + wnorm);
        if opts.record_history {
            history.push(IterationRecord {
                iteration: iterations,
                primal_objective: primal * scale,
                dual_objective: dual * scale,
                residual: rd_n * scale,
                gap,
            });
        }

        let done = gap <= tol && rs_n <= tol;
        best_bound = best_bound.max(feasible_dual_objective(a, &y, w, eta_s, &st.lam));
        if gap <= POLISH_GAP || done {
            let supp = support(&st);
            if supp == last_support && supp != tried_support || done {
                tried_support = supp.clone();
                if let Some((xp, dual)) = polish(a, &y, w, eta_s, &supp, best_bound, tol) {
                    return Ok(finish(xp, dual, iterations, true, history));
                }
            }
            last_support = supp;
        }
        if gap <= CROSSOVER_GAP && crossovers < MAX_CROSSOVERS {
            let cand = basis(&st, m);
            if cand != last_basis {
                crossovers += 1;
                if let Some((xp, dual)) = polish(a, &y, w, eta_s, &cand, best_bound, tol) {
                    return Ok(finish(xp, dual, iterations, true, history));
                }
                last_basis = cand;
            }
        }
        // Rounding in the normal equations lets the primal residual creep up
        // late in the run, so keep the best restored iterate seen.
        if gap <= TRACK_GAP {
            let xr = restore(a, &aat, &x, &y, eta_s);
            let obj = weighted_l1(&xr, w);
            if obj < best_obj && feasible(norm2(&residual(a, &xr, &y)), eta_s) {
                best = Some(xr);
                best_obj = obj;
                since_best = 0;
            } else {
                since_best += 1;
            }
        }
        let certified = best.is_some() && rel_gap(best_obj, best_bound) <= tol;
        if certified || done || since_best >= 12 || iterations >= max_it || stall >= 5 {
            let (x, ok) = match best {
                Some(xb) => (xb, rel_gap(best_obj, best_bound) <= tol.sqrt()),
                None => (restore(a, &aat, &x, &y, eta_s), false),
            };
            return Ok(finish(x, best_bound, iterations, ok, history));
        }
        iterations += 1;

        // Newton system.
        let dvec: Vec<f64> = (0..n).map(|i| st.xp[i] / st.sp[i] + st.xm[i] / st.sm[i]).collect();
        let mut b = a.to_owned();
        for j in 0..n {
            let s = dvec[j].sqrt();
            b.col_mut(j).iter_mut().for_each(|v| *v *= s);
        }
        let mut mat = linalg::gram_lower(b.as_ref());
        let h = eta_s / lam_norm;
        for j in 0..m {
            for i in j..m {
                mat[(i, j)] -= h * lhat[i] * lhat[j];
            }
            mat[(j, j)] += h;
        }
        let dmax = (0..m).map(|i| mat[(i, i)]).fold(0.0f64, f64::max);
        let mut reg = 1e-14 * dmax;
        let chol = loop {
            let mut shifted = mat.clone();
            for i in 0..m {
                shifted[(i, i)] += reg;
            }
            match Cholesky::new(shifted.as_ref()) {
                Ok(c) => break Some(c),
                Err(_) if reg < 1e-6 * dmax => reg *= 100.0,
                Err(_) => break None,
            }
        };
        let Some(chol) = chol else {
            stall = usize::MAX / 2;
            continue;
        };
        let direction = |rcp: &[f64], rcm: &[f64]| -> Dir {
            let q: Vec<f64> = (0..n)
                .map(|i| (rcp[i] - st.xp[i] * rsp[i]) / st.sp[i] - (rcm[i] - st.xm[i] * rsm[i]) / st.sm[i])
                .collect();
            let aq = matvec(a, &q);
            let rhs: Vec<f64> = (0..m).map(|i| rd[i] - aq[i]).collect();
            let dl = chol.solve(&rhs);
            let du = matvec_t(a, &dl);
            let dsp: Vec<f64> = (0..n).map(|i| rsp[i] - du[i]).collect();
            let dsm: Vec<f64> = (0..n).map(|i| rsm[i] + du[i]).collect();
            let dxp: Vec<f64> = (0..n).map(|i| (rcp[i] - st.xp[i] * dsp[i]) / st.sp[i]).collect();
            let dxm: Vec<f64> = (0..n).map(|i| (rcm[i] - st.xm[i] * dsm[i]) / st.sm[i]).collect();
            Dir { dl, dsp, dsm, dxp, dxm }
        };
        let steps = |d: &Dir| -> (f64, f64) {
            let ap = max_step(&st.xp, &d.dxp).min(max_step(&st.xm, &d.dxm));
            let ad = max_step(&st.sp, &d.dsp).min(max_step(&st.sm, &d.dsm));
            (ap, ad)
        };

        let mu = comp / (2 * n) as f64;
        let rcp: Vec<f64> = (0..n).map(|i| -st.xp[i] * st.sp[i]).collect();
        let rcm: Vec<f64> = (0..n).map(|i| -st.xm[i] * st.sm[i]).collect();
        let aff = direction(&rcp, &rcm);
        let (ap, ad) = steps(&aff);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mu_aff = (0..n)
            .map(|i| {
                (st.xp[i] + ap * aff.dxp[i]) * (st.sp[i] + ad * aff.dsp[i])
                    + (st.xm[i] + ap * aff.dxm[i]) * (st.sm[i] + ad * aff.dsm[i])
            })
            .sum::<f64>()
            / (2 * n) as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let rcp: Vec<f64> = (0..n)
            .map(|i| sigma * mu - st.xp[i] * st.sp[i] - aff.dxp[i] * aff.dsp[i])
            .collect();
        let rcm: Vec<f64> = (0..n)
            .map(|i| sigma * mu - st.xm[i] * st.sm[i] - aff.dxm[i] * aff.dsm[i])
            .collect();
        let d = direction(&rcp, &rcm);
        let (ap, ad) = steps(&d);
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            stall += 1;
        } else {
            stall = 0;
        }
        for i in 0..n {
            st.xp[i] += ap * d.dxp[i];
            st.xm[i] += ap * d.dxm[i];
            st.sp[i] += ad * d.dsp[i];
            st.sm[i] += ad * d.dsm[i];
        }
        for (l, dl) in st.lam.iter_mut().zip(&d.dl) {
            *l += ad * dl;
        }
    }
}

struct Dir {
    dl: Vec<f64>,
    dsp: Vec<f64>,
    dsm: Vec<f64>,
    dxp: Vec<f64>,
    dxm: Vec<f64>,
}

/// Least-norm correction moving `x` into the constraint ball:
/// `x - A^T (A A^T)^{-1} (r - r min(1, eta / ||r||))` with `r = A x - y`.
fn restore(a: MatRef<'_, f64>, aat: &Cholesky, x: &[f64], y: &[f64], eta: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    // A second pass absorbs rounding in the first.
    for _ in 0..2 {
        let r = residual(a, &out, y);
        let rn = norm2(&r);
        if rn <= eta {
            break;
        }
        let keep = eta / rn;
        let excess: Vec<f64> = r.iter().map(|v| v * (1.0 - keep)).collect();
        let corr = matvec_t(a, &aat.solve(&excess));
        out.iter_mut().zip(&corr).for_each(|(p, q)| *p -= q);
    }
    out
}
