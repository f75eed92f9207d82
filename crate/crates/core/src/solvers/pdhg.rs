//! Chambolle-Pock primal-dual splitting for `min ||d||_{1,w} + I_ball(A d)`.
//!
//! ```text
//! d+ = soft(d - tau A^T p, tau, w)
//! p+ = v - sigma proj_ball(v / sigma),  v = p + sigma A (2 d+ - d)
//! ```
//!
//! with `sigma = tau = safety / ||A||_2`.

use faer::MatRef;

use super::linalg::{matvec, matvec_t, norm2, operator_norm};
use super::prox::{project_l2_ball, weighted_soft_threshold};
use super::{feasible, residual, weighted_l1, Algorithm, IterationRecord, SolverOptions, SolverResult};
use crate::Result;

pub(super) fn solve(
    a: MatRef<'_, f64>,
    y: &[f64],
    w: &[f64],
    eta: f64,
    opts: &SolverOptions,
) -> Result<SolverResult> {
    let (m, n) = (a.nrows(), a.ncols());
    let l = operator_norm(a, 200)? * 1.01;
    let tau = opts.safety / l;
    let sigma = opts.safety / l;

    let mut x = vec![0.0; n];
    let mut p = vec![0.0; m];
    let mut atp = vec![0.0; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        iterations += 1;
        let v: Vec<f64> = x.iter().zip(&atp).map(|(xi, gi)| xi - tau * gi).collect();
        let x_new = weighted_soft_threshold(&v, tau, w);
        let xbar: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| 2.0 * a - b).collect();
        let axbar = matvec(a, &xbar);
        let u: Vec<f64> = p.iter().zip(&axbar).map(|(pi, ai)| pi + sigma * ai).collect();
        let scaled: Vec<f64> = u.iter().map(|v| v / sigma).collect();
        let proj = project_l2_ball(&scaled, y, eta);
        let p_new: Vec<f64> = u.iter().zip(&proj).map(|(ui, qi)| ui - sigma * qi).collect();
        let atp_new = matvec_t(a, &p_new);

        // Residuals of the saddle-point optimality conditions.
        let dx: Vec<f64> = x.iter().zip(&x_new).map(|(a, b)| a - b).collect();
        let dp: Vec<f64> = p.iter().zip(&p_new).map(|(a, b)| a - b).collect();
        let datp: Vec<f64> = atp.iter().zip(&atp_new).map(|(a, b)| a - b).collect();
        let adx = matvec(a, &dx);
        let primal_res = norm2(
            &dx.iter().zip(&datp).map(|(d, g)| d / tau - g).collect::<Vec<_>>(),
        );
        let dual_res = norm2(&dp.iter().zip(&adx).map(|(d, g)| d / sigma - g).collect::<Vec<_>>());

        x = x_new;
        p = p_new;
        atp = atp_new;

        let xs = norm2(&x).max(norm2(&atp)).max(1e-300);
        let ps = norm2(&p).max(norm2(&matvec(a, &x))).max(1e-300);
        let rel = (primal_res / xs).max(dual_res / ps);
        if opts.record_history {
            let r = residual(a, &x, y);
            history.push(IterationRecord {
                iteration: iterations,
                primal_objective: weighted_l1(&x, w),
                dual_objective: f64::NAN,
                residual: norm2(&r),
                gap: rel,
            });
        }
        if rel <= opts.tol && iterations % 10 == 0 {
            let r = norm2(&residual(a, &x, y));
            if feasible(r, eta) {
                converged = true;
                break;
            }
        }
    }

    let residual_norm = norm2(&residual(a, &x, y));
    Ok(SolverResult {
        objective: weighted_l1(&x, w),
        coefficients: x,
        residual_norm,
        dual_objective: f64::NAN,
        iterations,
        converged: converged && feasible(residual_norm, eta),
        eta,
        algorithm: Algorithm::PrimalDual,
        history,
    })
}
