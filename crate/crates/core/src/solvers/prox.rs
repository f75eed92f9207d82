//! Proximal maps used by the primal-dual iteration.

/// `sign(v_i) max(|v_i| - tau w_i, 0)`, the prox of `tau ||.||_{1,w}`.
pub fn weighted_soft_threshold(v: &[f64], tau: f64, w: &[f64]) -> Vec<f64> {
    v.iter()
        .zip(w)
        .map(|(&vi, &wi)| {
            let t = tau * wi;
            if vi > t {
                vi - t
            } else if vi < -t {
                vi + t
            } else {
                0.0
            }
        })
        .collect()
}

/// Euclidean projection of `r` onto the ball of radius `eta` around `center`.
pub fn project_l2_ball(r: &[f64], center: &[f64], eta: f64) -> Vec<f64> {
    let dist = r
        .iter()
        .zip(center)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if dist <= eta {
        return r.to_vec();
    }
    let s = eta / dist;
    r.iter().zip(center).map(|(a, b)| b + s * (a - b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn soft_threshold_closed_form() {
        assert_eq!(weighted_soft_threshold(&[0.0, 0.0], 0.7, &[1.0, 2.0]), vec![0.0, 0.0]);
        assert_eq!(weighted_soft_threshold(&[3.0], 0.5, &[2.0]), vec![2.0]);
        assert_eq!(weighted_soft_threshold(&[-3.0], 0.5, &[2.0]), vec![-2.0]);
        assert_eq!(weighted_soft_threshold(&[0.9, -1.0], 0.5, &[2.0, 2.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn ball_projection_closed_form() {
        let y = [1.0, -2.0, 0.5];
        assert_eq!(project_l2_ball(&y, &y, 0.3), y.to_vec());
        let r = [4.0, 2.0, -1.0];
        assert_eq!(project_l2_ball(&r, &y, 0.0), y.to_vec());
        // ||r - y|| = 2 eta: lands at the midpoint.
        let eta = 0.75;
        let dir = [0.6, 0.0, 0.8];
        let r: Vec<f64> = y.iter().zip(dir).map(|(c, d)| c + 2.0 * eta * d).collect();
        let p = project_l2_ball(&r, &y, eta);
        for k in 0..3 {
            assert!((p[k] - (y[k] + eta * dir[k])).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn prop_soft_threshold_minimises_prox_objective(
            v in -5.0f64..5.0, tau in 0.01f64..2.0, w in 1.0f64..4.0,
        ) {
            let x = weighted_soft_threshold(&[v], tau, &[w])[0];
            let obj = |t: f64| tau * w * t.abs() + 0.5 * (t - v) * (t - v);
            let best = obj(x);
            // Grid search over [-6, 6] with step 1e-4.
            let mut grid_min = f64::INFINITY;
            for g in 0..=120_000 {
                let t = -6.0 + g as f64 * 1e-4;
                grid_min = grid_min.min(obj(t));
            }
            prop_assert!(best <= grid_min + 1e-12);
        }

        #[test]
        fn prop_projection_is_inside_and_idempotent(
            r in proptest::collection::vec(-3.0f64..3.0, 4),
            c in proptest::collection::vec(-3.0f64..3.0, 4),
            eta in 0.0f64..2.0,
        ) {
            let p = project_l2_ball(&r, &c, eta);
            let d = p.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            prop_assert!(d <= eta * (1.0 + 1e-12) + 1e-15);
            let q = project_l2_ball(&p, &c, eta);
            for k in 0..4 {
                prop_assert!((p[k] - q[k]).abs() <= 1e-12);
            }
        }
    }
}
