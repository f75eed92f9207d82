//! Oracle least-squares and cross-validated estimates of the noise level.
//!
//!     cargo run --release --example eta_estimation

use polycs::estimators::{estimate_eta_cv, estimate_eta_oracle};
use polycs::experiment::test_function;
use polycs::measurement::{add_noise, assemble};
use polycs::multiindex::hyperbolic_cross;
use polycs::polybasis::sample_measure;
use polycs::rng::tag;
use polycs::solvers::SolverOptions;
use polycs::{BasisSpec, Family, SeedKey, WeightVector};

fn main() -> polycs::Result<()> {
    let (d, k, m, noise) = (4, 16, 120, 1e-3);
    let basis = BasisSpec::new(Family::Chebyshev, d)?;
    let f = test_function("f3", d)?;
    let lambda = hyperbolic_cross(d, k)?;
    let w = WeightVector::intrinsic(&lambda, basis.family, 1.0)?;
    println!("d={d} k={k} n={} m={m}, ||noise||_2 = {noise:e}", lambda.len());
    for trial in 0..5 {
        let key = SeedKey::new(11).with_trial(trial);
        let clean = assemble(&f, &lambda, basis, sample_measure(basis, m, key.with_tag(tag::MEASUREMENT_POINTS)))?;
        let sys = add_noise(&clean, noise, key.with_tag(tag::NOISE))?;
        let oracle = estimate_eta_oracle(&f, &lambda, basis, sys.a.as_ref(), &sys.y, key)?;
        let cv = estimate_eta_cv(sys.a.as_ref(), &sys.y, &w, oracle, key, &SolverOptions::default())?;
        let scores: Vec<String> = cv
            .candidates
            .iter()
            .map(|c| c.score.map_or("-".into(), |s| format!("{s:.1e}")))
            .collect();
        println!("trial {trial}: oracle {oracle:.4e}  cv {:.4e}  scores [{}]", cv.eta, scores.join(" "));
    }
    Ok(())
}
