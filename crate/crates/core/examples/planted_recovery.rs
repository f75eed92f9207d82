//! Exact recovery of a sparse expansion from fewer samples than unknowns.
//!
//!     cargo run --release --example planted_recovery

use polycs::estimators::{fit_cs_system, EtaStrategy};
use polycs::experiment::planted_function;
use polycs::measurement::assemble;
use polycs::multiindex::hyperbolic_cross;
use polycs::polybasis::sample_measure;
use polycs::rng::tag;
use polycs::solvers::SolverOptions;
use polycs::{BasisSpec, Family, SeedKey};

fn main() -> polycs::Result<()> {
    let basis = BasisSpec::new(Family::Chebyshev, 6)?;
    let lambda = hyperbolic_cross(6, 12)?;
    let f = planted_function(basis)?;
    let truth = f.expansion().unwrap().restrict(&lambda);
    let nonzero = truth.iter().filter(|c| **c != 0.0).count();
    println!("n = {}, nonzeros = {nonzero}", lambda.len());

    let key = SeedKey::new(3);
    let points = sample_measure(basis, 80, key.with_tag(tag::MEASUREMENT_POINTS));
    for m in [10, 20, 30, 40, 60, 80] {
        let sys = assemble(&f, &lambda, basis, points[..m].to_vec())?;
        let fit = fit_cs_system(&sys, None, 1.0, EtaStrategy::Fixed(0.0), key, &SolverOptions::default())?;
        let err = fit
            .solve
            .coefficients
            .iter()
            .zip(&truth)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        println!("m = {m:>3}: ||c_hat - c||_2 = {err:.2e}, iterations {}", fit.solve.iterations);
    }
    Ok(())
}
