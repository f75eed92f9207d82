//! Gram expectation, restricted isometry constants and the tail-term bound.
//!
//!     cargo run --release --example diagnostics

use polycs::diagnostics::{
    empirical_gram_min_eig, lower_budget_within, lower_ric_bruteforce, qu_constant, ric_bruteforce, tail_term_bound,
};
use polycs::estimators::oracle_coefficients;
use polycs::experiment::test_function;
use polycs::measurement::{sampling_matrix, truncation_residual, Expansion};
use polycs::multiindex::hyperbolic_cross;
use polycs::polybasis::sample_measure;
use polycs::rng::tag;
use polycs::{BasisSpec, Family, SeedKey, WeightVector};

fn main() -> polycs::Result<()> {
    let key = SeedKey::new(5);

    let small = hyperbolic_cross(2, 3)?;
    for family in [Family::Chebyshev, Family::Legendre] {
        let basis = BasisSpec::new(family, 2)?;
        let g = empirical_gram_min_eig(basis, &small, 4, 5000, key)?;
        println!("{}: lambda_min of mean (m/n) A A^T = {g:.4} (exact {:.4})", family.name(), 1.0 - 1.0 / 5.0);
    }

    let basis = BasisSpec::new(Family::Chebyshev, 2)?;
    let lambda = hyperbolic_cross(2, 6)?;
    let u = WeightVector::intrinsic(&lambda, basis.family, 1.0)?;
    let a = sampling_matrix(&lambda, basis, &sample_measure(basis, 30, key.with_tag(tag::MEASUREMENT_POINTS)))?;
    println!("\nChebyshev d=2, |Lambda| = {}, m = 30", lambda.len());
    for k in 1..=4 {
        println!(
            "k={k}: s(k) = {:>3}, delta_k = {:.3}, delta_(k,L) = {:.3}",
            lower_budget_within(&lambda, k, &u)?,
            ric_bruteforce(a.as_ref(), k)?,
            lower_ric_bruteforce(a.as_ref(), &lambda, k, &u)?
        );
    }

    let (d, k, m) = (4, 12, 40);
    let basis = BasisSpec::new(Family::Legendre, d)?;
    let lambda = hyperbolic_cross(d, k)?;
    let f = test_function("f2", d)?;
    let points = sample_measure(basis, m, key.with_tag(tag::MEASUREMENT_POINTS));
    let a = sampling_matrix(&lambda, basis, &points)?;
    // Reference expansion on a larger cross, fitted by least squares.
    let big = hyperbolic_cross(d, 4 * k)?;
    let reference = Expansion::new(basis, big.clone(), oracle_coefficients(&f, &big, basis, key)?)?;
    let e = truncation_residual(&reference, &lambda, &points)?;
    let e_norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
    println!("\nLegendre d={d} k={k} n={} m={m}", lambda.len());
    println!("Q_u(A) = {:.3}, ||e_Lambda||_2 = {e_norm:.3e}", qu_constant(a.as_ref(), &lambda, basis)?);
    for eta in [0.0, 0.5 * e_norm, e_norm] {
        println!(
            "eta = {eta:.2e}: tail bound {:.3e}",
            tail_term_bound(a.as_ref(), &lambda, basis, e_norm, eta, k as f64)?
        );
    }
    Ok(())
}
