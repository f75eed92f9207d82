//! Fit once, save the surrogate as JSON, reload it and evaluate it.
//!
//!     cargo run --release --example surrogate_io

use polycs::diagnostics::error_report;
use polycs::estimators::{evaluate_surrogate, fit_cs, EtaStrategy, Surrogate};
use polycs::experiment::test_function;
use polycs::solvers::SolverOptions;
use polycs::{BasisSpec, Family, SamplePoint, SeedKey};

fn main() -> polycs::Result<()> {
    let d = 4;
    let basis = BasisSpec::new(Family::Legendre, d)?;
    let f = test_function("f1", d)?;
    let key = SeedKey::new(21);
    let fit = fit_cs(&f, 24, basis, 120, 1.0, EtaStrategy::Fixed(0.0), key, &SolverOptions::default())?;
    let path = std::env::temp_dir().join("polycs_surrogate.json");
    std::fs::write(&path, fit.surrogate.to_json()?)?;

    let back = Surrogate::from_json(&std::fs::read_to_string(&path)?)?;
    let z = SamplePoint::new(vec![0.3, -0.2, 0.7, 0.0])?;
    println!("saved {} ({} coefficients)", path.display(), back.coefficients.len());
    println!("f(z) = {:.8}, surrogate(z) = {:.8}", f.eval(z.coords()), evaluate_surrogate(&back, &z)?);
    let r = error_report(&f, &back, 20_000, 20_000, key)?;
    println!("L2 error {:.3e}, Linf error {:.3e}", r.l2_error, r.linf_error);
    Ok(())
}
