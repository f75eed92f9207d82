//! Noisy data fitted with eta at the floor, from the oracle and by cross validation,
//! next to the noiseless fit. Writes raw and summary CSV to the temp directory.
//!
//!     cargo run --release --example noise_comparison [smoke|desk|paper]

use polycs::experiment::{run, summarize_trials, ExperimentConfig, ExperimentKind, Scale};

fn main() -> polycs::Result<()> {
    let scale: Scale = std::env::args().nth(1).as_deref().unwrap_or("smoke").parse()?;
    let cfg = ExperimentConfig::preset(ExperimentKind::NoiseComparison, scale);
    let report = run(&cfg)?;
    let path = std::env::temp_dir().join("polycs_noise_comparison.csv");
    let summary_path = report.write_files(&path)?;
    println!("{} d={} k={} noise={:e}", cfg.basis, cfg.d, cfg.k, cfg.noise);
    println!("{:>5} {:>5} {:>10} {:>11} {:>11}", "alpha", "m", "strategy", "eta", "L2 error");
    for r in summarize_trials(report.trial_records().unwrap()) {
        println!(
            "{:>5} {:>5} {:>10} {:>11.3e} {:>11.3e}",
            r.alpha,
            r.m,
            r.eta_strategy,
            r.eta_mean.unwrap_or(f64::NAN),
            r.l2_mean.unwrap_or(f64::NAN)
        );
    }
    println!("wrote {} and {}", path.display(), summary_path.display());
    Ok(())
}
