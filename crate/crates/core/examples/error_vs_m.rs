//! Weighted (alpha = 1) against unweighted (alpha = 0) recovery of f2 as m grows.
//!
//!     cargo run --release --example error_vs_m

use polycs::experiment::{run_error_vs_m, summarize_trials, ExperimentConfig, ExperimentKind, Scale};
use polycs::Family;

fn main() -> polycs::Result<()> {
    let cfg = ExperimentConfig {
        basis: Family::Legendre,
        d: 4,
        k: 20,
        m: vec![25, 50, 100, 150, 200],
        trials: 4,
        l2_points: 5000,
        linf_points: 20_000,
        ..ExperimentConfig::preset(ExperimentKind::ErrorVsM, Scale::Paper)
    };
    let report = run_error_vs_m(&cfg)?;
    let rows = summarize_trials(report.trial_records().unwrap());
    println!("{} d={} k={} n={} f={}", cfg.basis, cfg.d, cfg.k, rows[0].n, cfg.function);
    println!("{:>5} {:>11} {:>11} {:>11} {:>11}", "m", "L2 a=0", "L2 a=1", "Linf a=0", "Linf a=1");
    for &m in &cfg.m {
        let pick = |a: f64| rows.iter().find(|r| r.m == m && r.alpha == a).unwrap();
        let (u, w) = (pick(0.0), pick(1.0));
        println!(
            "{m:>5} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e}",
            u.l2_mean.unwrap(),
            w.l2_mean.unwrap(),
            u.linf_mean.unwrap(),
            w.linf_mean.unwrap()
        );
    }
    Ok(())
}
