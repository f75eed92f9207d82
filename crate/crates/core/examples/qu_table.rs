//! The robustness constant Q_u(A) against m.
//!
//!     cargo run --release --example qu_table [d k trials]

use polycs::experiment::{run_qu_table, summarize_qu, ExperimentConfig, ExperimentKind};
use polycs::Family;

fn main() -> polycs::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (d, k, trials) = match args[..] {
        [d, k, t] => (d, k as u64, t),
        _ => (6, 16, 5),
    };
    for family in [Family::Chebyshev, Family::Legendre] {
        let cfg = ExperimentConfig {
            basis: family,
            d,
            k,
            m: vec![50, 100, 150, 200, 250],
            trials,
            ..ExperimentConfig::full(ExperimentKind::QuTable)
        };
        let report = run_qu_table(&cfg)?;
        let rows = summarize_qu(report.qu_records().unwrap());
        println!("{} d={d} k={k} n={}", family.name(), rows[0].n);
        for r in rows {
            println!("  m={:>4}  Q_u = {:.2} +- {:.2}", r.m, r.qu_mean.unwrap_or(f64::NAN), r.qu_std.unwrap_or(0.0));
        }
    }
    Ok(())
}
