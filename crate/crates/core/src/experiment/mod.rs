//! Declarative experiments: a TOML/JSON configuration in, plot-ready CSV out.
//!
//! Trials run in parallel; rows are written in `(alpha, m, trial)` order whatever
//! the completion order, so a configuration and seed always produce the same bytes.

mod config;
mod functions;
mod output;
mod runner;

pub use config::{EtaGrid, ExperimentConfig, ExperimentKind, Scale};
pub use functions::{planted_function, resolve_function, test_function, FUNCTION_IDS};
pub use output::{
    read_trial_csv, summarize_qu, summarize_trials, summary_path, QuRecord, QuSummaryRow, Records,
    RunReport, Stat, SummaryRow, TrialRecord, TRIAL_COLUMNS,
};
pub use runner::{run, run_error_vs_m, run_eta_sweep, run_noise_comparison, run_qu_table};

#[cfg(test)]
mod tests;
