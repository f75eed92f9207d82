use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polycs::diagnostics::{empirical_gram_min_eig, error_report, lambda_weighted_size, qu_constant};
use polycs::estimators::{fit_cs, EtaStrategy};
use polycs::experiment::{resolve_function, run, ExperimentConfig, ExperimentKind, RunReport, Scale, Stat};
use polycs::measurement::{add_noise, assemble, sampling_matrix};
use polycs::multiindex::hyperbolic_cross;
use polycs::polybasis::{sample_measure, BasisSpec, Family};
use polycs::rng::tag;
use polycs::solvers::SolverOptions;
use polycs::{estimators, SeedKey};

#[derive(Parser)]
#[command(name = "polycs", version, about = "Weighted l1 polynomial recovery experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// TOML (or .json) experiment configuration; defaults to the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Raw CSV path; the summary goes next to it. Without it rows go to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// paper, desk or smoke.
    #[arg(long)]
    scale: Option<Scale>,
    /// Exit 0 even if some trials did not converge.
    #[arg(long)]
    allow_nonconverged: bool,
    /// Fill the wall_ms column (makes output nondeterministic).
    #[arg(long)]
    timing: bool,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Hyperbolic cross size and weighted cardinalities.
    IndexSet {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: u64,
        /// Write the index set as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One fit, reported as JSON; the surrogate is written with --out.
    Fit {
        #[arg(long, default_value = "legendre")]
        basis: Family,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// fixed, oracle or cv.
        #[arg(long, default_value = "fixed")]
        eta_strategy: String,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value = "f2")]
        function: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// L2 and L-infinity error against the number of samples.
    ErrorVsM(RunArgs),
    /// Q_u(A) over random sampling matrices.
    QuTable(RunArgs),
    /// Noisy data: noiseless, fixed, oracle and cross-validated eta.
    NoiseComparison(RunArgs),
    /// Error over a logarithmic eta grid, plus oracle and cross-validated eta.
    EtaSweep(RunArgs),
    /// Q_u(A) statistics and the Gram expectation check for one setup.
    Diagnostics {
        #[arg(long, default_value = "legendre")]
        basis: Family,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::IndexSet { d, k, out } => index_set(d, k, out),
        Cmd::Fit { basis, d, k, m, alpha, eta_strategy, eta, noise, function, seed, out } => {
            fit(basis, d, k, m, alpha, &eta_strategy, eta, noise, &function, seed, out)
        }
        Cmd::ErrorVsM(a) => experiment(ExperimentKind::ErrorVsM, a),
        Cmd::QuTable(a) => experiment(ExperimentKind::QuTable, a),
        Cmd::NoiseComparison(a) => experiment(ExperimentKind::NoiseComparison, a),
        Cmd::EtaSweep(a) => experiment(ExperimentKind::EtaSweep, a),
        Cmd::Diagnostics { basis, d, k, m, trials, seed } => diagnostics(basis, d, k, m, trials, seed),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("polycs: {e}");
            ExitCode::from(1)
        }
    }
}

type CliResult = polycs::Result<ExitCode>;

fn print_json(v: &serde_json::Value) -> polycs::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn index_set(d: usize, k: u64, out: Option<PathBuf>) -> CliResult {
    let lambda = hyperbolic_cross(d, k)?;
    print_json(&serde_json::json!({
        "d": d,
        "k": k,
        "n": lambda.len(),
        "max_degree": lambda.max_degree(),
        "weighted_size_chebyshev": lambda_weighted_size(&lambda, Family::Chebyshev)?,
        "weighted_size_legendre": lambda_weighted_size(&lambda, Family::Legendre)?,
    }))?;
    if let Some(path) = out {
        std::fs::write(path, lambda.to_json()?)?;
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn fit(
    family: Family,
    d: usize,
    k: u64,
    m: usize,
    alpha: f64,
    strategy: &str,
    eta: f64,
    noise: f64,
    function: &str,
    seed: u64,
    out: Option<PathBuf>,
) -> CliResult {
    let basis = BasisSpec::new(family, d)?;
    let f = resolve_function(function, basis)?;
    let strategy = match strategy {
        "fixed" => EtaStrategy::Fixed(eta),
        "oracle" => EtaStrategy::Oracle,
        "cv" => EtaStrategy::CrossValidation,
        other => return Err(polycs::Error::Config(format!("unknown eta strategy `{other}`"))),
    };
    let key = SeedKey::new(seed);
    let opts = SolverOptions::default();
    let result = if noise > 0.0 {
        let lambda = hyperbolic_cross(d, k)?;
        let sys = assemble(&f, &lambda, basis, sample_measure(basis, m, key.with_tag(tag::MEASUREMENT_POINTS)))?;
        let sys = add_noise(&sys, noise, key.with_tag(tag::NOISE))?;
        estimators::fit_cs_system(&sys, Some(&f), alpha, strategy, key, &opts)?
    } else {
        fit_cs(&f, k, basis, m, alpha, strategy, key, &opts)?
    };
    let errs = error_report(&f, &result.surrogate, 20_000, 100_000, key)?;
    print_json(&serde_json::json!({
        "n": result.surrogate.index_set.len(),
        "m": m,
        "eta": result.eta,
        "converged": result.converged(),
        "iterations": result.solve.iterations,
        "objective": result.solve.objective,
        "residual": result.solve.residual_norm,
        "l2_error": errs.l2_error,
        "linf_error": errs.linf_error,
    }))?;
    if let Some(path) = out {
        std::fs::write(path, result.surrogate.to_json()?)?;
    }
    Ok(if result.converged() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn experiment(kind: ExperimentKind, a: RunArgs) -> CliResult {
    let mut cfg = match &a.config {
        Some(path) => {
            let c = ExperimentConfig::load(path)?;
            if c.experiment != kind {
                return Err(polycs::Error::Config(format!(
                    "{} describes `{}`, not `{kind}`",
                    path.display(),
                    c.experiment
                )));
            }
            c.scaled(a.scale.unwrap_or(Scale::Paper))
        }
        None => ExperimentConfig::preset(kind, a.scale.unwrap_or(Scale::Paper)),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(o) = &a.out {
        cfg.output = Some(o.clone());
    }
    cfg.timing |= a.timing;
    cfg.validate()?;
    if a.print_config {
        print!("{}", cfg.to_toml_string()?);
        return Ok(ExitCode::SUCCESS);
    }
    eprintln!(
        "polycs: {kind} with {} basis, d={}, k={}, m={:?}, {} trials",
        cfg.basis, cfg.d, cfg.k, cfg.m, cfg.trials
    );
    let report = run(&cfg)?;
    write_report(&report)?;
    for f in &report.failures {
        eprintln!("polycs: trial failed: {f}");
    }
    let bad = report.nonconverged();
    if bad > 0 {
        eprintln!("polycs: {bad} of {} rows did not converge", report.records.len());
        if !a.allow_nonconverged {
            return Ok(ExitCode::from(2));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write_report(report: &RunReport) -> polycs::Result<()> {
    match &report.config.output {
        Some(path) => {
            let summary = report.write_files(path)?;
            eprintln!("polycs: wrote {} and {}", path.display(), summary.display());
            report.write_summary(std::io::stdout().lock())
        }
        None => {
            let mut out = std::io::stdout().lock();
            report.write_csv(&mut out)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn diagnostics(family: Family, d: usize, k: u64, m: usize, trials: usize, seed: u64) -> CliResult {
    let basis = BasisSpec::new(family, d)?;
    let lambda = hyperbolic_cross(d, k)?;
    let key = SeedKey::new(seed);
    let qu: Vec<Option<f64>> = (0..trials as u64)
        .map(|t| {
            let pts = sample_measure(basis, m, key.with_trial(t).with_tag(tag::MEASUREMENT_POINTS));
            let a = sampling_matrix(&lambda, basis, &pts)?;
            Ok(qu_constant(a.as_ref(), &lambda, basis).ok())
        })
        .collect::<polycs::Result<_>>()?;
    let stat = Stat::of(qu);
    let n = lambda.len();
    print_json(&serde_json::json!({
        "basis": family.name(),
        "d": d,
        "k": k,
        "n": n,
        "m": m,
        "weighted_size": lambda_weighted_size(&lambda, family)?,
        "qu_mean": stat.mean,
        "qu_std": stat.std,
        "qu_valid_trials": stat.count,
        "gram_min_eig": empirical_gram_min_eig(basis, &lambda, m, trials, key)?,
        "gram_min_eig_expected": 1.0 - 1.0 / n as f64,
    }))?;
    Ok(ExitCode::SUCCESS)
}
