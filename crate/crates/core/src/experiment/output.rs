use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::Result;

/// One row of an error experiment. Column order is the CSV schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub basis: String,
    pub d: usize,
    pub k: u64,
    pub n: usize,
    pub alpha: f64,
    pub m: usize,
    pub trial: u64,
    pub eta_strategy: String,
    pub eta: Option<f64>,
    pub l2_error: Option<f64>,
    pub linf_error: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    pub wall_ms: u64,
}

pub const TRIAL_COLUMNS: [&str; 16] = [
    "experiment",
    "basis",
    "d",
    "k",
    "n",
    "alpha",
    "m",
    "trial",
    "eta_strategy",
    "eta",
    "l2_error",
    "linf_error",
    "iterations",
    "converged",
    "seed",
    "wall_ms",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuRecord {
    pub experiment: String,
    pub basis: String,
    pub d: usize,
    pub k: u64,
    pub n: usize,
    pub m: usize,
    pub trial: u64,
    /// `None` when the sampling matrix was rank deficient.
    pub qu: Option<f64>,
    pub seed: u64,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Records {
    Trials(Vec<TrialRecord>),
    Qu(Vec<QuRecord>),
}

impl Records {
    pub fn len(&self) -> usize {
        match self {
            Records::Trials(r) => r.len(),
            Records::Qu(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub records: Records,
    /// One message per trial that returned an error.
    pub failures: Vec<String>,
}

/// Sample mean and standard deviation (`n - 1` denominator) of the present values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub count: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let v: Vec<f64> = values.into_iter().flatten().collect();
        if v.is_empty() {
            return Self::default();
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { count: v.len(), mean: Some(mean), std: Some(std) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub basis: String,
    pub d: usize,
    pub k: u64,
    pub n: usize,
    pub alpha: f64,
    pub m: usize,
    pub eta_strategy: String,
    /// The common `eta` of a fixed-strategy group.
    pub fixed_eta: Option<f64>,
    pub trials: usize,
    pub converged: usize,
    pub eta_mean: Option<f64>,
    pub eta_std: Option<f64>,
    pub l2_mean: Option<f64>,
    pub l2_std: Option<f64>,
    pub linf_mean: Option<f64>,
    pub linf_std: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuSummaryRow {
    pub experiment: String,
    pub basis: String,
    pub d: usize,
    pub k: u64,
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub valid: usize,
    pub qu_mean: Option<f64>,
    pub qu_std: Option<f64>,
}

fn is_fixed(strategy: &str) -> bool {
    strategy == "fixed" || strategy == "noiseless"
}

/// Groups rows by `(alpha, m, strategy, eta if fixed)`, keeping first-seen order.
pub fn summarize_trials(rows: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut order: Vec<(u64, usize, String, Option<u64>)> = Vec::new();
    let mut groups: BTreeMap<(u64, usize, String, Option<u64>), Vec<&TrialRecord>> = BTreeMap::new();
    for r in rows {
        let fixed = if is_fixed(&r.eta_strategy) { r.eta.map(f64::to_bits) } else { None };
        let key = (r.alpha.to_bits(), r.m, r.eta_strategy.clone(), fixed);
        let g = groups.entry(key.clone()).or_default();
        if g.is_empty() {
            order.push(key);
        }
        g.push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            let first = g[0];
            let eta = Stat::of(g.iter().map(|r| r.eta));
            let l2 = Stat::of(g.iter().map(|r| r.l2_error));
            let linf = Stat::of(g.iter().map(|r| r.linf_error));
            SummaryRow {
                experiment: first.experiment.clone(),
                basis: first.basis.clone(),
                d: first.d,
                k: first.k,
                n: first.n,
                alpha: first.alpha,
                m: first.m,
                eta_strategy: first.eta_strategy.clone(),
                fixed_eta: key.3.map(f64::from_bits),
                trials: g.len(),
                converged: g.iter().filter(|r| r.converged).count(),
                eta_mean: eta.mean,
                eta_std: eta.std,
                l2_mean: l2.mean,
                l2_std: l2.std,
                linf_mean: linf.mean,
                linf_std: linf.std,
            }
        })
        .collect()
}

pub fn summarize_qu(rows: &[QuRecord]) -> Vec<QuSummaryRow> {
    let mut ms: Vec<usize> = rows.iter().map(|r| r.m).collect();
    ms.dedup();
    ms.into_iter()
        .map(|m| {
            let g: Vec<&QuRecord> = rows.iter().filter(|r| r.m == m).collect();
            let s = Stat::of(g.iter().map(|r| r.qu));
            QuSummaryRow {
                experiment: g[0].experiment.clone(),
                basis: g[0].basis.clone(),
                d: g[0].d,
                k: g[0].k,
                n: g[0].n,
                m,
                trials: g.len(),
                valid: s.count,
                qu_mean: s.mean,
                qu_std: s.std,
            }
        })
        .collect()
}

fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `results.csv` -> `results.summary.csv`.
pub fn summary_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.summary.csv"))
}

impl RunReport {
    pub fn trial_records(&self) -> Option<&[TrialRecord]> {
        match &self.records {
            Records::Trials(r) => Some(r),
            Records::Qu(_) => None,
        }
    }

    pub fn qu_records(&self) -> Option<&[QuRecord]> {
        match &self.records {
            Records::Qu(r) => Some(r),
            Records::Trials(_) => None,
        }
    }

    /// True when every trial ran and (for fits) every solve converged.
    pub fn all_converged(&self) -> bool {
        self.failures.is_empty()
            && match &self.records {
                Records::Trials(r) => r.iter().all(|x| x.converged),
                Records::Qu(r) => r.iter().all(|x| x.qu.is_some()),
            }
    }

    pub fn nonconverged(&self) -> usize {
        match &self.records {
            Records::Trials(r) => r.iter().filter(|x| !x.converged).count(),
            Records::Qu(r) => r.iter().filter(|x| x.qu.is_none()).count(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        match &self.records {
            Records::Trials(r) => write_rows(out, r),
            Records::Qu(r) => write_rows(out, r),
        }
    }

    pub fn write_summary<W: Write>(&self, out: W) -> Result<()> {
        match &self.records {
            Records::Trials(r) => write_rows(out, &summarize_trials(r)),
            Records::Qu(r) => write_rows(out, &summarize_qu(r)),
        }
    }

    /// Writes the raw rows to `path` and the summary next to it; returns the summary path.
    pub fn write_files(&self, path: &Path) -> Result<PathBuf> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))?;
        let sp = summary_path(path);
        self.write_summary(std::io::BufWriter::new(std::fs::File::create(&sp)?))?;
        Ok(sp)
    }
}

/// Reads rows written by [`RunReport::write_csv`] for an error experiment.
pub fn read_trial_csv<R: std::io::Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != TRIAL_COLUMNS {
        return Err(crate::Error::Config(format!("unexpected CSV header {header:?}")));
    }
    r.deserialize().map(|x| x.map_err(Into::into)).collect()
}
