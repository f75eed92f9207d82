use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::functions::resolve_function;
use crate::estimators::EtaStrategy;
use crate::polybasis::{BasisSpec, Family};
use crate::solvers::{SolverOptions, ETA_FLOOR};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ErrorVsM,
    QuTable,
    EtaSweep,
    NoiseComparison,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] =
        [Self::ErrorVsM, Self::QuTable, Self::EtaSweep, Self::NoiseComparison];

    pub fn name(self) -> &'static str {
        match self {
            Self::ErrorVsM => "error_vs_m",
            Self::QuTable => "qu_table",
            Self::EtaSweep => "eta_sweep",
            Self::NoiseComparison => "noise_comparison",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Size presets. `Desk` keeps 10 trials and every second `m`; `Smoke` is a
/// two-dimensional problem that runs in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Paper,
    Desk,
    Smoke,
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Scale::Paper),
            "desk" => Ok(Scale::Desk),
            "smoke" => Ok(Scale::Smoke),
            other => Err(Error::Config(format!("unknown scale `{other}` (paper, desk, smoke)"))),
        }
    }
}

/// `eta = 10^kappa` for `points` equispaced `kappa` in `[min_exponent, max_exponent]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaGrid {
    pub points: usize,
    pub min_exponent: f64,
    pub max_exponent: f64,
}

impl Default for EtaGrid {
    fn default() -> Self {
        Self { points: 31, min_exponent: -5.0, max_exponent: 1.0 }
    }
}

impl EtaGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![10f64.powf(self.min_exponent)];
        }
        let step = (self.max_exponent - self.min_exponent) / (self.points - 1) as f64;
        (0..self.points)
            .map(|j| 10f64.powf(self.min_exponent + step * j as f64))
            .collect()
    }
}

fn default_alpha() -> Vec<f64> {
    vec![0.0, 1.0]
}

fn default_eta() -> EtaStrategy {
    EtaStrategy::Fixed(ETA_FLOOR)
}

fn default_function() -> String {
    "f2".into()
}

fn default_l2_points() -> usize {
    crate::diagnostics::DEFAULT_L2_POINTS
}

fn default_linf_points() -> usize {
    crate::diagnostics::DEFAULT_LINF_POINTS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub basis: Family,
    pub d: usize,
    pub k: u64,
    /// Strictly increasing sample counts.
    pub m: Vec<usize>,
    pub trials: usize,
    #[serde(default = "default_alpha")]
    pub alpha: Vec<f64>,
    /// Used by `error_vs_m`; the other experiments fix their own strategies.
    #[serde(default = "default_eta")]
    pub eta: EtaStrategy,
    /// `||n||_2` of the additive noise.
    #[serde(default)]
    pub noise: f64,
    #[serde(default = "default_function")]
    pub function: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "default_l2_points")]
    pub l2_points: usize,
    /// 0 skips the sup-norm estimate.
    #[serde(default = "default_linf_points")]
    pub linf_points: usize,
    #[serde(default)]
    pub eta_grid: EtaGrid,
    /// Record wall-clock time; off by default so output is reproducible byte for byte.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub solver: SolverOptions,
}

fn grid(start: usize, step: usize, count: usize) -> Vec<usize> {
    (0..count).map(|j| start + step * j).collect()
}

impl ExperimentConfig {
    /// Full-size setup of each experiment; the `paper` scale.
    pub fn full(kind: ExperimentKind) -> Self {
        let base = Self {
            experiment: kind,
            basis: Family::Legendre,
            d: 8,
            k: 22,
            m: grid(125, 125, 8),
            trials: 50,
            alpha: default_alpha(),
            eta: default_eta(),
            noise: 0.0,
            function: default_function(),
            seed: 1,
            output: None,
            l2_points: default_l2_points(),
            linf_points: default_linf_points(),
            eta_grid: EtaGrid::default(),
            timing: false,
            solver: SolverOptions::default(),
        };
        match kind {
            ExperimentKind::ErrorVsM => base,
            ExperimentKind::QuTable => Self { basis: Family::Chebyshev, ..base },
            ExperimentKind::NoiseComparison => Self {
                basis: Family::Chebyshev,
                k: 19,
                noise: 1e-3,
                function: "f3".into(),
                linf_points: 0,
                ..base
            },
            ExperimentKind::EtaSweep => Self {
                basis: Family::Chebyshev,
                k: 19,
                m: vec![400],
                noise: 1e-3,
                function: "f3".into(),
                linf_points: 0,
                ..base
            },
        }
    }

    pub fn preset(kind: ExperimentKind, scale: Scale) -> Self {
        Self::full(kind).scaled(scale)
    }

    /// Applies a size preset on top of this configuration.
    pub fn scaled(mut self, scale: Scale) -> Self {
        match scale {
            Scale::Paper => {}
            Scale::Desk => {
                self.trials = self.trials.min(10);
                if self.m.len() > 1 {
                    self.m = self.m.iter().skip(1).step_by(2).copied().collect();
                }
            }
            Scale::Smoke => {
                // k = 25 gives n = 87, so every m below is underdetermined.
                self.d = 2;
                self.k = 25;
                self.trials = 3;
                self.m = match self.experiment {
                    ExperimentKind::EtaSweep => vec![40],
                    _ => vec![20, 40, 80],
                };
                self.l2_points = self.l2_points.min(2000);
                self.linf_points = self.linf_points.min(5000);
                if self.experiment == ExperimentKind::EtaSweep {
                    self.eta_grid.points = self.eta_grid.points.min(7);
                }
            }
        }
        self
    }

    pub fn basis_spec(&self) -> Result<BasisSpec> {
        BasisSpec::new(self.basis, self.d)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.d == 0 || self.k == 0 {
            return bad("d and k must be at least 1".into());
        }
        if self.m.is_empty() || self.m[0] == 0 {
            return bad("m grid must be nonempty with m >= 1".into());
        }
        if self.m.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("m grid {:?} must be strictly increasing", self.m));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.experiment != ExperimentKind::QuTable {
            if self.alpha.is_empty() || self.alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
                return bad(format!("alpha list {:?} must be nonempty, finite and >= 0", self.alpha));
            }
            if self.l2_points == 0 {
                return bad("l2_points must be at least 1".into());
            }
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return bad(format!("noise level {} must be finite and >= 0", self.noise));
        }
        let needs_noise = matches!(self.experiment, ExperimentKind::EtaSweep | ExperimentKind::NoiseComparison);
        if needs_noise && self.noise <= 0.0 {
            return bad(format!("{} needs a positive noise level", self.experiment));
        }
        let needs_split = needs_noise
            || matches!(self.eta, EtaStrategy::CrossValidation) && self.experiment == ExperimentKind::ErrorVsM;
        if needs_split && self.m[0] < 2 {
            return bad("cross validation needs m >= 2".into());
        }
        self.eta.validate().map_err(|e| Error::Config(e.to_string()))?;
        let g = &self.eta_grid;
        if g.points == 0 || !(g.min_exponent.is_finite() && g.max_exponent.is_finite()) || g.min_exponent > g.max_exponent {
            return bad(format!("invalid eta grid {g:?}"));
        }
        self.solver.validate().map_err(|e| Error::Config(e.to_string()))?;
        resolve_function(&self.function, self.basis_spec()?)?;
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            let c: Self = serde_json::from_str(&text)?;
            c.validate()?;
            Ok(c)
        } else {
            Self::from_toml_str(&text)
        }
    }
}
