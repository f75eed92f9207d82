//! Recovery of smooth functions on `(-1, 1)^d` from random pointwise samples by
//! weighted l1 minimization over hyperbolic-cross tensor polynomial spaces.
//!
//! The crate is organised bottom-up:
//!
//! - [`multiindex`]: multi-indices, lower sets, hyperbolic crosses and intrinsic weights.
//! - [`polybasis`]: orthonormal Chebyshev/Legendre evaluation and sampling from the
//!   matching product measures.
//! - [`measurement`]: the scaled sampling matrix, right-hand side and noise.
//! - [`solvers`]: weighted quadratically-constrained basis pursuit, least squares and
//!   spectral utilities.
//! - [`estimators`]: end-to-end fits, noise-level (`eta`) estimation and best lower
//!   k-term approximation.
//! - [`diagnostics`]: Monte-Carlo error norms, the robustness constant `Q_u(A)`, Gram
//!   checks and brute-force lower restricted isometry constants.
//! - [`experiment`]: declarative experiment runner writing plot-ready CSV.

pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod measurement;
pub mod multiindex;
pub mod polybasis;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use multiindex::{IndexSet, MultiIndex, WeightVector};
pub use polybasis::{BasisSpec, Family, SamplePoint};
pub use rng::SeedKey;
