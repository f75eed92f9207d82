//! Target functions used by the experiments.

use crate::measurement::{Expansion, TargetFunction};
use crate::multiindex::{IndexSet, MultiIndex};
use crate::polybasis::BasisSpec;
use crate::{Error, Result};

pub const FUNCTION_IDS: [&str; 4] = ["f1", "f2", "f3", "planted"];

/// `f1`, `f2` or `f3` on `(-1, 1)^d`.
///
/// ```text
/// f1(y) = prod_{k=d/2+1}^{d} cos(16 y_k / 2^k) / prod_{k=1}^{d/2} (1 - y_k / 4^k)
/// f2(y) = exp(-sum_k y_k / (2d))
/// f3(y) = exp(-sum_k cos(y_k) / (8d))
/// ```
pub fn test_function(id: &str, d: usize) -> Result<TargetFunction> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let scale = d as f64;
    match id {
        "f1" => {
            if !d.is_multiple_of(2) {
                return Err(Error::InvalidArgument(format!("f1 needs an even dimension, got {d}")));
            }
            Ok(TargetFunction::new("f1", d, move |y: &[f64]| {
                let h = d / 2;
                let num: f64 = (h..d).map(|j| (16.0 * y[j] / 2f64.powi(j as i32 + 1)).cos()).product();
                let den: f64 = (0..h).map(|j| 1.0 - y[j] / 4f64.powi(j as i32 + 1)).product();
                num / den
            }))
        }
        "f2" => Ok(TargetFunction::new("f2", d, move |y: &[f64]| {
            (-y.iter().sum::<f64>() / (2.0 * scale)).exp()
        })),
        "f3" => Ok(TargetFunction::new("f3", d, move |y: &[f64]| {
            (-y.iter().map(|v| v.cos()).sum::<f64>() / (8.0 * scale)).exp()
        })),
        other => Err(Error::UnknownFunction(other.to_string())),
    }
}

/// A sparse expansion with known coefficients on `{0, e_1, ..., e_d, 2 e_1}`,
/// contained in every hyperbolic cross of order `k >= 3`.
pub fn planted_function(basis: BasisSpec) -> Result<TargetFunction> {
    let d = basis.d;
    let mut terms = vec![(MultiIndex::zero(d), 1.0)];
    for j in 0..d {
        terms.push((MultiIndex::unit(d, j), 0.5 / (j + 1) as f64));
    }
    let mut two = vec![0u32; d];
    two[0] = 2;
    terms.push((MultiIndex::new(two), 0.25));
    let set = IndexSet::new(d, terms.iter().map(|t| t.0.clone()).collect())?;
    let coeffs = set
        .iter()
        .map(|i| terms.iter().find(|t| &t.0 == i).map_or(0.0, |t| t.1))
        .collect();
    Ok(TargetFunction::from_expansion("planted", Expansion::new(basis, set, coeffs)?))
}

/// [`test_function`] plus the `planted` id, which needs the basis.
pub fn resolve_function(id: &str, basis: BasisSpec) -> Result<TargetFunction> {
    match id {
        "planted" => planted_function(basis),
        _ => test_function(id, basis.d),
    }
}
