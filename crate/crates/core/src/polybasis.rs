//! Orthonormal Chebyshev and Legendre polynomials on `[-1, 1]^d` and sampling from
//! their orthogonality measures.
//!
//! Chebyshev polynomials are orthonormal for the product arcsine measure, Legendre
//! polynomials for the uniform probability measure.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::multiindex::MultiIndex;
use crate::rng::SeedKey;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Chebyshev,
    Legendre,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Chebyshev => "chebyshev",
            Family::Legendre => "legendre",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "chebyshev" | "cheb" => Ok(Family::Chebyshev),
            "legendre" | "leg" => Ok(Family::Legendre),
            other => Err(Error::InvalidArgument(format!("unknown basis family `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSpec {
    pub family: Family,
    pub d: usize,
}

impl BasisSpec {
    pub fn new(family: Family, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        Ok(Self { family, d })
    }
}

/// A point strictly inside `(-1, 1)^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SamplePoint(Vec<f64>);

impl SamplePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite);
        }
        if coords.iter().any(|z| z.abs() >= 1.0) {
            return Err(Error::OutOfDomain { point: coords });
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

fn legendre_coeffs(n: usize) -> (f64, f64) {
    // phi_{n+1} = a_n z phi_n - b_n phi_{n-1}
    let nf = n as f64;
    let a = ((2.0 * nf + 1.0) * (2.0 * nf + 3.0)).sqrt() / (nf + 1.0);
    let b = if n == 0 {
        0.0
    } else {
        nf / (nf + 1.0) * ((2.0 * nf + 3.0) / (2.0 * nf - 1.0)).sqrt()
    };
    (a, b)
}

/// Writes `phi_0(z), ..., phi_{out.len()-1}(z)` into `out`. `z` must lie in `[-1, 1]`.
pub fn eval_1d_all(family: Family, z: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    match family {
        Family::Chebyshev => {
            let theta = z.clamp(-1.0, 1.0).acos();
            for (i, v) in out.iter_mut().enumerate().skip(1) {
                *v = std::f64::consts::SQRT_2 * (i as f64 * theta).cos();
            }
        }
        Family::Legendre => {
            if out.len() > 1 {
                out[1] = 3f64.sqrt() * z;
            }
            for n in 1..out.len().saturating_sub(1) {
                let (a, b) = legendre_coeffs(n);
                out[n + 1] = a * z * out[n] - b * out[n - 1];
            }
        }
    }
}

/// Orthonormal 1-D polynomial of the given degree at `z in [-1, 1]`.
pub fn eval_1d(family: Family, degree: u32, z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::NonFinite);
    }
    if z.abs() > 1.0 {
        return Err(Error::OutOfDomain { point: vec![z] });
    }
    match family {
        Family::Chebyshev if degree > 0 => {
            Ok(std::f64::consts::SQRT_2 * (degree as f64 * z.acos()).cos())
        }
        _ => {
            let mut buf = vec![0.0; degree as usize + 1];
            eval_1d_all(family, z, &mut buf);
            Ok(buf[degree as usize])
        }
    }
}

/// Tensor product `prod_j phi_{i_j}(z_j)` at a point of `[-1, 1]^d`.
pub fn eval_tensor(i: &MultiIndex, z: &[f64], basis: BasisSpec) -> Result<f64> {
    if i.dim() != basis.d {
        return Err(Error::DimensionMismatch { expected: basis.d, found: i.dim() });
    }
    if z.len() != basis.d {
        return Err(Error::DimensionMismatch { expected: basis.d, found: z.len() });
    }
    let mut v = 1.0;
    for (&deg, &zj) in i.entries().iter().zip(z) {
        if deg > 0 {
            v *= eval_1d(basis.family, deg, zj)?;
        } else if zj.abs() > 1.0 || !zj.is_finite() {
            return Err(Error::OutOfDomain { point: z.to_vec() });
        }
    }
    Ok(v)
}

/// Cached 1-D values `phi_n(z_{p,j})` for `n <= max_degree`, one block per point.
#[derive(Clone, Debug)]
pub struct Table1d {
    d: usize,
    stride: usize,
    values: Vec<f64>,
}

impl Table1d {
    pub fn new(family: Family, points: &[SamplePoint], d: usize, max_degree: u32) -> Result<Self> {
        let stride = max_degree as usize + 1;
        let mut values = vec![0.0; points.len() * d * stride];
        for (p, pt) in points.iter().enumerate() {
            if pt.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: pt.dim() });
            }
            for (j, &z) in pt.coords().iter().enumerate() {
                let off = (p * d + j) * stride;
                eval_1d_all(family, z, &mut values[off..off + stride]);
            }
        }
        Ok(Self { d, stride, values })
    }

    #[inline]
    pub fn get(&self, point: usize, coord: usize, degree: u32) -> f64 {
        self.values[(point * self.d + coord) * self.stride + degree as usize]
    }

    /// `phi_i` at sample `point`.
    #[inline]
    pub fn tensor(&self, point: usize, i: &MultiIndex) -> f64 {
        let base = point * self.d * self.stride;
        let mut v = 1.0;
        for (j, &deg) in i.entries().iter().enumerate() {
            if deg > 0 {
                v *= self.values[base + j * self.stride + deg as usize];
            }
        }
        v
    }
}

/// Maximum of `|phi_i|` over a product grid of 10^4 points per axis (ends included).
///
/// The tensor maximum over a product grid is the product of the 1-D maxima.
pub fn sup_norm_consistency(i: &MultiIndex, family: Family) -> f64 {
    const GRID: usize = 10_000;
    let mut total = 1.0;
    for &deg in i.entries() {
        if deg == 0 {
            continue;
        }
        let mut best = 0.0f64;
        for g in 0..GRID {
            let z = -1.0 + 2.0 * g as f64 / (GRID - 1) as f64;
            let v = eval_1d(family, deg, z).expect("grid lies in [-1, 1]");
            best = best.max(v.abs());
        }
        total *= best;
    }
    total
}

/// Draws one coordinate from the 1-D orthogonality measure, strictly inside (-1, 1).
fn draw_coordinate<R: Rng + ?Sized>(family: Family, rng: &mut R) -> f64 {
    loop {
        let z = match family {
            Family::Legendre => rng.random_range(-1.0..1.0),
            Family::Chebyshev => (PI * rng.random::<f64>()).cos(),
        };
        if z.abs() < 1.0 {
            return z;
        }
    }
}

/// `m` i.i.d. draws from the product measure. Point `p` comes from its own stream
/// `key.item_rng(p)`, so the first `m` points do not depend on the total count.
pub fn sample_measure(basis: BasisSpec, m: usize, key: SeedKey) -> Vec<SamplePoint> {
    sample_measure_range(basis, 0..m, key)
}

pub fn sample_measure_range(
    basis: BasisSpec,
    range: std::ops::Range<usize>,
    key: SeedKey,
) -> Vec<SamplePoint> {
    range
        .map(|p| {
            let mut rng = key.item_rng(p as u64);
            SamplePoint((0..basis.d).map(|_| draw_coordinate(basis.family, &mut rng)).collect())
        })
        .collect()
}

/// Uniform draws on `(-1, 1)^d`, used for error estimation in the uniform norm
/// regardless of the basis.
pub fn sample_uniform(d: usize, m: usize, key: SeedKey) -> Vec<SamplePoint> {
    sample_measure(BasisSpec { family: Family::Legendre, d }, m, key)
}
