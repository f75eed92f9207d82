//! Sampling matrices and measurement vectors.
//!
//! For points `z_1, ..., z_m` and an index set `Lambda`, the system is
//! `A[j, k] = phi_{i_k}(z_j) / sqrt(m)` and `y[j] = f(z_j) / sqrt(m) + n[j]`.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use faer::Mat;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::multiindex::IndexSet;
use crate::polybasis::{eval_1d_all, BasisSpec, SamplePoint, Table1d};
use crate::rng::SeedKey;
use crate::{Error, Result};

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Known expansion `f = sum_i c_i phi_i` for synthetic ground truth.
#[derive(Clone, Debug)]
pub struct Expansion {
    pub basis: BasisSpec,
    pub index_set: IndexSet,
    pub coefficients: Vec<f64>,
}

impl Expansion {
    pub fn new(basis: BasisSpec, index_set: IndexSet, coefficients: Vec<f64>) -> Result<Self> {
        if index_set.len() != coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: index_set.len(),
                found: coefficients.len(),
            });
        }
        if index_set.dim() != basis.d {
            return Err(Error::DimensionMismatch { expected: basis.d, found: index_set.dim() });
        }
        Ok(Self { basis, index_set, coefficients })
    }

    /// Evaluates the expansion; NaN outside `[-1, 1]^d`.
    pub fn eval(&self, z: &[f64]) -> f64 {
        if z.len() != self.basis.d || z.iter().any(|v| !(v.abs() <= 1.0)) {
            return f64::NAN;
        }
        let stride = self.index_set.max_degree() as usize + 1;
        let mut vals = vec![0.0; z.len() * stride];
        for (j, &zj) in z.iter().enumerate() {
            eval_1d_all(self.basis.family, zj, &mut vals[j * stride..(j + 1) * stride]);
        }
        self.index_set
            .iter()
            .zip(&self.coefficients)
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| {
                let p: f64 = i
                    .entries()
                    .iter()
                    .enumerate()
                    .map(|(j, &deg)| vals[j * stride + deg as usize])
                    .product();
                c * p
            })
            .sum()
    }

    /// Coefficients restricted to `target`, in `target`'s order.
    pub fn restrict(&self, target: &IndexSet) -> Vec<f64> {
        target
            .iter()
            .map(|i| self.index_set.position(i).map_or(0.0, |p| self.coefficients[p]))
            .collect()
    }
}

/// A deterministic real function on `(-1, 1)^d`.
#[derive(Clone)]
pub struct TargetFunction {
    name: String,
    d: usize,
    eval: Evaluator,
    expansion: Option<Arc<Expansion>>,
}

impl fmt::Debug for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetFunction")
            .field("name", &self.name)
            .field("d", &self.d)
            .field("has_expansion", &self.expansion.is_some())
            .finish()
    }
}

impl TargetFunction {
    pub fn new<F>(name: impl Into<String>, d: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self { name: name.into(), d, eval: Arc::new(f), expansion: None }
    }

    /// A finite polynomial expansion; its coefficients serve as ground truth.
    pub fn from_expansion(name: impl Into<String>, expansion: Expansion) -> Self {
        let e = Arc::new(expansion);
        let inner = Arc::clone(&e);
        Self {
            name: name.into(),
            d: e.basis.d,
            eval: Arc::new(move |z: &[f64]| inner.eval(z)),
            expansion: Some(e),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn expansion(&self) -> Option<&Expansion> {
        self.expansion.as_deref()
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        (self.eval)(z)
    }

    /// Evaluates at every point, failing on the first non-finite value.
    pub fn eval_points(&self, points: &[SamplePoint]) -> Result<Vec<f64>> {
        points
            .iter()
            .map(|p| {
                if p.dim() != self.d {
                    return Err(Error::DimensionMismatch { expected: self.d, found: p.dim() });
                }
                let v = self.eval(p.coords());
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::EvaluationFailure { point: p.coords().to_vec(), value: v })
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct MeasurementSystem {
    pub basis: BasisSpec,
    pub index_set: IndexSet,
    pub points: Vec<SamplePoint>,
    /// `m x n`, column-major.
    pub a: Mat<f64>,
    pub y: Vec<f64>,
    pub noise: Option<Vec<f64>>,
}

impl MeasurementSystem {
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// `y` without the injected noise.
    pub fn clean_y(&self) -> Vec<f64> {
        match &self.noise {
            Some(n) => self.y.iter().zip(n).map(|(a, b)| a - b).collect(),
            None => self.y.clone(),
        }
    }

    /// Writes `A` (row-major) then `y` as little-endian f64, plus a JSON sidecar
    /// at `<path>.json` with the shape, seed and a SHA-256 of `config`.
    pub fn dump_binary(&self, path: &Path, seed: u64, config: &str) -> Result<()> {
        let mut bytes = Vec::with_capacity(8 * (self.m() * self.n() + self.m()));
        for r in 0..self.m() {
            for c in 0..self.n() {
                bytes.extend_from_slice(&self.a[(r, c)].to_le_bytes());
            }
        }
        for v in &self.y {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::File::create(path)?.write_all(&bytes)?;

        #[derive(Serialize)]
        struct Sidecar<'a> {
            m: usize,
            n: usize,
            d: usize,
            basis: &'a str,
            layout: &'a str,
            dtype: &'a str,
            seed: u64,
            config_sha256: String,
            noisy: bool,
        }
        let side = Sidecar {
            m: self.m(),
            n: self.n(),
            d: self.basis.d,
            basis: self.basis.family.name(),
            layout: "A row-major (m*n), then y (m)",
            dtype: "f64le",
            seed,
            config_sha256: sha256_hex(config.as_bytes()),
            noisy: self.noise.is_some(),
        };
        let mut side_path = path.as_os_str().to_owned();
        side_path.push(".json");
        std::fs::write(side_path, serde_json::to_string_pretty(&side)?)?;
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `A[j, k] = phi_{i_k}(z_j) / sqrt(m)` with columns in `index_set` order.
pub fn sampling_matrix(index_set: &IndexSet, basis: BasisSpec, points: &[SamplePoint]) -> Result<Mat<f64>> {
    if index_set.dim() != basis.d {
        return Err(Error::DimensionMismatch { expected: basis.d, found: index_set.dim() });
    }
    let m = points.len();
    let table = Table1d::new(basis.family, points, basis.d, index_set.max_degree())?;
    let scale = 1.0 / (m as f64).sqrt();
    let idx = index_set.indices();
    Ok(Mat::from_fn(m, idx.len(), |r, c| table.tensor(r, &idx[c]) * scale))
}

pub fn assemble(
    f: &TargetFunction,
    index_set: &IndexSet,
    basis: BasisSpec,
    points: Vec<SamplePoint>,
) -> Result<MeasurementSystem> {
    if index_set.is_empty() {
        return Err(Error::InvalidArgument("index set is empty".into()));
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument("no sample points".into()));
    }
    if f.dim() != basis.d {
        return Err(Error::DimensionMismatch { expected: basis.d, found: f.dim() });
    }
    let a = sampling_matrix(index_set, basis, &points)?;
    let scale = 1.0 / (points.len() as f64).sqrt();
    let y = f.eval_points(&points)?.into_iter().map(|v| v * scale).collect();
    Ok(MeasurementSystem { basis, index_set: index_set.clone(), points, a, y, noise: None })
}

/// `e_Lambda[j] = sum_{i not in Lambda} c_i phi_i(z_j) / sqrt(m)`.
pub fn truncation_residual(
    reference: &Expansion,
    index_set: &IndexSet,
    points: &[SamplePoint],
) -> Result<Vec<f64>> {
    if let Some(missing) = index_set.iter().find(|i| !reference.index_set.contains(i)) {
        return Err(Error::InvalidArgument(format!(
            "reference set does not contain {missing}"
        )));
    }
    let table = Table1d::new(
        reference.basis.family,
        points,
        reference.basis.d,
        reference.index_set.max_degree(),
    )?;
    let scale = 1.0 / (points.len() as f64).sqrt();
    let outside: Vec<(usize, f64)> = reference
        .index_set
        .iter()
        .enumerate()
        .filter(|(p, i)| reference.coefficients[*p] != 0.0 && !index_set.contains(i))
        .map(|(p, _)| (p, reference.coefficients[p]))
        .collect();
    let idx = reference.index_set.indices();
    Ok((0..points.len())
        .map(|r| outside.iter().map(|&(p, c)| c * table.tensor(r, &idx[p])).sum::<f64>() * scale)
        .collect())
}

/// Gaussian direction scaled to l2 norm exactly `level`.
pub fn noise_vector(m: usize, level: f64, key: SeedKey) -> Result<Vec<f64>> {
    if !(level.is_finite() && level >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise level {level} must be >= 0")));
    }
    if level == 0.0 {
        return Ok(vec![0.0; m]);
    }
    let mut rng = key.rng();
    let g: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(g.into_iter().map(|x| level * x / norm).collect())
}

/// Returns a copy of `system` with `y <- y + n`, `||n||_2 = level`.
pub fn add_noise(system: &MeasurementSystem, level: f64, key: SeedKey) -> Result<MeasurementSystem> {
    let n = noise_vector(system.m(), level, key)?;
    let mut out = system.clone();
    if level == 0.0 {
        return Ok(out);
    }
    for (y, e) in out.y.iter_mut().zip(&n) {
        *y += e;
    }
    out.noise = Some(match &system.noise {
        Some(prev) => prev.iter().zip(&n).map(|(a, b)| a + b).collect(),
        None => n,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::{hyperbolic_cross, MultiIndex};
    use crate::polybasis::{sample_measure, Family};

    fn basis(f: Family, d: usize) -> BasisSpec {
        BasisSpec::new(f, d).unwrap()
    }

    #[test]
    fn constant_column_and_constant_function() {
        let b = basis(Family::Chebyshev, 3);
        let set = hyperbolic_cross(3, 6).unwrap();
        let pts = sample_measure(b, 40, SeedKey::new(1));
        let one = TargetFunction::new("one", 3, |_| 1.0);
        let sys = assemble(&one, &set, b, pts).unwrap();
        let s = 1.0 / 40f64.sqrt();
        for r in 0..40 {
            assert!((sys.a[(r, 0)] - s).abs() < 1e-15);
            assert!((sys.y[r] - sys.a[(r, 0)]).abs() < 1e-15);
        }
    }

    #[test]
    fn gram_is_identity_on_average() {
        let b = basis(Family::Legendre, 2);
        let set = hyperbolic_cross(2, 8).unwrap();
        let set = IndexSet::new(2, set.indices()[..set.len().min(20)].to_vec()).unwrap();
        let n = set.len();
        let f = TargetFunction::new("zero", 2, |_| 0.0);
        let mut acc = vec![0.0; n * n];
        let draws = 200;
        for t in 0..draws {
            let pts = sample_measure(b, 500, SeedKey::new(9).with_trial(t));
            let sys = assemble(&f, &set, b, pts).unwrap();
            let g = sys.a.transpose() * &sys.a;
            for r in 0..n {
                for c in 0..n {
                    acc[r * n + c] += g[(r, c)] / draws as f64;
                }
            }
        }
        for r in 0..n {
            for c in 0..n {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((acc[r * n + c] - want).abs() < 0.05, "({r},{c}) = {}", acc[r * n + c]);
            }
        }
    }

    #[test]
    fn residual_identity_on_synthetic_truth() {
        let b = basis(Family::Legendre, 3);
        let reference = hyperbolic_cross(3, 12).unwrap();
        let coeffs: Vec<f64> = reference
            .iter()
            .map(|i| 1.0 / (i.box_size() as f64).powi(2))
            .collect();
        let exp = Expansion::new(b, reference, coeffs).unwrap();
        let f = TargetFunction::from_expansion("synthetic", exp.clone());
        let lambda = hyperbolic_cross(3, 5).unwrap();
        let pts = sample_measure(b, 30, SeedKey::new(4));
        let sys = assemble(&f, &lambda, b, pts.clone()).unwrap();
        let c_lambda = exp.restrict(&lambda);
        let e = truncation_residual(&exp, &lambda, &pts).unwrap();
        let noisy = add_noise(&sys, 1e-3, SeedKey::new(2)).unwrap();
        let n = noisy.noise.as_ref().unwrap();
        for r in 0..30 {
            let ac: f64 = (0..lambda.len()).map(|k| sys.a[(r, k)] * c_lambda[k]).sum();
            assert!((sys.y[r] - ac - e[r]).abs() < 1e-12);
            assert!((noisy.y[r] - ac - e[r] - n[r]).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_residual_special_cases() {
        let b = basis(Family::Chebyshev, 2);
        let reference = hyperbolic_cross(2, 6).unwrap();
        let lambda = hyperbolic_cross(2, 3).unwrap();
        let pts = sample_measure(b, 12, SeedKey::new(8));

        let inside: Vec<f64> = reference.iter().map(|i| if lambda.contains(i) { 0.7 } else { 0.0 }).collect();
        let e = truncation_residual(&Expansion::new(b, reference.clone(), inside).unwrap(), &lambda, &pts).unwrap();
        assert!(e.iter().all(|&v| v == 0.0));

        let target = MultiIndex::new(vec![1, 2]);
        let single: Vec<f64> = reference.iter().map(|i| if *i == target { 1.0 } else { 0.0 }).collect();
        let e = truncation_residual(&Expansion::new(b, reference.clone(), single).unwrap(), &lambda, &pts).unwrap();
        for (r, p) in pts.iter().enumerate() {
            let want = crate::polybasis::eval_tensor(&target, p.coords(), b).unwrap() / 12f64.sqrt();
            assert!((e[r] - want).abs() < 1e-14);
        }

        let bigger = hyperbolic_cross(2, 8).unwrap();
        let exp = Expansion::new(b, lambda.clone(), vec![0.0; lambda.len()]).unwrap();
        assert!(truncation_residual(&exp, &bigger, &pts).is_err());
    }

    #[test]
    fn noise_has_exact_norm() {
        let b = basis(Family::Legendre, 2);
        let set = hyperbolic_cross(2, 4).unwrap();
        let f = TargetFunction::new("x", 2, |z| z[0]);
        let sys = assemble(&f, &set, b, sample_measure(b, 64, SeedKey::new(1))).unwrap();
        let same = add_noise(&sys, 0.0, SeedKey::new(3)).unwrap();
        assert_eq!(same.y, sys.y);
        let n1 = noise_vector(64, 1e-3, SeedKey::new(3)).unwrap();
        let n2 = noise_vector(64, 1e-3, SeedKey::new(4)).unwrap();
        for n in [&n1, &n2] {
            let norm = n.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1e-3).abs() < 1e-18);
        }
        assert_ne!(n1, n2);
    }

    #[test]
    fn evaluation_failure_reports_point() {
        let b = basis(Family::Legendre, 1);
        let set = hyperbolic_cross(1, 3).unwrap();
        let f = TargetFunction::new("bad", 1, |z| if z[0] > 0.0 { f64::NAN } else { 1.0 });
        let err = assemble(&f, &set, b, sample_measure(b, 50, SeedKey::new(1))).unwrap_err();
        match err {
            Error::EvaluationFailure { point, .. } => assert!(point[0] > 0.0),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn binary_dump_roundtrip() {
        let b = basis(Family::Chebyshev, 2);
        let set = hyperbolic_cross(2, 4).unwrap();
        let f = TargetFunction::new("sum", 2, |z| z[0] + z[1]);
        let sys = assemble(&f, &set, b, sample_measure(b, 5, SeedKey::new(1))).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sys.bin");
        sys.dump_binary(&path, 1, "cfg").unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 8 * (5 * 8 + 5));
        let first = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
        assert_eq!(first, sys.a[(0, 1)]);
        let side: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("sys.bin.json")).unwrap()).unwrap();
        assert_eq!(side["m"], 5);
        assert_eq!(side["n"], 8);
        assert_eq!(side["config_sha256"], sha256_hex(b"cfg"));
    }
}
