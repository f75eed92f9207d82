use super::*;
use crate::estimators::{Estimator, Provenance};
use crate::multiindex::{hyperbolic_cross, MultiIndex};
use crate::polybasis::eval_tensor;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn prov() -> Provenance {
    Provenance {
        estimator: Estimator::CompressedSensing,
        eta_strategy: None,
        eta: None,
        alpha: None,
        m: 0,
        seed: SeedKey::new(0),
        converged: true,
        iterations: 0,
    }
}

fn zero_surrogate(basis: BasisSpec) -> Surrogate {
    let lambda = IndexSet::new(basis.d, vec![MultiIndex::zero(basis.d)]).unwrap();
    Surrogate::new(basis, lambda, vec![0.0], prov()).unwrap()
}

fn phi(basis: BasisSpec, i: Vec<u32>) -> TargetFunction {
    let i = MultiIndex::new(i);
    TargetFunction::new("phi", basis.d, move |z: &[f64]| eval_tensor(&i, z, basis).unwrap())
}

fn random(m: usize, n: usize, seed: u64) -> Mat<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Mat::from_fn(m, n, |_, _| (rng.random::<f64>() * 2.0 - 1.0) / (m as f64).sqrt())
}

#[test]
fn exact_surrogate_has_zero_error() {
    let basis = BasisSpec::new(Family::Legendre, 3).unwrap();
    let lambda = hyperbolic_cross(3, 6).unwrap();
    let c: Vec<f64> = (0..lambda.len()).map(|p| 1.0 / (p + 1) as f64).collect();
    let s = Surrogate::new(basis, lambda, c, prov()).unwrap();
    let f = TargetFunction::from_expansion("planted", s.expansion());
    let r = error_report(&f, &s, 2000, 5000, SeedKey::new(3)).unwrap();
    assert!(r.l2_error <= 1e-8 && r.linf_error <= 1e-8);
}

#[test]
fn l2_error_of_one_basis_function_is_one() {
    let n = 20_000;
    for family in [Family::Chebyshev, Family::Legendre] {
        let basis = BasisSpec::new(family, 2).unwrap();
        for i in [vec![0, 0], vec![1, 0], vec![2, 3], vec![0, 5]] {
            let e = error_l2_mc(&phi(basis, i.clone()), &zero_surrogate(basis), n, SeedKey::new(11)).unwrap();
            assert!((e - 1.0).abs() <= 5.0 / (n as f64).sqrt(), "{family:?} {i:?}: {e}");
        }
    }
}

#[test]
fn l2_estimator_spread_shrinks_with_more_points() {
    let basis = BasisSpec::new(Family::Legendre, 1).unwrap();
    let f = phi(basis, vec![2]);
    let s = zero_surrogate(basis);
    let spread = |n: usize| {
        let v: Vec<f64> = (0..400)
            .map(|t| error_l2_mc(&f, &s, n, SeedKey::new(5).with_trial(t)).unwrap())
            .collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    let ratio = spread(100) / spread(200);
    assert!((1.2..1.7).contains(&ratio), "ratio {ratio}");
}

#[test]
fn linf_error_of_legendre_three() {
    let basis = BasisSpec::new(Family::Legendre, 1).unwrap();
    let e = error_linf_mc(&phi(basis, vec![3]), &zero_surrogate(basis), 100_000, SeedKey::new(9)).unwrap();
    let sup = 7f64.sqrt();
    assert!(e <= sup * (1.0 + 1e-12) && e >= 0.9 * sup, "{e}");
}

#[test]
fn linf_error_is_monotone_in_nested_samples() {
    let basis = BasisSpec::new(Family::Chebyshev, 2).unwrap();
    let f = TargetFunction::new("g", 2, |z: &[f64]| (3.0 * z[0]).sin() * z[1]);
    let s = zero_surrogate(basis);
    let mut last = 0.0;
    for n in [10, 40, 160, 640, 2560] {
        let e = error_linf_mc(&f, &s, n, SeedKey::new(1)).unwrap();
        assert!(e >= last);
        last = e;
    }
}

#[test]
fn zero_points_rejected() {
    let basis = BasisSpec::new(Family::Chebyshev, 1).unwrap();
    let f = phi(basis, vec![1]);
    assert!(error_l2_mc(&f, &zero_surrogate(basis), 0, SeedKey::new(0)).is_err());
    assert!(error_linf_mc(&f, &zero_surrogate(basis), 0, SeedKey::new(0)).is_err());
}

#[test]
fn qu_of_a_single_column() {
    let basis = BasisSpec::new(Family::Legendre, 1).unwrap();
    let lambda = IndexSet::new(1, vec![MultiIndex::zero(1)]).unwrap();
    let a = Mat::from_fn(1, 1, |_, _| 1.0);
    assert!((qu_constant(a.as_ref(), &lambda, basis).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn qu_matches_svd_oracle() {
    for (seed, family) in [(1u64, Family::Chebyshev), (2, Family::Legendre), (3, Family::Chebyshev)] {
        let basis = BasisSpec::new(family, 3).unwrap();
        let lambda = hyperbolic_cross(3, 10).unwrap();
        let (m, n) = (12, lambda.len());
        let pts = sample_measure(basis, m, SeedKey::new(seed));
        let a = sampling_matrix(&lambda, basis, &pts).unwrap();
        let na = nalgebra::DMatrix::from_fn(n, m, |i, j| a[(j, i)] * (m as f64 / n as f64).sqrt());
        let smin = na.singular_values().min();
        let size: f64 = lambda
            .iter()
            .map(|i| crate::multiindex::intrinsic_weight(i, family).powi(2))
            .sum();
        let want = (size / n as f64).sqrt() / smin;
        let got = qu_constant(a.as_ref(), &lambda, basis).unwrap();
        assert!((got - want).abs() <= 1e-8 * want, "{got} vs {want}");
    }
}

#[test]
fn qu_rejects_rank_deficiency_and_tall_input() {
    let basis = BasisSpec::new(Family::Chebyshev, 2).unwrap();
    let lambda = hyperbolic_cross(2, 6).unwrap();
    let mut pts = sample_measure(basis, 4, SeedKey::new(4));
    pts.push(pts[0].clone());
    let a = sampling_matrix(&lambda, basis, &pts).unwrap();
    assert!(matches!(qu_constant(a.as_ref(), &lambda, basis), Err(Error::RankDeficient { .. })));
    let pts = sample_measure(basis, lambda.len() + 1, SeedKey::new(4));
    let a = sampling_matrix(&lambda, basis, &pts).unwrap();
    assert!(qu_constant(a.as_ref(), &lambda, basis).is_err());
}

#[test]
fn weighted_size_chains() {
    for d in 1..=8usize {
        for k in 1..=22u64 {
            let lambda = hyperbolic_cross(d, k).unwrap();
            let n = lambda.len() as f64;
            let cheb = lambda_weighted_size(&lambda, Family::Chebyshev).unwrap();
            let leg = lambda_weighted_size(&lambda, Family::Legendre).unwrap();
            assert!(cheb <= k as f64 * n * (1.0 + 1e-12), "cheb d={d} k={k}");
            assert!(leg <= (k * k) as f64 * n * (1.0 + 1e-12), "leg d={d} k={k}");
        }
    }
}

#[test]
fn gram_lemma_single_column() {
    let basis = BasisSpec::new(Family::Chebyshev, 2).unwrap();
    let lambda = IndexSet::new(2, vec![MultiIndex::zero(2)]).unwrap();
    let v = empirical_gram_min_eig(basis, &lambda, 3, 10, SeedKey::new(1)).unwrap();
    assert!(v.abs() < 1e-12);
}

#[test]
fn gram_lemma_monte_carlo() {
    for family in [Family::Chebyshev, Family::Legendre] {
        let basis = BasisSpec::new(family, 2).unwrap();
        let lambda = hyperbolic_cross(2, 3).unwrap();
        assert_eq!(lambda.len(), 5);
        let v = empirical_gram_min_eig(basis, &lambda, 4, 5000, SeedKey::new(8)).unwrap();
        assert!((v - 0.8).abs() <= 0.05, "{family:?}: {v}");
        // Same draws regardless of thread scheduling.
        assert_eq!(v, empirical_gram_min_eig(basis, &lambda, 4, 5000, SeedKey::new(8)).unwrap());
    }
}

#[test]
fn gram_estimate_approaches_the_limit() {
    let basis = BasisSpec::new(Family::Legendre, 2).unwrap();
    let lambda = hyperbolic_cross(2, 3).unwrap();
    let err = |trials: usize| -> f64 {
        (0..8)
            .map(|s| (empirical_gram_min_eig(basis, &lambda, 4, trials, SeedKey::new(s)).unwrap() - 0.8).abs())
            .sum::<f64>()
    };
    assert!(err(4000) < err(20));
}

// Independent oracle: every subset of at most 12 columns, by bitmask.
fn worst_by_bitmask(a: &Mat<f64>, admissible: impl Fn(&[usize]) -> bool) -> f64 {
    let n = a.ncols();
    let mut worst = 0.0f64;
    for mask in 1u32..(1 << n) {
        let s: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
        if !admissible(&s) {
            continue;
        }
        let g = nalgebra::DMatrix::from_fn(s.len(), s.len(), |p, q| {
            (0..a.nrows()).map(|r| a[(r, s[p])] * a[(r, s[q])]).sum::<f64>() - if p == q { 1.0 } else { 0.0 }
        });
        let ev = g.symmetric_eigenvalues();
        worst = worst.max(ev.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    worst
}

#[test]
fn orthonormal_columns_have_zero_ric() {
    let a = Mat::from_fn(6, 6, |i, j| if i == j { 1.0 } else { 0.0 });
    let lambda = hyperbolic_cross(1, 6).unwrap();
    let u = WeightVector::intrinsic(&lambda, Family::Legendre, 1.0).unwrap();
    assert!(lower_ric_bruteforce(a.as_ref(), &lambda, 3, &u).unwrap() < 1e-15);
    assert!(ric_bruteforce(a.as_ref(), 4).unwrap() < 1e-15);
}

#[test]
fn scaled_column_gives_its_deviation() {
    let lambda = IndexSet::new(1, vec![MultiIndex::zero(1)]).unwrap();
    let u = WeightVector::ones(1);
    let a = Mat::from_fn(1, 1, |_, _| (1.0f64 + 0.37).sqrt());
    let d = lower_ric_bruteforce(a.as_ref(), &lambda, 1, &u).unwrap();
    assert!((d - 0.37).abs() < 1e-14);
}

#[test]
fn ric_matches_bitmask_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..30u64 {
        let d = rng.random_range(1..=3usize);
        let family = if rng.random::<bool>() { Family::Chebyshev } else { Family::Legendre };
        // At most 10 columns keeps the bitmask oracle cheap.
        let lambda = hyperbolic_cross(d, [10, 5, 3][d - 1]).unwrap();
        let n = lambda.len();
        let m = rng.random_range(3..=n);
        let a = random(m, n, 1000 + trial);
        let u = WeightVector::intrinsic(&lambda, family, 1.0).unwrap();
        let k = rng.random_range(1..=4usize);
        let budget = lower_budget_within(&lambda, k, &u).unwrap();
        let want = worst_by_bitmask(&a, |s| s.iter().map(|&j| u.values()[j].powi(2)).sum::<f64>() <= budget + 1e-9);
        let got = lower_ric_bruteforce(a.as_ref(), &lambda, k, &u).unwrap();
        assert!((got - want).abs() < 1e-10, "trial {trial}: {got} vs {want}");
        let want = worst_by_bitmask(&a, |s| s.len() <= k);
        assert!((ric_bruteforce(a.as_ref(), k).unwrap() - want).abs() < 1e-10);
    }
}

#[test]
fn budget_matches_global_s_of_k_inside_the_cross() {
    for family in [Family::Chebyshev, Family::Legendre] {
        for (d, k) in [(1, 5), (2, 4), (3, 3)] {
            let lambda = hyperbolic_cross(d, k as u64).unwrap();
            let u = WeightVector::intrinsic(&lambda, family, 1.0).unwrap();
            let want = crate::multiindex::max_lower_weighted_cardinality(
                d,
                k,
                family,
                crate::multiindex::LowerCardinalityMode::BruteForce,
            )
            .unwrap();
            assert!((lower_budget_within(&lambda, k, &u).unwrap() - want).abs() < 1e-9);
        }
    }
}

#[test]
fn lower_ric_is_below_classical_in_one_dimension() {
    // In d = 1 every admissible support has at most k elements.
    for trial in 0..20u64 {
        let lambda = hyperbolic_cross(1, 6).unwrap();
        let a = random(4, 6, 50 + trial);
        for family in [Family::Chebyshev, Family::Legendre] {
            let u = WeightVector::intrinsic(&lambda, family, 1.0).unwrap();
            for k in 1..=5 {
                let low = lower_ric_bruteforce(a.as_ref(), &lambda, k, &u).unwrap();
                assert!(low <= ric_bruteforce(a.as_ref(), k).unwrap() + 1e-12);
            }
        }
    }
}

#[test]
fn ric_guard() {
    let lambda = hyperbolic_cross(1, 61).unwrap();
    let a = random(10, 61, 1);
    let u = WeightVector::ones(61);
    assert!(matches!(lower_ric_bruteforce(a.as_ref(), &lambda, 2, &u), Err(Error::EnumerationGuard(_))));
}

fn small_system(seed: u64) -> (Mat<f64>, IndexSet, BasisSpec) {
    let basis = BasisSpec::new(Family::Legendre, 2).unwrap();
    let lambda = hyperbolic_cross(2, 8).unwrap();
    let pts = sample_measure(basis, 8, SeedKey::new(seed));
    (sampling_matrix(&lambda, basis, &pts).unwrap(), lambda, basis)
}

#[test]
fn tail_bound_arithmetic() {
    let (a, lambda, basis) = small_system(2);
    let q = qu_constant(a.as_ref(), &lambda, basis).unwrap();
    assert_eq!(tail_term_bound(a.as_ref(), &lambda, basis, 0.1, 0.2, 8.0).unwrap(), 0.0);
    let eta = 0.05;
    let b = tail_term_bound(a.as_ref(), &lambda, basis, 2.0 * eta, eta, 8.0).unwrap();
    assert!((b - q * eta * 8.0).abs() <= 1e-12 * b);
    // Affine in eta on [0, e_norm].
    let t = |eta: f64| tail_term_bound(a.as_ref(), &lambda, basis, 1.0, eta, 8.0).unwrap();
    assert!((t(0.25) - 0.5 * (t(0.0) + t(0.5))).abs() <= 1e-12 * t(0.0));
    assert!(t(0.9) < t(0.5) && t(1.0) == 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prop_qu_row_permutation_invariant(seed in 0u64..10_000, shift in 1usize..7) {
        let (a, lambda, basis) = small_system(seed);
        let m = a.nrows();
        let perm = Mat::from_fn(m, a.ncols(), |i, j| a[((i + shift) % m, j)]);
        let q1 = qu_constant(a.as_ref(), &lambda, basis).unwrap();
        let q2 = qu_constant(perm.as_ref(), &lambda, basis).unwrap();
        prop_assert!((q1 - q2).abs() <= 1e-9 * q1);
    }

    #[test]
    fn prop_l2_of_basis_function_is_one(i0 in 0u32..6, i1 in 0u32..6, cheb in any::<bool>(), seed in 0u64..1000) {
        let family = if cheb { Family::Chebyshev } else { Family::Legendre };
        let basis = BasisSpec::new(family, 2).unwrap();
        let n = 4000;
        let e = error_l2_mc(&phi(basis, vec![i0, i1]), &zero_surrogate(basis), n, SeedKey::new(seed)).unwrap();
        // The spread of phi_i^2 grows with the degree; 0.25 is about 8 standard errors here.
        prop_assert!((e - 1.0).abs() <= 0.25, "{}", e);
    }
}
