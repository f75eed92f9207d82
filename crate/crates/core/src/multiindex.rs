//! Multi-indices, lower sets and hyperbolic crosses.
//!
//! Index sets are kept in graded lexicographic order: first by `prod_j (i_j + 1)`,
//! then lexicographically. Strict coordinatewise domination implies a strictly
//! smaller product, so this order is a linear extension of the partial order that
//! defines lower sets. Matrix columns, coefficient vectors and CSV output all use
//! it.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::polybasis::Family;
use crate::{Error, Result};

/// Default cap on the number of indices `hyperbolic_cross` will materialise.
pub const DEFAULT_CARDINALITY_CAP: u64 = 10_000_000;

/// Default cap on the number of sets `enumerate_lower_sets` will emit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 2_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    /// The unit vector `e_j` in dimension `d`.
    pub fn unit(d: usize, j: usize) -> Self {
        let mut v = vec![0; d];
        v[j] = 1;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// `prod_j (i_j + 1)`, saturating.
    pub fn box_size(&self) -> u64 {
        self.0
            .iter()
            .fold(1u64, |acc, &x| acc.saturating_mul(x as u64 + 1))
    }

    /// Number of nonzero entries.
    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|&&x| x != 0).count()
    }

    pub fn max_degree(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    /// Coordinatewise `self <= other`.
    pub fn dominated_by(&self, other: &MultiIndex) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    fn shifted(&self, j: usize, up: bool) -> MultiIndex {
        let mut v = self.0.clone();
        if up {
            v[j] += 1;
        } else {
            v[j] -= 1;
        }
        MultiIndex(v)
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.box_size()
            .cmp(&other.box_size())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (n, x) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// A finite set of multi-indices of a common dimension, in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawIndexSet")]
pub struct IndexSet {
    d: usize,
    indices: Vec<MultiIndex>,
}

#[derive(Deserialize)]
struct RawIndexSet {
    d: usize,
    indices: Vec<MultiIndex>,
}

impl TryFrom<RawIndexSet> for IndexSet {
    type Error = Error;

    fn try_from(raw: RawIndexSet) -> Result<Self> {
        IndexSet::new(raw.d, raw.indices)
    }
}

impl IndexSet {
    /// Sorts into canonical order. Rejects mixed dimensions and duplicates.
    pub fn new(d: usize, mut indices: Vec<MultiIndex>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if let Some(bad) = indices.iter().find(|i| i.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: bad.dim() });
        }
        indices.sort();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!("duplicate index {}", w[0])));
        }
        Ok(Self { d, indices })
    }

    /// Caller guarantees canonical order, common dimension and no duplicates.
    fn from_sorted(d: usize, indices: Vec<MultiIndex>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self { d, indices }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.indices.iter()
    }

    pub fn get(&self, n: usize) -> Option<&MultiIndex> {
        self.indices.get(n)
    }

    /// Column position of `i`, by binary search in canonical order.
    pub fn position(&self, i: &MultiIndex) -> Option<usize> {
        self.indices.binary_search(i).ok()
    }

    pub fn contains(&self, i: &MultiIndex) -> bool {
        self.position(i).is_some()
    }

    /// Largest single-coordinate degree in the set.
    pub fn max_degree(&self) -> u32 {
        self.indices.iter().map(MultiIndex::max_degree).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl<'a> IntoIterator for &'a IndexSet {
    type Item = &'a MultiIndex;
    type IntoIter = std::slice::Iter<'a, MultiIndex>;

    fn into_iter(self) -> Self::IntoIter {
        self.indices.iter()
    }
}

/// Positive weights aligned with an `IndexSet`, each at least 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    values: Vec<f64>,
}

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite);
        }
        if let Some(w) = values.iter().find(|&&w| w < 1.0) {
            return Err(Error::InvalidArgument(format!("weight {w} is below 1")));
        }
        Ok(Self { values })
    }

    /// All-ones weights (unweighted l1).
    pub fn ones(n: usize) -> Self {
        Self { values: vec![1.0; n] }
    }

    /// `u_i^alpha` for the intrinsic weights `u` of `family`.
    pub fn intrinsic(set: &IndexSet, family: Family, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!("weight exponent {alpha} must be >= 0")));
        }
        let values = set
            .iter()
            .map(|i| intrinsic_weight(i, family).powf(alpha))
            .collect();
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// True iff every index dominated by a member is also a member.
///
/// Checking the immediate predecessors `i - e_j` suffices by induction.
pub fn is_lower(set: &IndexSet) -> bool {
    let members: HashSet<&MultiIndex> = set.iter().collect();
    set.iter().all(|i| {
        (0..set.dim())
            .filter(|&j| i.0[j] > 0)
            .all(|j| members.contains(&i.shifted(j, false)))
    })
}

/// Exact `|{ i in N^d : prod (i_j + 1) <= k }|` without materialising the set.
pub fn hyperbolic_cross_cardinality(d: usize, k: u64) -> u64 {
    fn count(d: usize, k: u64, memo: &mut HashMap<(usize, u64), u64>) -> u64 {
        if k == 0 {
            return 0;
        }
        if d == 1 {
            return k;
        }
        if let Some(&c) = memo.get(&(d, k)) {
            return c;
        }
        let mut total = 0u64;
        for a in 1..=k {
            total = total.saturating_add(count(d - 1, k / a, memo));
        }
        memo.insert((d, k), total);
        total
    }
    if d == 0 {
        return 0;
    }
    count(d, k, &mut HashMap::new())
}

/// `min{2 k^3 4^d, e^2 k^(2 + log2 d)}`, rounded up and saturated at `u64::MAX`.
pub fn hc_cardinality_bound(d: usize, k: u64) -> u64 {
    let kf = k as f64;
    let a = 2.0 * kf.powi(3) * 4f64.powf(d as f64);
    let b = std::f64::consts::E.powi(2) * kf.powf(2.0 + (d as f64).log2());
    let v = a.min(b).ceil();
    if !v.is_finite() || v >= u64::MAX as f64 {
        u64::MAX
    } else {
        v as u64
    }
}

/// The hyperbolic cross of order `k` with the default cardinality cap.
pub fn hyperbolic_cross(d: usize, k: u64) -> Result<IndexSet> {
    hyperbolic_cross_with_cap(d, k, DEFAULT_CARDINALITY_CAP)
}

/// The hyperbolic cross `{ i : prod_j (i_j + 1) <= k }`, refusing sets larger than `cap`.
pub fn hyperbolic_cross_with_cap(d: usize, k: u64, cap: u64) -> Result<IndexSet> {
    if d == 0 || k == 0 {
        return Err(Error::InvalidArgument(format!(
            "hyperbolic cross needs d >= 1 and k >= 1 (got d = {d}, k = {k})"
        )));
    }
    let predicted = hyperbolic_cross_cardinality(d, k);
    if predicted > cap {
        return Err(Error::CardinalityGuard { predicted, cap });
    }
    let mut out = Vec::with_capacity(predicted as usize);
    let mut cur = vec![0u32; d];
    fn rec(j: usize, budget: u64, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if j == cur.len() {
            out.push(MultiIndex(cur.clone()));
            return;
        }
        let mut a = 1u64;
        while a <= budget {
            cur[j] = (a - 1) as u32;
            rec(j + 1, budget / a, cur, out);
            a += 1;
        }
        cur[j] = 0;
    }
    rec(0, k, &mut cur, &mut out);
    out.sort();
    Ok(IndexSet::from_sorted(d, out))
}

/// Intrinsic weight `u_i = ||phi_i||_inf`.
///
/// Chebyshev: `2^(||i||_0 / 2)`. Legendre: `prod_j sqrt(2 i_j + 1)`.
pub fn intrinsic_weight(i: &MultiIndex, family: Family) -> f64 {
    match family {
        Family::Chebyshev => 2f64.powf(i.support_size() as f64 / 2.0),
        Family::Legendre => i
            .entries()
            .iter()
            .map(|&x| (2.0 * x as f64 + 1.0).sqrt())
            .product(),
    }
}

/// `u_i^2`, exact for every index: `2^||i||_0` or `prod_j (2 i_j + 1)`.
pub fn intrinsic_weight_sq(i: &MultiIndex, family: Family) -> f64 {
    match family {
        Family::Chebyshev => 2f64.powi(i.support_size() as i32),
        Family::Legendre => i.entries().iter().map(|&x| 2.0 * x as f64 + 1.0).product(),
    }
}

/// `sum_i w_i^2`.
pub fn weighted_cardinality(set: &IndexSet, w: &WeightVector) -> Result<f64> {
    if set.len() != w.len() {
        return Err(Error::DimensionMismatch { expected: set.len(), found: w.len() });
    }
    Ok(w.values().iter().map(|x| x * x).sum())
}

/// Streams every lower set in dimension `d` of cardinality at most `k`.
///
/// A lower set listed in canonical order has lower prefixes, so each set is built
/// by appending admissible frontier indices larger than its current maximum. That
/// path is unique, which rules out duplicates without a seen-set.
pub struct LowerSets {
    d: usize,
    k: usize,
    cap: u64,
    emitted: u64,
    members: Vec<MultiIndex>,
    lookup: HashSet<MultiIndex>,
    stack: Vec<(Vec<MultiIndex>, usize)>,
    started: bool,
    failed: bool,
}

impl LowerSets {
    fn frontier(&self) -> Vec<MultiIndex> {
        let last = self.members.last().expect("members always contains 0");
        let mut cands: Vec<MultiIndex> = Vec::new();
        for s in &self.members {
            for j in 0..self.d {
                let c = s.shifted(j, true);
                if c <= *last || self.lookup.contains(&c) {
                    continue;
                }
                let admissible = (0..self.d)
                    .filter(|&l| c.0[l] > 0)
                    .all(|l| self.lookup.contains(&c.shifted(l, false)));
                if admissible {
                    cands.push(c);
                }
            }
        }
        cands.sort();
        cands.dedup();
        cands
    }

    fn snapshot(&self) -> IndexSet {
        IndexSet::from_sorted(self.d, self.members.clone())
    }

    fn pop_member(&mut self) {
        if let Some(m) = self.members.pop() {
            self.lookup.remove(&m);
        }
    }
}

impl Iterator for LowerSets {
    type Item = Result<IndexSet>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        if !self.started {
            self.started = true;
            if self.k == 0 {
                return None;
            }
            let zero = MultiIndex::zero(self.d);
            self.lookup.insert(zero.clone());
            self.members.push(zero);
            if self.k > 1 {
                let f = self.frontier();
                self.stack.push((f, 0));
            }
            self.emitted = 1;
            return Some(Ok(self.snapshot()));
        }
        loop {
            let (cands, pos) = self.stack.last_mut()?;
            if *pos < cands.len() {
                let c = cands[*pos].clone();
                *pos += 1;
                if self.emitted >= self.cap {
                    self.failed = true;
                    return Some(Err(Error::EnumerationGuard(format!(
                        "more than {} lower sets (d = {}, k = {})",
                        self.cap, self.d, self.k
                    ))));
                }
                self.lookup.insert(c.clone());
                self.members.push(c);
                let out = self.snapshot();
                if self.members.len() < self.k {
                    let f = self.frontier();
                    self.stack.push((f, 0));
                } else {
                    self.pop_member();
                }
                self.emitted += 1;
                return Some(Ok(out));
            }
            self.stack.pop();
            if self.stack.is_empty() {
                return None;
            }
            self.pop_member();
        }
    }
}

/// Every lower set of cardinality at most `k`, with the default enumeration cap.
pub fn enumerate_lower_sets(d: usize, k: usize) -> LowerSets {
    enumerate_lower_sets_with_cap(d, k, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_lower_sets_with_cap(d: usize, k: usize, cap: u64) -> LowerSets {
    LowerSets {
        d: d.max(1),
        k,
        cap,
        emitted: 0,
        members: Vec::new(),
        lookup: HashSet::new(),
        stack: Vec::new(),
        started: false,
        failed: false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerCardinalityMode {
    BruteForce,
    UpperBound,
}

/// `s(k) = max { |S|_u : S lower, |S| <= k }` with intrinsic weights `u`, or its
/// closed-form upper bound `k^gamma`.
pub fn max_lower_weighted_cardinality(
    d: usize,
    k: usize,
    family: Family,
    mode: LowerCardinalityMode,
) -> Result<f64> {
    if d == 0 || k == 0 {
        return Err(Error::InvalidArgument("need d >= 1 and k >= 1".into()));
    }
    match mode {
        LowerCardinalityMode::UpperBound => {
            let gamma = match family {
                Family::Chebyshev => 3f64.ln() / 2f64.ln(),
                Family::Legendre => 2.0,
            };
            Ok((k as f64).powf(gamma))
        }
        LowerCardinalityMode::BruteForce => {
            let mut best = 0.0f64;
            for s in enumerate_lower_sets(d, k) {
                let s = s?;
                let v: f64 = s.iter().map(|i| intrinsic_weight_sq(i, family)).sum();
                best = best.max(v);
            }
            Ok(best)
        }
    }
}
