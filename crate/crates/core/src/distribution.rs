//! Finitely supported nonnegative measures over states.

use std::collections::BTreeMap;

use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::error::{Error, Result};
use crate::state::StateKey;

/// Finitely supported nonnegative measure with an explicit mass.
///
/// Entries are strictly positive; zeros are pruned on insertion.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseDistribution {
    entries: BTreeMap<StateKey, f64>,
    mass: f64,
}

/// Serialized as a list of `[state, mass]` pairs in key order.
impl Serialize for SparseDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.entries.len()))?;
        for entry in &self.entries {
            seq.serialize_element(&entry)?;
        }
        seq.end()
    }
}

impl SparseDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Unit point mass at `x`.
    pub fn point(x: impl Into<StateKey>) -> Self {
        let mut d = Self::new();
        d.entries.insert(x.into(), 1.0);
        d.mass = 1.0;
        d
    }

    /// Builds a measure from `(state, weight)` pairs, summing duplicates.
    ///
    /// Rejects negative or non-finite weights.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (StateKey, f64)>) -> Result<Self> {
        let mut d = Self::new();
        for (k, w) in pairs {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "weight {w} at state {k} is not a finite nonnegative number"
                )));
            }
            d.add(k, w);
        }
        Ok(d)
    }

    /// Empirical measure `count / total` for each state. The cached mass is
    /// computed from the integer counts, so it is exactly 1 when the counts
    /// sum to `total`.
    pub fn from_counts(counts: BTreeMap<StateKey, u64>, total: u64) -> Self {
        let sum: u64 = counts.values().sum();
        let denom = total as f64;
        let entries = counts
            .into_iter()
            .filter(|(_, c)| *c > 0)
            .map(|(k, c)| (k, c as f64 / denom))
            .collect();
        Self {
            entries,
            mass: sum as f64 / denom,
        }
    }

    /// Adds `w` to the entry at `k`.
    pub fn add(&mut self, k: StateKey, w: f64) {
        if w == 0.0 {
            return;
        }
        *self.entries.entry(k).or_insert(0.0) += w;
        self.mass += w;
    }

    pub fn get(&self, k: &StateKey) -> f64 {
        self.entries.get(k).copied().unwrap_or(0.0)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Recomputes the cached mass from the entries.
    pub fn recompute_mass(&mut self) {
        self.mass = self.entries.values().sum();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StateKey, f64)> + '_ {
        self.entries.iter().map(|(k, &w)| (k, w))
    }

    pub fn support(&self) -> impl Iterator<Item = &StateKey> + '_ {
        self.entries.keys()
    }

    /// Restriction to the states accepted by `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(&StateKey) -> bool) -> Self {
        let entries: BTreeMap<_, _> = self
            .entries
            .iter()
            .filter(|(k, _)| keep(k))
            .map(|(k, &w)| (k.clone(), w))
            .collect();
        let mass = entries.values().sum();
        Self { entries, mass }
    }

    /// Scales every entry by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|(k, &w)| (k.clone(), w * c)).collect(),
            mass: self.mass * c,
        }
    }

    /// Normalized copy with mass one. Returns `None` for the zero measure.
    pub fn normalized(&self) -> Option<Self> {
        let m: f64 = self.entries.values().sum();
        (m > 0.0).then(|| {
            let mut out = self.scaled(1.0 / m);
            out.mass = 1.0;
            out
        })
    }

    /// Drops entries with weight at or below `cutoff`.
    pub fn pruned(&self, cutoff: f64) -> Self {
        self.restrict_by_weight(|w| w > cutoff)
    }

    fn restrict_by_weight(&self, keep: impl Fn(f64) -> bool) -> Self {
        let entries: BTreeMap<_, _> = self
            .entries
            .iter()
            .filter(|(_, &w)| keep(w))
            .map(|(k, &w)| (k.clone(), w))
            .collect();
        let mass = entries.values().sum();
        Self { entries, mass }
    }

    /// `sum |self(x) - other(x)|`.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.signed_parts(other).iter().map(|v| v.abs()).sum()
    }

    /// Total variation norm `sup_A |self(A) - other(A)|` of the signed
    /// difference: the larger of its positive and negative parts. For two
    /// probability distributions this is half the l1 distance; when `other`
    /// lower-bounds `self` pointwise it is the mass defect.
    pub fn tv_distance(&self, other: &Self) -> f64 {
        let (mut pos, mut neg) = (0.0, 0.0);
        for v in self.signed_parts(other) {
            if v > 0.0 {
                pos += v;
            } else {
                neg -= v;
            }
        }
        f64::max(pos, neg)
    }

    fn signed_parts(&self, other: &Self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() + other.len());
        for (k, w) in self.iter() {
            out.push(w - other.get(k));
        }
        for (k, w) in other.iter() {
            if !self.entries.contains_key(k) {
                out.push(-w);
            }
        }
        out
    }

    /// Pointwise `self <= other + tol`.
    pub fn dominated_by(&self, other: &Self, tol: f64) -> bool {
        self.iter().all(|(k, w)| w <= other.get(k) + tol)
    }
}

impl FromIterator<(StateKey, f64)> for SparseDistribution {
    /// Panics on negative weights; use [`SparseDistribution::from_pairs`]
    /// for untrusted input.
    fn from_iter<I: IntoIterator<Item = (StateKey, f64)>>(iter: I) -> Self {
        Self::from_pairs(iter).expect("nonnegative weights")
    }
}
