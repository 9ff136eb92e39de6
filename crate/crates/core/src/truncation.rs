//! Finite truncations of the state space and their local row caches.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::ChainModel;
use crate::state::{StateIndexer, StateKey};

/// Finite ordered set of states `S_r`. Order is the insertion order and
/// fixes the dense indices used by the solvers.
#[derive(Clone, Debug)]
pub struct Truncation {
    states: StateIndexer,
}

impl Truncation {
    /// Truncation over the given states, dropping repeats.
    pub fn new(states: impl IntoIterator<Item = StateKey>) -> Result<Self> {
        let states: StateIndexer = states.into_iter().collect();
        if states.is_empty() {
            return Err(Error::Precondition("truncations must be nonempty".into()));
        }
        Ok(Self { states })
    }

    /// One-dimensional interval `{lo..=hi}`.
    pub fn range(lo: i64, hi: i64) -> Result<Self> {
        Self::new((lo..=hi).map(StateKey::scalar))
    }

    /// Lattice box with per-coordinate inclusive bounds, in lexicographic
    /// order.
    pub fn boxed(bounds: &[(i64, i64)]) -> Result<Self> {
        if bounds.is_empty() || bounds.iter().any(|(lo, hi)| lo > hi) {
            return Err(Error::Precondition(format!("empty box {bounds:?}")));
        }
        let mut out: Vec<Vec<i64>> = vec![vec![]];
        for &(lo, hi) in bounds {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (lo..=hi).map(move |c| {
                        let mut p = prefix.clone();
                        p.push(c);
                        p
                    })
                })
                .collect();
        }
        Self::new(out.into_iter().map(StateKey::new))
    }

    /// The support of the model's initial distribution.
    pub fn initial_support(model: &ChainModel) -> Result<Self> {
        Self::new(model.gamma().support().cloned())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, x: &StateKey) -> bool {
        self.states.contains(x)
    }

    pub fn index_of(&self, x: &StateKey) -> Option<usize> {
        self.states.get(x)
    }

    pub fn state(&self, i: usize) -> &StateKey {
        self.states.key(i)
    }

    pub fn states(&self) -> &[StateKey] {
        self.states.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = &StateKey> + '_ {
        self.states.keys().iter()
    }

    pub fn is_subset_of(&self, other: &Truncation) -> bool {
        self.iter().all(|x| other.contains(x))
    }

    /// Per state: does its row reach outside the truncation?
    pub fn boundary_flags(&self, model: &ChainModel) -> Result<Vec<bool>> {
        self.iter()
            .map(|x| Ok(model.row(x)?.iter().any(|(y, _)| !self.contains(y))))
            .collect()
    }

    /// States whose rows leave the truncation.
    pub fn boundary_states(&self, model: &ChainModel) -> Result<Vec<StateKey>> {
        let flags = self.boundary_flags(model)?;
        Ok(self
            .iter()
            .zip(flags)
            .filter(|(_, b)| *b)
            .map(|(x, _)| x.clone())
            .collect())
    }

    /// Targets outside the truncation reachable in one step, in key order.
    pub fn frontier(&self, model: &ChainModel) -> Result<Vec<StateKey>> {
        let mut out = BTreeSet::new();
        for x in self.iter() {
            for (y, _) in model.row(x)?.iter() {
                if !self.contains(y) {
                    out.insert(y.clone());
                }
            }
        }
        Ok(out.into_iter().collect())
    }

    /// This truncation followed by its one-step frontier.
    pub fn expanded(&self, model: &ChainModel) -> Result<Self> {
        let frontier = self.frontier(model)?;
        Self::new(self.iter().cloned().chain(frontier))
    }
}

/// Rows of the states in a truncation in compressed form, split into the
/// part staying inside (`cols`, `vals`) and the weight leaving (`leak`).
#[derive(Clone, Debug)]
pub(crate) struct LocalRows {
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
    pub leak: Vec<f64>,
    /// Row total: 1 for probability rows, `q(x)` for rate rows.
    pub total: Vec<f64>,
}

impl LocalRows {
    pub fn build(model: &ChainModel, trunc: &Truncation) -> Result<Self> {
        Self::build_with(trunc, |x| {
            let row = model.row(x)?;
            Ok((row.entries().to_vec(), row.total()))
        })
    }

    /// Same as [`LocalRows::build`] with a caller-supplied row source,
    /// returning `(entries, total)` per state.
    pub fn build_with(
        trunc: &Truncation,
        mut row: impl FnMut(&StateKey) -> Result<(Vec<(StateKey, f64)>, f64)>,
    ) -> Result<Self> {
        let n = trunc.len();
        let mut out = Self {
            row_ptr: Vec::with_capacity(n + 1),
            cols: Vec::new(),
            vals: Vec::new(),
            leak: vec![0.0; n],
            total: vec![0.0; n],
        };
        out.row_ptr.push(0);
        for (i, x) in trunc.iter().enumerate() {
            let (entries, total) = row(x)?;
            out.total[i] = total;
            for (y, w) in entries {
                match trunc.index_of(&y) {
                    Some(j) => {
                        out.cols.push(j);
                        out.vals.push(w);
                    }
                    None => out.leak[i] += w,
                }
            }
            out.row_ptr.push(out.cols.len());
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.leak.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// `out = v * M` for the in-truncation part `M`; returns the mass sent
    /// outside, `sum_i v_i leak_i`.
    pub fn left_multiply(&self, v: &[f64], out: &mut [f64]) -> f64 {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut leaked = 0.0;
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (j, w) in self.row(i) {
                out[j] += vi * w;
            }
            leaked += vi * self.leak[i];
        }
        leaked
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_order_is_lexicographic() {
        let t = Truncation::boxed(&[(0, 1), (5, 6)]).unwrap();
        let s: Vec<String> = t.iter().map(|k| k.to_string()).collect();
        assert_eq!(s, ["(0, 5)", "(0, 6)", "(1, 5)", "(1, 6)"]);
    }

    #[test]
    fn empty_rejected() {
        assert!(Truncation::new(Vec::new()).is_err());
        assert!(Truncation::range(3, 2).is_err());
    }

    #[test]
    fn boundary_and_frontier() {
        let m = ChainModel::gambler(0.5, 10, 5).unwrap();
        let t = Truncation::range(3, 6).unwrap();
        let b: Vec<i64> = t.boundary_states(&m).unwrap().iter().map(|k| k.first()).collect();
        assert_eq!(b, [3, 6]);
        let f: Vec<i64> = t.frontier(&m).unwrap().iter().map(|k| k.first()).collect();
        assert_eq!(f, [2, 7]);
        let e = t.expanded(&m).unwrap();
        assert_eq!(e.len(), 6);
        assert!(t.is_subset_of(&e));
        assert_eq!(e.state(0).first(), 3);
    }

    #[test]
    fn local_rows_leak() {
        let m = ChainModel::gambler(0.25, 10, 5).unwrap();
        let t = Truncation::range(4, 5).unwrap();
        let rows = LocalRows::build(&m, &t).unwrap();
        assert_eq!(rows.leak, vec![0.75, 0.25]);
        let mut out = vec![0.0; 2];
        let leaked = rows.left_multiply(&[1.0, 0.0], &mut out);
        assert_eq!(out, vec![0.0, 0.25]);
        assert_eq!(leaked, 0.75);
    }
}
