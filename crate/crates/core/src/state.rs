//! State keys and dense indexing.
//!
//! States of a countable chain are integer tuples. Solvers never see the
//! tuples directly; they work on the dense indices handed out by a
//! [`StateIndexer`] in discovery order.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

/// An opaque integer-tuple state. Ordered lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(SmallVec<[i64; 4]>);

impl StateKey {
    /// Builds a key from its coordinates.
    ///
    /// Panics on an empty coordinate list; use [`StateKey::try_new`] for
    /// untrusted input.
    pub fn new(coords: impl IntoIterator<Item = i64>) -> Self {
        Self::try_new(coords).expect("state keys need at least one coordinate")
    }

    pub fn try_new(coords: impl IntoIterator<Item = i64>) -> Option<Self> {
        let coords: SmallVec<[i64; 4]> = coords.into_iter().collect();
        (!coords.is_empty()).then_some(Self(coords))
    }

    /// One-dimensional key.
    pub fn scalar(x: i64) -> Self {
        Self(smallvec::smallvec![x])
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// First coordinate; the whole state for one-dimensional chains.
    pub fn first(&self) -> i64 {
        self.0[0]
    }

    /// Key shifted by `delta` in coordinate `axis`.
    pub fn shifted(&self, axis: usize, delta: i64) -> Self {
        let mut out = self.clone();
        out.0[axis] += delta;
        out
    }

    pub fn l1_norm(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }
}

impl From<i64> for StateKey {
    fn from(x: i64) -> Self {
        Self::scalar(x)
    }
}

impl fmt::Debug for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for StateKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.0.as_slice().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StateKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Scalar(i64),
            Tuple(Vec<i64>),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Scalar(x) => Ok(Self::scalar(x)),
            Repr::Tuple(v) => Self::try_new(v)
                .ok_or_else(|| serde::de::Error::custom("state tuple must be nonempty")),
        }
    }
}

/// Bijection between discovered keys and dense indices `0..len`.
#[derive(Clone, Debug, Default)]
pub struct StateIndexer {
    keys: Vec<StateKey>,
    index: HashMap<StateKey, usize>,
}

impl StateIndexer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the index of `key`, assigning the next free one if unseen.
    pub fn index_or_insert(&mut self, key: &StateKey) -> usize {
        if let Some(&i) = self.index.get(key) {
            return i;
        }
        let i = self.keys.len();
        self.keys.push(key.clone());
        self.index.insert(key.clone(), i);
        i
    }

    pub fn get(&self, key: &StateKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn key(&self, index: usize) -> &StateKey {
        &self.keys[index]
    }

    pub fn keys(&self) -> &[StateKey] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn contains(&self, key: &StateKey) -> bool {
        self.index.contains_key(key)
    }
}

impl FromIterator<StateKey> for StateIndexer {
    fn from_iter<I: IntoIterator<Item = StateKey>>(iter: I) -> Self {
        let mut out = Self::new();
        for k in iter {
            out.index_or_insert(&k);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lexicographic_order() {
        assert!(StateKey::new([0, 5]) < StateKey::new([1, 0]));
        assert!(StateKey::new([1, 0]) < StateKey::new([1, 1]));
        assert_eq!(StateKey::new([3]), StateKey::scalar(3));
    }

    #[test]
    fn display() {
        assert_eq!(StateKey::scalar(-2).to_string(), "-2");
        assert_eq!(StateKey::new([1, 2]).to_string(), "(1, 2)");
    }

    #[test]
    fn json_accepts_scalars_and_tuples() {
        let k: StateKey = serde_json::from_str("[1,2]").unwrap();
        assert_eq!(k, StateKey::new([1, 2]));
        let k: StateKey = serde_json::from_str("7").unwrap();
        assert_eq!(k, StateKey::scalar(7));
        assert!(serde_json::from_str::<StateKey>("[]").is_err());
    }

    #[test]
    fn indexer_is_stable() {
        let mut ix = StateIndexer::new();
        let a = ix.index_or_insert(&StateKey::scalar(10));
        let b = ix.index_or_insert(&StateKey::scalar(-1));
        assert_eq!((a, b), (0, 1));
        assert_eq!(ix.index_or_insert(&StateKey::scalar(10)), 0);
        assert_eq!(ix.len(), 2);
    }

    proptest! {
        #[test]
        fn indexer_round_trip(keys in proptest::collection::vec((-50i64..50, -50i64..50), 1..60)) {
            let keys: Vec<StateKey> = keys.into_iter().map(|(a, b)| StateKey::new([a, b])).collect();
            let ix: StateIndexer = keys.iter().cloned().collect();
            for k in &keys {
                let i = ix.get(k).unwrap();
                prop_assert_eq!(ix.key(i), k);
            }
        }
    }
}
