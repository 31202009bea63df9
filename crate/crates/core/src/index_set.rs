//! Subsets of `{0, .., d-1}` as sorted index lists.
//!
//! Indices are zero-based throughout the library; the command-line layer
//! translates from the one-based convention used in model files.

use std::fmt;

/// A sorted set of distinct indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    /// Build from arbitrary indices; sorts and removes duplicates.
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self(indices)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn singleton(i: usize) -> Self {
        Self(vec![i])
    }

    /// The full index set `{0, .., d-1}`.
    pub fn full(d: usize) -> Self {
        Self((0..d).collect())
    }

    /// Decode a bitmask over `{0, .., d-1}`.
    pub fn from_bitmask(d: usize, mask: u32) -> Self {
        Self((0..d).filter(|i| mask >> i & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Position of `i` within the sorted set, if present.
    pub fn position(&self, i: usize) -> Option<usize> {
        self.0.binary_search(&i).ok()
    }

    pub fn first(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn is_within(&self, d: usize) -> bool {
        self.0.last().is_none_or(|&m| m < d)
    }

    pub fn is_disjoint(&self, other: &IndexSet) -> bool {
        self.iter().all(|i| !other.contains(i))
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut v = self.0.clone();
        v.extend(other.iter());
        IndexSet::new(v)
    }

    pub fn minus(&self, other: &IndexSet) -> IndexSet {
        Self(self.iter().filter(|&i| !other.contains(i)).collect())
    }

    /// Complement within `{0, .., d-1}`.
    pub fn complement(&self, d: usize) -> IndexSet {
        Self((0..d).filter(|&i| !self.contains(i)).collect())
    }

    pub fn with(&self, i: usize) -> IndexSet {
        let mut v = self.0.clone();
        v.push(i);
        IndexSet::new(v)
    }

    /// One-based copy for display and reports.
    pub fn one_based(&self) -> Vec<usize> {
        self.iter().map(|i| i + 1).collect()
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// All nonempty subsets of `{0, .., d-1}` in bitmask order.
pub fn nonempty_subsets(d: usize) -> impl Iterator<Item = IndexSet> {
    assert!(d <= 31, "subset enumeration limited to d <= 31");
    (1u32..1 << d).map(move |mask| IndexSet::from_bitmask(d, mask))
}

/// All ordered triples of pairwise disjoint nonempty subsets of `{0, .., d-1}`.
///
/// When `unordered_ab` is set, only triples with `min(A) < min(B)` are
/// produced, halving the sweep for symmetric gap functions.
pub fn disjoint_triples(d: usize, unordered_ab: bool) -> Vec<(IndexSet, IndexSet, IndexSet)> {
    assert!(d <= 12, "triple enumeration limited to d <= 12");
    let mut out = Vec::new();
    for a_mask in 1u32..1 << d {
        let rest = !a_mask & ((1 << d) - 1);
        let mut b_mask = rest;
        // iterate nonempty submasks of rest
        while b_mask > 0 {
            let remaining = rest & !b_mask;
            let mut c_mask = remaining;
            while c_mask > 0 {
                let a = IndexSet::from_bitmask(d, a_mask);
                let b = IndexSet::from_bitmask(d, b_mask);
                if !unordered_ab || a.first() < b.first() {
                    out.push((a, b, IndexSet::from_bitmask(d, c_mask)));
                }
                c_mask = (c_mask - 1) & remaining;
            }
            b_mask = (b_mask - 1) & rest;
        }
    }
    out
}
