//! Finite sets of polytopes and the ⊆-minimal filter.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::poly::DwcPolytope;
use crate::PolytopeError;

/// A deduplicated set of polytopes of one dimension, ordered by
/// (generator count, generator list).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<DwcPolytope>", into = "Vec<DwcPolytope>")]
pub struct PolytopeSet {
    dim: usize,
    members: BTreeSet<DwcPolytope>,
}

impl TryFrom<Vec<DwcPolytope>> for PolytopeSet {
    type Error = PolytopeError;
    fn try_from(v: Vec<DwcPolytope>) -> Result<Self, Self::Error> {
        let dim = v.first().ok_or(PolytopeError::Empty)?.dim();
        let mut s = PolytopeSet::empty(dim);
        for p in v {
            s.insert(p)?;
        }
        Ok(s)
    }
}

impl From<PolytopeSet> for Vec<DwcPolytope> {
    fn from(s: PolytopeSet) -> Self {
        s.members.into_iter().collect()
    }
}

impl PolytopeSet {
    pub fn empty(dim: usize) -> Self {
        PolytopeSet { dim, members: BTreeSet::new() }
    }

    pub fn singleton(p: DwcPolytope) -> Self {
        PolytopeSet { dim: p.dim(), members: BTreeSet::from([p]) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &DwcPolytope> {
        self.members.iter()
    }

    pub fn contains(&self, p: &DwcPolytope) -> bool {
        self.members.contains(p)
    }

    /// Returns whether the polytope was new.
    pub fn insert(&mut self, p: DwcPolytope) -> Result<bool, PolytopeError> {
        if p.dim() != self.dim {
            return Err(PolytopeError::DimensionMismatch { expected: self.dim, found: p.dim() });
        }
        Ok(self.members.insert(p))
    }

    pub fn extend(&mut self, other: &PolytopeSet) -> Result<(), PolytopeError> {
        for p in other.iter() {
            self.insert(p.clone())?;
        }
        Ok(())
    }

    pub fn is_subset_of(&self, other: &PolytopeSet) -> bool {
        self.members.is_subset(&other.members)
    }

    /// Pointwise intersection of all members (`None` for the empty set).
    pub fn intersection(&self) -> Option<DwcPolytope> {
        let mut it = self.members.iter();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, p| acc.intersect(p).expect("members share a dimension")))
    }

    /// Keeps exactly the ⊆-minimal members.
    // The lazily computed constraint cache is not part of the ordering.
    #[allow(clippy::mutable_key_type)]
    pub fn min_filter(&self) -> PolytopeSet {
        let v: Vec<&DwcPolytope> = self.members.iter().collect();
        let members = v
            .iter()
            .enumerate()
            .filter(|(i, p)| {
                !v.iter().enumerate().any(|(j, q)| j != *i && q.is_subset(p).expect("members share a dimension"))
            })
            .map(|(_, p)| (*p).clone())
            .collect();
        PolytopeSet { dim: self.dim, members }
    }

    /// Total generator count over all members.
    pub fn generator_count(&self) -> usize {
        self.members.iter().map(|p| p.generators().len()).sum()
    }
}
