//! Finite unions of downward-closed polytopes.

use serde::{Deserialize, Serialize};

use crate::frontier::{eval, merged_breakpoints, right_end};
use crate::poly::{DwcPolytope, Point};
use crate::rational::Rational;
use crate::PolytopeError;

/// A (generally non-convex) union of polytopes, canonicalised so that no part
/// is contained in another and parts are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<DwcPolytope>", into = "Vec<DwcPolytope>")]
pub struct Region {
    dim: usize,
    parts: Vec<DwcPolytope>,
}

impl TryFrom<Vec<DwcPolytope>> for Region {
    type Error = PolytopeError;
    fn try_from(parts: Vec<DwcPolytope>) -> Result<Self, Self::Error> {
        Region::new(parts)
    }
}

impl From<Region> for Vec<DwcPolytope> {
    fn from(r: Region) -> Self {
        r.parts
    }
}

impl Region {
    pub fn new(parts: Vec<DwcPolytope>) -> Result<Self, PolytopeError> {
        let dim = parts.first().ok_or(PolytopeError::Empty)?.dim();
        if let Some(p) = parts.iter().find(|p| p.dim() != dim) {
            return Err(PolytopeError::DimensionMismatch { expected: dim, found: p.dim() });
        }
        let mut parts = parts;
        parts.sort();
        parts.dedup();
        let mut kept: Vec<DwcPolytope> = Vec::with_capacity(parts.len());
        for (i, p) in parts.iter().enumerate() {
            // Parts are distinct after dedup, so inclusion is strict.
            let dominated = parts.iter().enumerate().any(|(j, q)| j != i && p.is_subset(q).unwrap_or(false));
            if !dominated {
                kept.push(p.clone());
            }
        }
        Ok(Region { dim, parts: kept })
    }

    pub fn single(p: DwcPolytope) -> Self {
        Region { dim: p.dim(), parts: vec![p] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn parts(&self) -> &[DwcPolytope] {
        &self.parts
    }

    pub fn contains(&self, x: &[Rational]) -> Result<bool, PolytopeError> {
        for p in &self.parts {
            if p.contains_point(x, false)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn union(&self, other: &Region) -> Result<Region, PolytopeError> {
        Region::new(self.parts.iter().chain(&other.parts).cloned().collect())
    }

    /// Set inclusion; exact in the plane, part-wise (sufficient only) otherwise.
    pub fn is_subset(&self, other: &Region) -> Result<bool, PolytopeError> {
        if self.dim != other.dim {
            return Err(PolytopeError::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        for p in &self.parts {
            let covered = if self.dim == 2 {
                covered_by_union_2d(p, &other.parts)
            } else {
                other.parts.iter().any(|q| p.is_subset(q).unwrap_or(false))
            };
            if !covered {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn set_eq(&self, other: &Region) -> Result<bool, PolytopeError> {
        Ok(self.is_subset(other)? && other.is_subset(self)?)
    }

    /// In the plane, additionally drops parts covered by the union of the
    /// remaining ones (in canonical order), giving an irredundant cover.
    pub fn simplified(&self) -> Region {
        if self.dim != 2 {
            return self.clone();
        }
        let mut parts = self.parts.clone();
        let mut i = 0;
        while i < parts.len() && parts.len() > 1 {
            let others: Vec<DwcPolytope> =
                parts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p.clone()).collect();
            if covered_by_union_2d(&parts[i], &others) {
                parts.remove(i);
            } else {
                i += 1;
            }
        }
        Region { dim: 2, parts }
    }
}

/// `p ⊆ ⋃ others` for planar polytopes.
///
/// Between consecutive breakpoints (all generator abscissae, right ends and
/// pairwise frontier crossings) every frontier is linear and their order is
/// fixed, so comparing at the interval ends decides the whole interval.
pub fn covered_by_union_2d(p: &DwcPolytope, others: &[DwcPolytope]) -> bool {
    if others.is_empty() {
        return false;
    }
    let pg = p.generators();
    let limit = right_end(pg).clone();
    let mut xs: Vec<Rational> = vec![Rational::from_integer(0.into()), limit.clone()];
    let all: Vec<&[Point]> = std::iter::once(pg).chain(others.iter().map(|q| q.generators())).collect();
    for (i, a) in all.iter().enumerate() {
        for b in &all[i + 1..] {
            xs.extend(merged_breakpoints(a, b, &limit));
        }
        xs.extend(a.iter().map(|g| g[0].clone()).filter(|x| *x <= limit));
    }
    for q in others {
        let r = right_end(q.generators());
        if *r <= limit {
            xs.push(r.clone());
        }
    }
    xs.sort();
    xs.dedup();
    let best = |x: &Rational, active: &dyn Fn(&DwcPolytope) -> bool| {
        others.iter().filter(|q| active(q)).filter_map(|q| eval(q.generators(), x)).max()
    };
    if xs.len() == 1 {
        let x = &xs[0];
        let need = eval(pg, x).unwrap();
        return best(x, &|_| true).is_some_and(|m| m >= need);
    }
    for w in xs.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let spans = |q: &DwcPolytope| right_end(q.generators()) >= b;
        for x in [a, b] {
            let need = eval(pg, x).unwrap();
            match best(x, &spans) {
                Some(m) if m >= need => {}
                _ => return false,
            }
        }
    }
    true
}
