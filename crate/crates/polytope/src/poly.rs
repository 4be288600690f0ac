//! The downward-closed polytope type and its combination operators.
//!
//! A polytope is stored by its irredundant Pareto generators `G`, sorted
//! lexicographically; the point set is `dwc(conv G) ∩ [0,1]^n`. The half-space
//! description is derived on demand and cached.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, OnceLock};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rational::{bit_size, dot, format_rational, in_unit_interval, Rational};
use crate::{dd, frontier, linalg, lp, PolytopeError};

pub type Point = Vec<Rational>;

/// `normal · x ≤ offset` with a nonnegative, nonzero normal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HalfSpace {
    pub normal: Vec<Rational>,
    pub offset: Rational,
}

impl HalfSpace {
    pub fn slack(&self, x: &[Rational]) -> Rational {
        &self.offset - dot(&self.normal, x)
    }
}

struct Inner {
    dim: usize,
    gens: Vec<Point>,
    constraints: OnceLock<Vec<HalfSpace>>,
}

/// A nonempty downward-closed convex polytope in `[0,1]^n`.
#[derive(Clone)]
pub struct DwcPolytope {
    inner: Arc<Inner>,
}

impl PartialEq for DwcPolytope {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim && self.inner.gens == other.inner.gens)
    }
}

impl Eq for DwcPolytope {}

impl Hash for DwcPolytope {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.inner.dim.hash(state);
        self.inner.gens.hash(state);
    }
}

/// Orders by generator count, then lexicographically by generator list.
impl Ord for DwcPolytope {
    fn cmp(&self, other: &Self) -> Ordering {
        self.inner
            .dim
            .cmp(&other.inner.dim)
            .then(self.inner.gens.len().cmp(&other.inner.gens.len()))
            .then_with(|| self.inner.gens.cmp(&other.inner.gens))
    }
}

impl PartialOrd for DwcPolytope {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for DwcPolytope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dwc{{")?;
        for (i, g) in self.inner.gens.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            let coords: Vec<String> = g.iter().map(|q| q.to_string()).collect();
            write!(f, "({})", coords.join(","))?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for DwcPolytope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<(), PolytopeError> {
    if expected == found {
        Ok(())
    } else {
        Err(PolytopeError::DimensionMismatch { expected, found })
    }
}

/// `a ≤ b` componentwise.
fn leq(a: &[Rational], b: &[Rational]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

impl DwcPolytope {
    fn from_canonical(dim: usize, gens: Vec<Point>) -> Self {
        debug_assert!(!gens.is_empty());
        DwcPolytope { inner: Arc::new(Inner { dim, gens, constraints: OnceLock::new() }) }
    }

    /// Canonicalises arbitrary points without range checks (internal use).
    pub(crate) fn from_points_unchecked(dim: usize, points: Vec<Point>) -> Self {
        Self::from_canonical(dim, canonical_generators(dim, points))
    }

    /// `dwc(conv(points))` in canonical form.
    pub fn from_points<I>(points: I) -> Result<Self, PolytopeError>
    where
        I: IntoIterator<Item = Point>,
    {
        let points: Vec<Point> = points.into_iter().collect();
        let dim = points.first().ok_or(PolytopeError::Empty)?.len();
        if dim == 0 {
            return Err(PolytopeError::DimensionMismatch { expected: 1, found: 0 });
        }
        for p in &points {
            check_dim(dim, p.len())?;
            if let Some(q) = p.iter().find(|q| !in_unit_interval(q)) {
                return Err(PolytopeError::OutOfRange(format_rational(q)));
            }
        }
        Ok(Self::from_points_unchecked(dim, points))
    }

    pub fn point(p: Point) -> Result<Self, PolytopeError> {
        Self::from_points([p])
    }

    pub fn origin(dim: usize) -> Self {
        Self::from_canonical(dim, vec![vec![Rational::zero(); dim]])
    }

    pub fn full_box(dim: usize) -> Self {
        Self::from_canonical(dim, vec![vec![Rational::one(); dim]])
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn generators(&self) -> &[Point] {
        &self.inner.gens
    }

    /// Total bit size of all generator coordinates.
    pub fn bit_size(&self) -> u64 {
        self.inner.gens.iter().flatten().map(bit_size).sum()
    }

    /// Half-space description (nonnegative normals), derived lazily.
    pub fn constraints(&self) -> &[HalfSpace] {
        self.inner.constraints.get_or_init(|| derive_constraints(self.dim(), &self.inner.gens))
    }

    pub fn convex_union(&self, other: &Self) -> Result<Self, PolytopeError> {
        check_dim(self.dim(), other.dim())?;
        if self == other {
            return Ok(self.clone());
        }
        let pts = self.inner.gens.iter().chain(&other.inner.gens).cloned().collect();
        Ok(Self::from_points_unchecked(self.dim(), pts))
    }

    pub fn intersect(&self, other: &Self) -> Result<Self, PolytopeError> {
        check_dim(self.dim(), other.dim())?;
        if self == other || self.is_subset_unchecked(other) {
            return Ok(self.clone());
        }
        if other.is_subset_unchecked(self) {
            return Ok(other.clone());
        }
        let dim = self.dim();
        let pts = match dim {
            1 => vec![vec![std::cmp::min(&self.inner.gens[0][0], &other.inner.gens[0][0]).clone()]],
            2 => frontier::intersect_points(&self.inner.gens, &other.inner.gens),
            _ => {
                let cons: Vec<HalfSpace> = self.constraints().iter().chain(other.constraints()).cloned().collect();
                dd::vertices(dim, &cons)
            }
        };
        Ok(Self::from_points_unchecked(dim, pts))
    }

    /// Minkowski combination `Σ p_i · P_i` with positive weights summing to one.
    pub fn weighted_combination(terms: &[(Rational, &DwcPolytope)]) -> Result<Self, PolytopeError> {
        let (_, first) = terms.first().ok_or(PolytopeError::Empty)?;
        let dim = first.dim();
        let mut total = Rational::zero();
        for (w, p) in terms {
            check_dim(dim, p.dim())?;
            if !w.is_positive() {
                return Err(PolytopeError::BadWeights(format!("weight {} is not positive", format_rational(w))));
            }
            total += w;
        }
        if !total.is_one() {
            return Err(PolytopeError::BadWeights(format!("weights sum to {}", format_rational(&total))));
        }
        Ok(Self::weighted_sum_unchecked(dim, terms))
    }

    /// Minkowski sum of scaled polytopes; weights are not normalised.
    pub(crate) fn weighted_sum_unchecked(dim: usize, terms: &[(Rational, &DwcPolytope)]) -> Self {
        if let [(w, p)] = terms {
            if w.is_one() {
                return (*p).clone();
            }
        }
        let mut acc: Vec<Point> = vec![vec![Rational::zero(); dim]];
        for (w, p) in terms {
            let mut next = Vec::with_capacity(acc.len() * p.inner.gens.len());
            for a in &acc {
                for g in &p.inner.gens {
                    next.push(a.iter().zip(g).map(|(x, y)| x + w * y).collect());
                }
            }
            acc = canonical_generators(dim, next);
        }
        Self::from_canonical(dim, acc)
    }

    fn is_subset_unchecked(&self, other: &Self) -> bool {
        if self == other {
            return true;
        }
        let cons = other.constraints();
        self.inner.gens.iter().all(|g| cons.iter().all(|h| !h.slack(g).is_negative()))
    }

    /// Every point of `self` lies in `other`.
    pub fn is_subset(&self, other: &Self) -> Result<bool, PolytopeError> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.is_subset_unchecked(other))
    }

    /// Non-strict: `x ∈ self`. Strict: some `z ∈ self` has `z > x` in every coordinate.
    pub fn contains_point(&self, x: &[Rational], strict: bool) -> Result<bool, PolytopeError> {
        check_dim(self.dim(), x.len())?;
        if x.iter().any(|v| v.is_negative()) {
            return Err(PolytopeError::OutOfRange(format!("{x:?}")));
        }
        let cons = self.constraints();
        Ok(if strict {
            cons.iter().all(|h| h.slack(x).is_positive())
        } else {
            cons.iter().all(|h| !h.slack(x).is_negative())
        })
    }

    /// Membership decided by a feasibility LP over the generators instead of
    /// the cached constraints; used to cross-check the constraint derivation.
    pub fn contains_point_lp(&self, x: &[Rational]) -> bool {
        dominated_by_hull(&self.inner.gens, x)
    }

    /// Maximum of `w · z` over the polytope.
    pub fn support(&self, w: &[Rational]) -> Rational {
        self.inner.gens.iter().map(|g| dot(w, g)).max().unwrap_or_else(Rational::zero)
    }
}

/// `∃ λ ≥ 0, Σλ = 1 : Σ λ_j h_j ≥ x`.
pub(crate) fn dominated_by_hull(hull: &[Point], x: &[Rational]) -> bool {
    if hull.is_empty() {
        return false;
    }
    if hull.iter().any(|h| leq(x, h)) {
        return true;
    }
    let n = x.len();
    let m = hull.len();
    // Columns: λ_1..λ_m, then surplus s_1..s_n.
    let mut a = Vec::with_capacity(n + 1);
    for i in 0..n {
        let mut row: Vec<Rational> = hull.iter().map(|h| h[i].clone()).collect();
        row.extend((0..n).map(|j| if i == j { -Rational::one() } else { Rational::zero() }));
        a.push(row);
    }
    let mut sum_row = vec![Rational::one(); m];
    sum_row.extend(std::iter::repeat_with(Rational::zero).take(n));
    a.push(sum_row);
    let mut b: Vec<Rational> = x.to_vec();
    b.push(Rational::one());
    lp::feasible_point(&a, &b).is_some()
}

/// Irredundant generators of `dwc(conv(points))`, sorted lexicographically.
pub(crate) fn canonical_generators(dim: usize, mut points: Vec<Point>) -> Vec<Point> {
    points.sort();
    points.dedup();
    // Drop componentwise-dominated points. Sorting descending lets each point
    // be compared only with already-kept ones.
    points.reverse();
    let mut kept: Vec<Point> = Vec::with_capacity(points.len());
    for p in points {
        if !kept.iter().any(|k| leq(&p, k)) {
            kept.push(p);
        }
    }
    kept.reverse();
    let mut gens = match dim {
        1 => kept,
        2 => frontier::upper_hull(kept),
        _ => {
            let mut i = 0;
            while i < kept.len() && kept.len() > 1 {
                let g = kept.remove(i);
                if dominated_by_hull(&kept, &g) {
                    continue;
                }
                kept.insert(i, g);
                i += 1;
            }
            kept
        }
    };
    gens.sort();
    gens
}

/// Half-space description of `dwc(conv(gens))` relative to the unit box.
fn derive_constraints(dim: usize, gens: &[Point]) -> Vec<HalfSpace> {
    match dim {
        1 => vec![HalfSpace { normal: vec![Rational::one()], offset: gens[0][0].clone() }],
        2 => frontier::constraints(gens),
        _ => facet_constraints(dim, gens),
    }
}

/// Facets of `conv(gens) − ℝ₊ⁿ`: every facet normal `a ≥ 0` vanishes on a set
/// `D` of coordinates and is spanned, in the remaining coordinates, by
/// `n − |D|` generators.
fn facet_constraints(dim: usize, gens: &[Point]) -> Vec<HalfSpace> {
    let mut out: Vec<HalfSpace> = Vec::new();
    for mask in 1u32..(1 << dim) {
        let free: Vec<usize> = (0..dim).filter(|i| mask & (1 << i) != 0).collect();
        let d = free.len();
        if gens.len() < d {
            continue;
        }
        for combo in combinations(gens.len(), d) {
            let rows: Vec<Vec<Rational>> = combo
                .iter()
                .map(|&k| {
                    let mut r: Vec<Rational> = free.iter().map(|&i| gens[k][i].clone()).collect();
                    r.push(-Rational::one());
                    r
                })
                .collect();
            let ns = linalg::nullspace(&rows, d + 1);
            if ns.len() != 1 {
                continue;
            }
            let mut v = ns.into_iter().next().unwrap();
            let a = &v[..d];
            let sign = if a.iter().all(|x| !x.is_negative()) && a.iter().any(|x| x.is_positive()) {
                Rational::one()
            } else if a.iter().all(|x| !x.is_positive()) && a.iter().any(|x| x.is_negative()) {
                -Rational::one()
            } else {
                continue;
            };
            let lead = v.iter().find(|x| !x.is_zero()).cloned().unwrap() * &sign;
            for x in v.iter_mut() {
                *x = &*x * &sign / &lead;
            }
            let mut normal = vec![Rational::zero(); dim];
            for (j, &i) in free.iter().enumerate() {
                normal[i] = v[j].clone();
            }
            let h = HalfSpace { normal, offset: v[d].clone() };
            if gens.iter().all(|g| !h.slack(g).is_negative()) && !out.contains(&h) {
                out.push(h);
            }
        }
    }
    out
}

pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Serialisation: a list of generators, each a list of "num/den" strings.
// ---------------------------------------------------------------------------

impl Serialize for DwcPolytope {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let text: Vec<Vec<String>> = self.inner.gens.iter().map(|g| g.iter().map(format_rational).collect()).collect();
        text.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DwcPolytope {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let text = Vec::<Vec<String>>::deserialize(d)?;
        let pts = text
            .iter()
            .map(|g| g.iter().map(|t| crate::rational::parse_rational(t)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        DwcPolytope::from_points(pts).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn p(coords: &[(i64, i64)]) -> Point {
        coords.iter().map(|&(n, d)| rat(n, d)).collect()
    }

    fn poly(points: &[&[(i64, i64)]]) -> DwcPolytope {
        DwcPolytope::from_points(points.iter().map(|c| p(c))).unwrap()
    }

    fn triangle() -> DwcPolytope {
        poly(&[&[(0, 1), (1, 1)], &[(1, 1), (0, 1)]])
    }

    #[test]
    fn from_points_examples() {
        assert_eq!(poly(&[&[(0, 1), (0, 1)]]).generators(), &[p(&[(0, 1), (0, 1)])]);
        let t = poly(&[&[(0, 1), (1, 1)], &[(1, 1), (0, 1)], &[(1, 2), (1, 2)]]);
        assert_eq!(t, triangle());
        let two = poly(&[&[(1, 1), (0, 1)], &[(1, 2), (1, 2)]]);
        assert_eq!(two.generators().len(), 2);
    }

    #[test]
    fn from_points_rejects_bad_input() {
        assert!(matches!(DwcPolytope::from_points(Vec::<Point>::new()), Err(PolytopeError::Empty)));
        assert!(matches!(
            DwcPolytope::from_points(vec![vec![int(0)], vec![int(0), int(0)]]),
            Err(PolytopeError::DimensionMismatch { .. })
        ));
        assert!(matches!(DwcPolytope::from_points(vec![vec![int(2)]]), Err(PolytopeError::OutOfRange(_))));
    }

    #[test]
    fn convex_union_examples() {
        let h = poly(&[&[(1, 1), (0, 1)]]);
        let v = poly(&[&[(0, 1), (1, 1)]]);
        assert_eq!(h.convex_union(&v).unwrap(), triangle());
        assert_eq!(h.convex_union(&h).unwrap(), h);
        let a = poly(&[&[(1, 2), (1, 1)]]);
        let b = poly(&[&[(1, 1), (1, 2)]]);
        assert_eq!(a.convex_union(&b).unwrap(), poly(&[&[(1, 2), (1, 1)], &[(1, 1), (1, 2)]]));
    }

    #[test]
    fn intersect_examples() {
        let t = triangle();
        assert_eq!(DwcPolytope::full_box(2).intersect(&t).unwrap(), t);
        let r = poly(&[&[(1, 1), (1, 2)]]);
        assert_eq!(t.intersect(&r).unwrap(), poly(&[&[(1, 2), (1, 2)], &[(1, 1), (0, 1)]]));
        let left = poly(&[&[(0, 1), (1, 1)], &[(1, 2), (1, 2)]]);
        let right = poly(&[&[(1, 2), (1, 2)], &[(1, 1), (0, 1)]]);
        assert_eq!(left.intersect(&right).unwrap(), poly(&[&[(1, 2), (1, 2)]]));
    }

    #[test]
    fn weighted_combination_examples() {
        let half = rat(1, 2);
        let staircase = DwcPolytope::weighted_combination(&[
            (half.clone(), &DwcPolytope::full_box(2)),
            (half.clone(), &triangle()),
        ])
        .unwrap();
        assert_eq!(staircase, poly(&[&[(1, 2), (1, 1)], &[(1, 1), (1, 2)]]));
        let t = triangle();
        assert_eq!(DwcPolytope::weighted_combination(&[(int(1), &t)]).unwrap(), t);
        let corner = DwcPolytope::weighted_combination(&[
            (half.clone(), &DwcPolytope::origin(2)),
            (half.clone(), &DwcPolytope::full_box(2)),
        ])
        .unwrap();
        assert_eq!(corner, poly(&[&[(1, 2), (1, 2)]]));
        assert!(matches!(DwcPolytope::weighted_combination(&[(half, &t)]), Err(PolytopeError::BadWeights(_))));
    }

    #[test]
    fn subset_and_membership_examples() {
        let t = triangle();
        assert!(t.is_subset(&DwcPolytope::full_box(2)).unwrap());
        assert!(poly(&[&[(1, 2), (1, 2)]]).is_subset(&t).unwrap());
        assert!(!t.is_subset(&poly(&[&[(1, 1), (1, 2)]])).unwrap());
        assert!(t.contains_point(&p(&[(1, 2), (1, 2)]), false).unwrap());
        assert!(!t.contains_point(&p(&[(3, 5), (3, 5)]), false).unwrap());
        assert!(!t.contains_point(&p(&[(1, 2), (1, 2)]), true).unwrap());
        assert!(t.contains_point(&p(&[(1, 3), (1, 2)]), true).unwrap());
        assert!(t.contains_point(&[int(0), int(0)], false).unwrap());
    }

    #[test]
    fn strictness_respects_the_box() {
        // The box corner (1,1) is not strictly dominated by anything in the box.
        let b = DwcPolytope::full_box(2);
        assert!(!b.contains_point(&p(&[(1, 1), (0, 1)]), true).unwrap());
        assert!(b.contains_point(&p(&[(99, 100), (0, 1)]), true).unwrap());
        // A segment has empty interior: nothing is strictly dominated.
        let seg = poly(&[&[(1, 1), (0, 1)]]);
        assert!(!seg.contains_point(&p(&[(0, 1), (0, 1)]), true).unwrap());
    }

    #[test]
    fn three_dimensional_operations() {
        let e1 = poly(&[&[(1, 1), (0, 1), (0, 1)]]);
        let e2 = poly(&[&[(0, 1), (1, 1), (0, 1)]]);
        let e3 = poly(&[&[(0, 1), (0, 1), (1, 1)]]);
        let simplex = e1.convex_union(&e2).unwrap().convex_union(&e3).unwrap();
        assert_eq!(simplex.generators().len(), 3);
        let centre = p(&[(1, 3), (1, 3), (1, 3)]);
        assert!(simplex.contains_point(&centre, false).unwrap());
        assert!(!simplex.contains_point(&centre, true).unwrap());
        let redundant = DwcPolytope::from_points(vec![
            p(&[(1, 1), (0, 1), (0, 1)]),
            p(&[(0, 1), (1, 1), (0, 1)]),
            p(&[(0, 1), (0, 1), (1, 1)]),
            centre.clone(),
        ])
        .unwrap();
        assert_eq!(redundant, simplex);
        let cube_half = poly(&[&[(1, 2), (1, 2), (1, 2)]]);
        assert!(simplex.intersect(&cube_half).unwrap().contains_point(&centre, false).unwrap());
        let meet = simplex.intersect(&cube_half).unwrap();
        assert!(meet.is_subset(&simplex).unwrap() && meet.is_subset(&cube_half).unwrap());
        assert!(!meet.contains_point(&p(&[(1, 2), (1, 2), (1, 2)]), false).unwrap());
    }

    #[test]
    fn serialises_as_rational_strings() {
        let t = triangle();
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"[["0/1","1/1"],["1/1","0/1"]]"#);
        let back: DwcPolytope = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }
}
