//! Double-description vertex enumeration for `{x ∈ [0,1]^n : a_j·x ≤ b_j}`.
//!
//! Starts from the unit cube and inserts one half-space at a time. New
//! vertices appear on edges between kept and cut vertices; adjacency is the
//! combinatorial test (shared tight constraints of rank n−1, not contained in
//! any third vertex's tight set).

use num_traits::{One, Signed, Zero};

use crate::linalg;
use crate::poly::{HalfSpace, Point};
use crate::rational::Rational;

struct Vertex {
    x: Point,
    /// Sorted indices of tight constraints.
    tight: Vec<usize>,
}

fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j, mut out) = (0, 0, Vec::new());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn is_superset(sup: &[usize], sub: &[usize]) -> bool {
    intersect_sorted(sup, sub).len() == sub.len()
}

/// Vertices of the box cut by `cons` (which must keep the origin feasible).
pub(crate) fn vertices(dim: usize, cons: &[HalfSpace]) -> Vec<Point> {
    // Constraint rows: 0..n are -x_i ≤ 0, n..2n are x_i ≤ 1, then `cons`.
    let mut normals: Vec<Vec<Rational>> = Vec::with_capacity(2 * dim + cons.len());
    for i in 0..dim {
        normals.push((0..dim).map(|j| if i == j { -Rational::one() } else { Rational::zero() }).collect());
    }
    for i in 0..dim {
        normals.push((0..dim).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect());
    }
    let mut verts: Vec<Vertex> = (0..1usize << dim)
        .map(|mask| {
            let x: Point =
                (0..dim).map(|i| if mask & (1 << i) != 0 { Rational::one() } else { Rational::zero() }).collect();
            let tight = (0..dim).map(|i| if mask & (1 << i) != 0 { dim + i } else { i }).collect::<Vec<_>>();
            let mut tight = tight;
            tight.sort();
            Vertex { x, tight }
        })
        .collect();

    for h in cons {
        let idx = normals.len();
        normals.push(h.normal.clone());
        let slack: Vec<Rational> = verts.iter().map(|v| h.slack(&v.x)).collect();
        if slack.iter().all(|s| !s.is_negative()) {
            for (v, s) in verts.iter_mut().zip(&slack) {
                if s.is_zero() {
                    v.tight.push(idx);
                }
            }
            continue;
        }
        let mut fresh = Vec::new();
        for (iu, u) in verts.iter().enumerate() {
            if !slack[iu].is_positive() {
                continue;
            }
            for (iw, w) in verts.iter().enumerate() {
                if !slack[iw].is_negative() {
                    continue;
                }
                let common = intersect_sorted(&u.tight, &w.tight);
                if common.len() + 1 < dim {
                    continue;
                }
                let others_contain =
                    verts.iter().enumerate().any(|(k, v)| k != iu && k != iw && is_superset(&v.tight, &common));
                if others_contain {
                    continue;
                }
                let rows: Vec<Vec<Rational>> = common.iter().map(|&c| normals[c].clone()).collect();
                if linalg::rank(&rows) + 1 != dim {
                    continue;
                }
                let t = &slack[iu] / (&slack[iu] - &slack[iw]);
                let x: Point = u.x.iter().zip(&w.x).map(|(a, b)| a + &t * (b - a)).collect();
                let mut tight = common;
                tight.push(idx);
                fresh.push(Vertex { x, tight });
            }
        }
        let mut next: Vec<Vertex> = Vec::with_capacity(verts.len() + fresh.len());
        for (v, s) in verts.into_iter().zip(slack) {
            if s.is_negative() {
                continue;
            }
            let mut v = v;
            if s.is_zero() {
                v.tight.push(idx);
            }
            next.push(v);
        }
        next.extend(fresh);
        verts = next;
    }
    verts.into_iter().map(|v| v.x).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn cuts_cube_by_simplex_facet() {
        let h = HalfSpace { normal: vec![int(1), int(1), int(1)], offset: int(1) };
        let mut v = vertices(3, &[h]);
        v.sort();
        assert_eq!(v.len(), 4);
        assert!(v.contains(&vec![int(1), int(0), int(0)]));
        assert!(v.contains(&vec![int(0), int(0), int(0)]));
    }

    #[test]
    fn square_cut_by_two_lines() {
        let a = HalfSpace { normal: vec![int(1), int(1)], offset: int(1) };
        let b = HalfSpace { normal: vec![int(0), int(1)], offset: rat(1, 2) };
        let mut v = vertices(2, &[a, b]);
        v.sort();
        assert!(v.contains(&vec![rat(1, 2), rat(1, 2)]));
        assert!(v.contains(&vec![int(1), int(0)]));
        assert!(v.contains(&vec![int(0), rat(1, 2)]));
    }
}
