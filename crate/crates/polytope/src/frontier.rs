//! Two-dimensional fast paths.
//!
//! In the plane a canonical generator list, sorted by first coordinate, is a
//! concave staircase: x strictly increasing, y strictly decreasing. The
//! polytope is everything under the piecewise-linear frontier through it.

use num_traits::{One, Signed, Zero};

use crate::poly::{HalfSpace, Point};
use crate::rational::Rational;

fn cross(o: &Point, a: &Point, b: &Point) -> Rational {
    (&a[0] - &o[0]) * (&b[1] - &o[1]) - (&a[1] - &o[1]) * (&b[0] - &o[0])
}

/// Upper hull of a dominance-free point list sorted by x; drops points on or
/// below the chord of their neighbours.
pub(crate) fn upper_hull(points: Vec<Point>) -> Vec<Point> {
    let mut hull: Vec<Point> = Vec::with_capacity(points.len());
    for p in points {
        while hull.len() >= 2 && !cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p).is_negative() {
            hull.pop();
        }
        hull.push(p);
    }
    hull
}

pub(crate) fn constraints(gens: &[Point]) -> Vec<HalfSpace> {
    let first = &gens[0];
    let last = &gens[gens.len() - 1];
    let mut out = vec![
        HalfSpace { normal: vec![Rational::zero(), Rational::one()], offset: first[1].clone() },
        HalfSpace { normal: vec![Rational::one(), Rational::zero()], offset: last[0].clone() },
    ];
    for w in gens.windows(2) {
        let normal = vec![&w[0][1] - &w[1][1], &w[1][0] - &w[0][0]];
        let offset = &normal[0] * &w[0][0] + &normal[1] * &w[0][1];
        out.push(HalfSpace { normal, offset });
    }
    out
}

/// Height of the frontier above `x`, or `None` past the right end.
pub fn eval(gens: &[Point], x: &Rational) -> Option<Rational> {
    let last = gens.last()?;
    if *x > last[0] {
        return None;
    }
    if *x <= gens[0][0] {
        return Some(gens[0][1].clone());
    }
    let j = gens.partition_point(|g| g[0] <= *x);
    let (a, b) = (&gens[j - 1], &gens[j.min(gens.len() - 1)]);
    if a[0] == *x || j == gens.len() {
        return Some(a[1].clone());
    }
    let t = (x - &a[0]) / (&b[0] - &a[0]);
    Some(&a[1] + t * (&b[1] - &a[1]))
}

pub fn right_end(gens: &[Point]) -> &Rational {
    &gens[gens.len() - 1][0]
}

/// Breakpoints in `[0, limit]` where the two frontiers may change order:
/// both generator abscissae plus every strict crossing in between.
pub(crate) fn merged_breakpoints(a: &[Point], b: &[Point], limit: &Rational) -> Vec<Rational> {
    let mut xs: Vec<Rational> = a
        .iter()
        .chain(b)
        .map(|g| g[0].clone())
        .filter(|x| x <= limit)
        .chain([Rational::zero(), limit.clone()])
        .collect();
    xs.sort();
    xs.dedup();
    let mut crossings = Vec::new();
    for w in xs.windows(2) {
        let (Some(a0), Some(b0), Some(a1), Some(b1)) = (eval(a, &w[0]), eval(b, &w[0]), eval(a, &w[1]), eval(b, &w[1]))
        else {
            continue;
        };
        let d0 = a0 - b0;
        let d1 = a1 - b1;
        if (d0.is_positive() && d1.is_negative()) || (d0.is_negative() && d1.is_positive()) {
            let t = &d0 / (&d0 - &d1);
            crossings.push(&w[0] + t * (&w[1] - &w[0]));
        }
    }
    xs.extend(crossings);
    xs.sort();
    xs.dedup();
    xs
}

/// Vertices of the intersection of two planar polytopes: the pointwise minimum
/// of two concave frontiers bends only at their breakpoints and crossings.
pub(crate) fn intersect_points(a: &[Point], b: &[Point]) -> Vec<Point> {
    let limit = std::cmp::min(right_end(a), right_end(b)).clone();
    merged_breakpoints(a, b, &limit)
        .into_iter()
        .map(|x| {
            let y = std::cmp::min(eval(a, &x).unwrap(), eval(b, &x).unwrap());
            vec![x, y]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn evaluates_staircase() {
        let g = vec![vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1), rat(0, 1)]];
        assert_eq!(eval(&g, &rat(1, 4)), Some(rat(3, 4)));
        assert_eq!(eval(&g, &rat(1, 1)), Some(rat(0, 1)));
        let flat = vec![vec![rat(1, 2), rat(1, 2)]];
        assert_eq!(eval(&flat, &rat(1, 4)), Some(rat(1, 2)));
        assert_eq!(eval(&flat, &rat(3, 4)), None);
    }

    #[test]
    fn hull_drops_collinear_points() {
        let pts = vec![vec![rat(0, 1), rat(1, 1)], vec![rat(1, 2), rat(1, 2)], vec![rat(1, 1), rat(0, 1)]];
        assert_eq!(upper_hull(pts).len(), 2);
    }
}
