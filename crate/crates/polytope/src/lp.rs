//! Exact two-phase simplex over rationals with Bland's anti-cycling rule.
//!
//! Problems are in standard equality form `A x = b, x ≥ 0`. The sizes used by
//! the polytope engine are tiny (a handful of rows), so a dense tableau is the
//! simplest correct choice.

use num_traits::{Signed, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rational>, value: Rational },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// `rows[i]` holds the coefficients followed by the right-hand side.
    rows: Vec<Vec<Rational>>,
    /// Reduced costs followed by the negated objective value.
    cost: Vec<Rational>,
    basis: Vec<usize>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cost.len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= &f * pv;
            }
        }
        if !self.cost[c].is_zero() {
            let f = self.cost[c].clone();
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= &f * pv;
            }
        }
        self.basis[r] = c;
    }

    /// Minimises the cost row over columns `< allowed`; returns false if unbounded.
    fn minimise(&mut self, allowed: usize) -> bool {
        let rhs = self.width();
        loop {
            let entering = (0..allowed).find(|&j| self.cost[j].is_negative());
            let Some(c) = entering else { return true };
            let mut best: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[c].is_positive() {
                    continue;
                }
                let ratio = &row[rhs] / &row[c];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }

    fn solution(&self, n: usize) -> Vec<Rational> {
        let rhs = self.width();
        let mut x = vec![Rational::zero(); n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rows[i][rhs].clone();
            }
        }
        x
    }
}

/// Phase 1: returns a tableau whose basis is feasible and artificial-free,
/// or `None` when `A x = b, x ≥ 0` has no solution.
fn phase_one(a: &[Vec<Rational>], b: &[Rational], n: usize) -> Option<Tableau> {
    let m = a.len();
    let width = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, (ai, bi)) in a.iter().zip(b).enumerate() {
        assert_eq!(ai.len(), n, "ragged constraint matrix");
        let flip = bi.is_negative();
        let mut row: Vec<Rational> = ai.iter().map(|v| if flip { -v } else { v.clone() }).collect();
        row.extend((0..m).map(|j| if j == i { Rational::from_integer(1.into()) } else { Rational::zero() }));
        row.push(if flip { -bi } else { bi.clone() });
        rows.push(row);
    }
    let mut cost = vec![Rational::zero(); width + 1];
    for row in &rows {
        for j in 0..n {
            cost[j] -= &row[j];
        }
        cost[width] -= &row[width];
    }
    let mut t = Tableau { rows, cost, basis: (n..n + m).collect() };
    t.minimise(width);
    if !t.cost[width].is_zero() {
        return None;
    }
    // Drive zero-valued artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| !t.rows[i][j].is_zero()) {
                Some(j) => t.pivot(i, j),
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    Some(t)
}

/// Some `x ≥ 0` with `A x = b`, if one exists.
pub fn feasible_point(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.first().map_or(0, Vec::len);
    if a.is_empty() {
        return Some(Vec::new());
    }
    phase_one(a, b, n).map(|t| t.solution(n))
}

/// Maximises `c · x` subject to `A x = b, x ≥ 0`.
pub fn maximise(c: &[Rational], a: &[Vec<Rational>], b: &[Rational]) -> LpOutcome {
    let n = c.len();
    if a.is_empty() {
        return if c.iter().any(|v| v.is_positive()) {
            LpOutcome::Unbounded
        } else {
            LpOutcome::Optimal { x: vec![Rational::zero(); n], value: Rational::zero() }
        };
    }
    let Some(mut t) = phase_one(a, b, n) else { return LpOutcome::Infeasible };
    let width = t.width();
    // Phase 2 minimises -c; artificial columns are never re-entered.
    let mut cost = vec![Rational::zero(); width + 1];
    for j in 0..n {
        cost[j] = -&c[j];
    }
    for (i, &bj) in t.basis.iter().enumerate() {
        if bj < n && !c[bj].is_zero() {
            let f = c[bj].clone();
            for (v, rv) in cost.iter_mut().zip(&t.rows[i]) {
                *v += &f * rv;
            }
        }
    }
    t.cost = cost;
    if !t.minimise(n) {
        return LpOutcome::Unbounded;
    }
    let x = t.solution(n);
    let value = crate::rational::dot(c, &x);
    LpOutcome::Optimal { x, value }
}
