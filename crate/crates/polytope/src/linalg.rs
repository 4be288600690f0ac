//! Small exact Gaussian-elimination helpers.

use num_traits::Zero;

use crate::rational::Rational;

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(m: &mut [Vec<Rational>]) -> Vec<usize> {
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let pv = m[r][c].clone();
        for v in m[r].iter_mut() {
            *v /= &pv;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (v, pr) in row.iter_mut().zip(&pivot_row) {
                    *v -= &f * pr;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(rows: &[Vec<Rational>]) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m).len()
}

/// Basis of `{x : M x = 0}`.
pub fn nullspace(rows: &[Vec<Rational>], cols: usize) -> Vec<Vec<Rational>> {
    let mut m = rows.to_vec();
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); cols];
            v[f] = Rational::from_integer(1.into());
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][f].clone();
            }
            v
        })
        .collect()
}

/// Unique solution of the square system `A x = b`, if `A` is nonsingular.
pub fn solve(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut m);
    if pivots.len() != n || pivots.iter().enumerate().any(|(i, &p)| i != p) {
        return None;
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn nullspace_of_line_through_two_points() {
        // a·(1,0) = b, a·(0,1) = b  →  (a1, a2, b) ∝ (1, 1, 1)
        let rows = vec![vec![int(1), int(0), int(-1)], vec![int(0), int(1), int(-1)]];
        let ns = nullspace(&rows, 3);
        assert_eq!(ns, vec![vec![int(1), int(1), int(1)]]);
    }

    #[test]
    fn solves_square_system() {
        let a = vec![vec![int(2), int(1)], vec![int(1), int(3)]];
        let x = solve(&a, &[int(3), int(4)]).unwrap();
        assert_eq!(x, vec![int(1), int(1)]);
        assert!(solve(&[vec![int(1), int(1)], vec![int(2), int(2)]], &[int(1), int(2)]).is_none());
        assert_eq!(rank(&[vec![rat(1, 2), int(1)], vec![int(1), int(2)]]), 1);
    }
}
