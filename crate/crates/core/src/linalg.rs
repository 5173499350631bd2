//! Exact Gaussian elimination over the coefficient field.

use num_traits::{One, Zero};

use crate::coeffring::GaussianRational;

pub type Matrix = Vec<Vec<GaussianRational>>;

/// Reduced row echelon form in place; returns the pivot columns.
fn rref(m: &mut Matrix, cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].inv().expect("nonzero pivot");
        for v in m[row].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                let pivot_row = m[row].clone();
                for (v, pv) in m[r].iter_mut().zip(&pivot_row) {
                    *v = &*v - &(&factor * pv);
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    pivots
}

/// Solves `a x = b`, setting free variables to zero. `None` if inconsistent.
pub fn solve(a: &Matrix, b: &[GaussianRational], unknowns: usize) -> Option<Vec<GaussianRational>> {
    let mut aug: Matrix = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug, unknowns);
    for row in aug.iter().skip(pivots.len()) {
        if !row[unknowns].is_zero() {
            return None;
        }
    }
    let mut x = vec![GaussianRational::zero(); unknowns];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug[r][unknowns].clone();
    }
    Some(x)
}

/// Inverse of a square matrix, `None` if singular.
pub fn invert(m: &Matrix) -> Option<Matrix> {
    let n = m.len();
    let mut aug: Matrix = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| {
                if i == j {
                    GaussianRational::one()
                } else {
                    GaussianRational::zero()
                }
            }));
            r
        })
        .collect();
    let pivots = rref(&mut aug, n);
    if pivots.len() < n {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: i64) -> GaussianRational {
        GaussianRational::from_int(n)
    }

    #[test]
    fn solves_and_inverts() {
        let a = vec![vec![g(1), g(1)], vec![g(1), g(-1)], vec![g(2), g(0)]];
        assert_eq!(solve(&a, &[g(3), g(1), g(4)], 2), Some(vec![g(2), g(1)]));
        assert_eq!(solve(&a, &[g(3), g(1), g(5)], 2), None);
        let free = vec![vec![g(1), g(1)]];
        assert_eq!(solve(&free, &[g(2)], 2), Some(vec![g(2), g(0)]));
        let m = vec![vec![g(0), g(1)], vec![g(-1), g(0)]];
        assert_eq!(invert(&m), Some(vec![vec![g(0), g(-1)], vec![g(1), g(0)]]));
        assert_eq!(invert(&vec![vec![g(1), g(2)], vec![g(2), g(4)]]), None);
    }
}
