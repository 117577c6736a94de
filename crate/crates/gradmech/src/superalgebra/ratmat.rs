//! Dense rational matrices: elimination, rank, inverse.

use num_traits::{One, Zero};

use super::Rational;

pub type RatMat = Vec<Vec<Rational>>;

pub fn zeros(n: usize, m: usize) -> RatMat {
    vec![vec![Rational::zero(); m]; n]
}

pub fn identity(n: usize) -> RatMat {
    let mut a = zeros(n, n);
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = Rational::one();
    }
    a
}

pub fn mul(a: &RatMat, b: &RatMat) -> RatMat {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    let mut c = zeros(n, m);
    for i in 0..n {
        for l in 0..k {
            if a[i][l].is_zero() {
                continue;
            }
            for j in 0..m {
                if !b[l][j].is_zero() {
                    c[i][j] += &a[i][l] * &b[l][j];
                }
            }
        }
    }
    c
}

/// Row echelon reduction; returns pivot columns (first nonzero, lowest index first).
pub fn rref(a: &mut RatMat) -> Vec<usize> {
    let n = a.len();
    let m = if n == 0 { 0 } else { a[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m {
        if r == n {
            break;
        }
        let Some(p) = (r..n).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..n {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                let (top, rest) = if i < r {
                    let (x, y) = a.split_at_mut(r);
                    (&y[0], &mut x[i])
                } else {
                    let (x, y) = a.split_at_mut(i);
                    (&x[r], &mut y[0])
                };
                for (t, s) in rest.iter_mut().zip(top.iter()) {
                    if !s.is_zero() {
                        *t -= &f * s;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(a: &RatMat) -> usize {
    let mut b = a.clone();
    rref(&mut b).len()
}

pub fn inverse(a: &RatMat) -> Option<RatMat> {
    let n = a.len();
    if a.iter().any(|r| r.len() != n) {
        return None;
    }
    if n == 0 {
        return Some(Vec::new());
    }
    let mut aug: RatMat = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    let piv = rref(&mut aug);
    if piv.len() < n || piv[n - 1] >= n {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Greedy choice of rows (in the given preference order) that are linearly independent.
pub fn independent_rows(a: &RatMat, order: &[usize]) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut basis: RatMat = Vec::new();
    for &i in order {
        let mut trial = basis.clone();
        trial.push(a[i].clone());
        if rank(&trial) > basis.len() {
            basis.push(a[i].clone());
            chosen.push(i);
        }
    }
    chosen
}
