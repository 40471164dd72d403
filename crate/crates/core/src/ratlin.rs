//! Dense linear algebra over ℚ for small exact steps (row reduction of
//! leading-coefficient matrices, constant inverses).

use num_traits::{One, Zero};

use crate::poly::Rational;

pub type QMat = Vec<Vec<Rational>>;

pub fn zeros(r: usize, c: usize) -> QMat {
    vec![vec![Rational::zero(); c]; r]
}

#[cfg(test)]
pub fn identity(n: usize) -> QMat {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Rational::one();
    }
    m
}

pub fn mul(a: &QMat, b: &QMat, inner: usize, cols: usize) -> QMat {
    let mut out = zeros(a.len(), cols);
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let mut acc = Rational::zero();
            for k in 0..inner {
                if !a[i][k].is_zero() && !b[k][j].is_zero() {
                    acc += &a[i][k] * &b[k][j];
                }
            }
            *cell = acc;
        }
    }
    out
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref(m: &mut QMat, cols: usize) -> Vec<usize> {
    let rows = m.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let t = &f * &m[r][j];
                    m[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Some nonzero α with αᵀ·m = 0, if the rows of `m` are dependent.
pub fn left_null_vector(m: &QMat, cols: usize) -> Option<Vec<Rational>> {
    let rows = m.len();
    // null vector of mᵀ
    let mut t: QMat = (0..cols).map(|j| (0..rows).map(|i| m[i][j].clone()).collect()).collect();
    let pivots = rref(&mut t, rows);
    let free = (0..rows).find(|c| !pivots.contains(c))?;
    let mut alpha = vec![Rational::zero(); rows];
    alpha[free] = Rational::one();
    for (r, &pc) in pivots.iter().enumerate() {
        alpha[pc] = -t[r][free].clone();
    }
    Some(alpha)
}

pub fn inverse(m: &QMat) -> Option<QMat> {
    let n = m.len();
    let mut aug: QMat = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    let pivots = rref(&mut aug, 2 * n);
    if pivots.len() < n || pivots[n - 1] >= n {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

#[cfg(test)]
pub fn rank(m: &QMat, cols: usize) -> usize {
    let mut t = m.clone();
    rref(&mut t, cols).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    #[test]
    fn inverse_and_null() {
        let m = vec![vec![rat(2), rat(1)], vec![rat(1), rat(1)]];
        let inv = inverse(&m).unwrap();
        assert_eq!(mul(&m, &inv, 2, 2), identity(2));
        let s = vec![vec![rat(1), rat(2)], vec![rat(2), rat(4)]];
        assert!(inverse(&s).is_none());
        let a = left_null_vector(&s, 2).unwrap();
        assert!((0..2).all(|j| (&a[0] * &s[0][j] + &a[1] * &s[1][j]).is_zero()));
        assert!(left_null_vector(&m, 2).is_none());
        assert_eq!(rank(&s, 2), 1);
    }
}
