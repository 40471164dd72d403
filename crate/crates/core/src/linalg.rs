//! Dense floating-point helpers shared by the numerical modules.
//!
//! Everything here works on `nalgebra` dynamic matrices. The complex Schur
//! form comes from `nalgebra`; eigenvalue reordering, clustering and subspace
//! utilities are implemented locally.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

pub const C0: Complex64 = Complex64::new(0.0, 0.0);
pub const C1: Complex64 = Complex64::new(1.0, 0.0);
pub const JAY: Complex64 = Complex64::new(0.0, 1.0);

pub fn to_complex(a: &RMat) -> CMat {
    a.map(|x| Complex64::new(x, 0.0))
}

pub fn fmt_c(z: Complex64) -> String {
    if z.im >= 0.0 {
        format!("{:.6e}+{:.6e}j", z.re, z.im)
    } else {
        format!("{:.6e}-{:.6e}j", z.re, -z.im)
    }
}

/// Spectral norm (largest singular value); 0 for empty matrices.
pub fn norm2(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn norm2_real(a: &RMat) -> f64 {
    norm2(&to_complex(a))
}

/// Singular values in decreasing order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Number of singular values above `rel_tol` times the largest one.
pub fn numerical_rank(a: &CMat, rel_tol: f64) -> usize {
    let s = singular_values(a);
    match s.first() {
        None => 0,
        Some(&smax) if smax == 0.0 => 0,
        Some(&smax) => s.iter().filter(|&&v| v > rel_tol * smax).count(),
    }
}

/// SVD with singular values sorted decreasingly: `(U, s, V)` with `A = U diag(s) V^*`.
///
/// `V` is always the full `c × c` unitary factor and `s` has `c` entries
/// (zero-padded when `r < c`); `U` has `c` columns, of which the ones paired
/// with nonzero singular values are orthonormal.
pub fn full_svd(a: &CMat) -> (CMat, Vec<f64>, CMat) {
    let (r, c) = a.shape();
    let work = if r < c {
        let mut sq = CMat::zeros(c, c);
        sq.view_mut((0, 0), (r, c)).copy_from(a);
        sq
    } else {
        a.clone()
    };
    let svd = work.svd(true, true);
    let u = svd.u.expect("svd u");
    let v = svd.v_t.expect("svd v_t").adjoint();
    let mut idx: Vec<usize> = (0..c).collect();
    idx.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let s: Vec<f64> = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let us = CMat::from_fn(r, c, |i, j| u[(i, idx[j])]);
    let vs = CMat::from_fn(c, c, |i, j| v[(i, idx[j])]);
    (us, s, vs)
}

/// Orthonormal basis of the right null space, using `abs_tol` as the zero threshold.
pub fn null_space_abs(a: &CMat, abs_tol: f64) -> CMat {
    let (r, c) = a.shape();
    if c == 0 {
        return CMat::zeros(0, 0);
    }
    if r == 0 {
        return CMat::identity(c, c);
    }
    let (_, s, v) = full_svd(a);
    let rank = s.iter().take(c.min(r)).filter(|&&x| x > abs_tol).count();
    let cols: Vec<_> = (rank..c).map(|j| v.column(j).into_owned()).collect();
    if cols.is_empty() {
        CMat::zeros(c, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Orthonormal basis of the column space, using `abs_tol` as the zero threshold.
pub fn range_abs(a: &CMat, abs_tol: f64) -> CMat {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return CMat::zeros(r, 0);
    }
    let (u, s, _) = full_svd(a);
    let rank = s.iter().take(r.min(c)).filter(|&&x| x > abs_tol).count();
    let cols: Vec<_> = (0..rank).map(|j| u.column(j).into_owned()).collect();
    if cols.is_empty() {
        CMat::zeros(r, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Orthonormal basis for span(a), dropping directions below `rel_tol`.
pub fn orth(a: &CMat, rel_tol: f64) -> CMat {
    let smax = singular_values(a).first().copied().unwrap_or(0.0);
    range_abs(a, rel_tol * smax.max(f64::MIN_POSITIVE))
}

/// Orthonormal basis of span(a) ∩ span(b) for orthonormal inputs.
pub fn intersect_orthonormal(a: &CMat, b: &CMat, tol: f64) -> CMat {
    let n = a.nrows();
    if a.ncols() == 0 || b.ncols() == 0 {
        return CMat::zeros(n, 0);
    }
    // directions of span(a) whose principal angle with span(b) vanishes
    let g = a.adjoint() * b;
    let (u, s, _) = full_svd(&g);
    let cols: Vec<_> = (0..a.ncols().min(b.ncols()))
        .filter(|&j| s[j] > 1.0 - tol)
        .map(|j| a * u.column(j))
        .collect();
    if cols.is_empty() {
        CMat::zeros(n, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Sine of the largest principal angle between the column spans of `a` and `b`
/// (both full column rank, equal dimension).
pub fn max_principal_angle_sin(a: &CMat, b: &CMat) -> f64 {
    let qa = orth(a, 1e-12);
    let qb = orth(b, 1e-12);
    if qa.ncols() != qb.ncols() {
        return 1.0;
    }
    let proj = &qb - &qa * (qa.adjoint() * &qb);
    norm2(&proj)
}

/// Largest eigenvalue of a real symmetric matrix (symmetrized first).
pub fn max_sym_eig(a: &RMat) -> f64 {
    if a.is_empty() {
        return f64::NEG_INFINITY;
    }
    let s = (a + a.transpose()) * 0.5;
    SymmetricEigen::new(s).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn min_sym_eig(a: &RMat) -> f64 {
    if a.is_empty() {
        return f64::INFINITY;
    }
    -max_sym_eig(&(-a))
}

/// Eigenvalues of a Hermitian matrix, increasing.
pub fn herm_eigs(a: &CMat) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let h = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let mut v: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    v
}

/// Complex eigenvalues of a real square matrix.
pub fn eigenvalues_real(a: &RMat) -> Vec<Complex64> {
    if a.is_empty() {
        return Vec::new();
    }
    let (_, t) = schur(&a.map(|x| Complex64::new(x, 0.0)));
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

pub fn eigenvalues_complex(a: &CMat) -> Vec<Complex64> {
    if a.is_empty() {
        return Vec::new();
    }
    let (_, t) = schur(a);
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Diagonal similarity scaling (Parlett–Reinsch) to reduce eigenvalue
/// sensitivity. Overwrites `a` with `D⁻¹AD` and returns the diagonal of `D`,
/// whose entries are powers of two.
pub fn balance(a: &mut RMat) -> Vec<f64> {
    let n = a.nrows();
    let mut d = vec![1.0; n];
    let radix = 2.0f64;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            let mut rr = r;
            while cc < rr / radix {
                cc *= radix;
                rr /= radix;
                f *= radix;
            }
            while cc >= rr * radix {
                cc /= radix;
                rr *= radix;
                f /= radix;
            }
            if (cc + rr) < 0.95 * s {
                done = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
                d[i] *= f;
            }
        }
    }
    d
}

/// Roots of a polynomial given by ascending real coefficients, via the
/// eigenvalues of its balanced companion matrix followed by Newton polishing.
pub fn companion_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let mut c: Vec<f64> = coeffs.to_vec();
    while c.last() == Some(&0.0) {
        c.pop();
    }
    if c.len() <= 1 {
        return Vec::new();
    }
    let n = c.len() - 1;
    let lc = c[n];
    let monic: Vec<f64> = c.iter().map(|x| x / lc).collect();
    if n == 1 {
        return vec![Complex64::new(-monic[0], 0.0)];
    }
    let mut comp = RMat::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        comp[(i, n - 1)] = -monic[i];
    }
    balance(&mut comp);
    let mut roots = eigenvalues_real(&comp);
    for z in roots.iter_mut() {
        *z = newton_polish(&monic, *z);
    }
    roots
}

fn newton_polish(monic: &[f64], z0: Complex64) -> Complex64 {
    let mut z = z0;
    for _ in 0..3 {
        let mut p = C0;
        let mut dp = C0;
        for &a in monic.iter().rev() {
            dp = dp * z + p;
            p = p * z + a;
        }
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        let cand = z - step;
        if !cand.re.is_finite() || !cand.im.is_finite() {
            break;
        }
        // only accept steps that reduce the residual
        let mut pc = C0;
        for &a in monic.iter().rev() {
            pc = pc * cand + a;
        }
        if pc.norm() < p.norm() {
            z = cand;
        } else {
            break;
        }
    }
    z
}

/// Complex Schur form `A = Q T Q^*`, with the strictly lower part of `T` zeroed.
pub fn schur(a: &CMat) -> (CMat, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (CMat::zeros(0, 0), CMat::zeros(0, 0));
    }
    let (q, mut t) = schur_retrying(a);
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = C0;
        }
    }
    (q, t)
}

/// nalgebra's QR iteration can stall on highly structured inputs (companion
/// matrices with repeated roots, for instance). On a stall
/// retry on `W A W*` for a fixed Householder `W`, which has the same spectrum
/// but different iterates, and map the Schur vectors back.
fn schur_retrying(a: &CMat) -> (CMat, CMat) {
    let n = a.nrows();
    let max_iter = 200 * n.max(4);
    if let Some(s) = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, max_iter) {
        return s.unpack();
    }
    for attempt in 1..=8 {
        let v = CMat::from_fn(n, 1, |i, _| {
            let k = (i + 1) as f64 * attempt as f64;
            Complex64::new(k.sin() + 1.5, (0.7 * k).cos())
        });
        let w = CMat::identity(n, n) - &v * v.adjoint() * Complex64::new(2.0 / v.norm_squared(), 0.0);
        let b = &w * a * &w;
        if let Some(s) = nalgebra::linalg::Schur::try_new(b, f64::EPSILON, max_iter) {
            let (q, t) = s.unpack();
            return (&w * q, t);
        }
    }
    nalgebra::linalg::Schur::try_new(a.clone(), 1e-13, 50 * max_iter)
        .expect("Schur iteration failed to converge after restarts")
        .unpack()
}

/// Complex Givens rotation: `[c s; -conj(s) c] [f; g] = [r; 0]`.
fn lartg(f: Complex64, g: Complex64) -> (f64, Complex64) {
    if g.norm() == 0.0 {
        return (1.0, C0);
    }
    if f.norm() == 0.0 {
        return (0.0, g.conj() / g.norm());
    }
    let f1 = f.norm();
    let g1 = g.norm();
    let nrm = f1.hypot(g1);
    let c = f1 / nrm;
    let s = (f / f1) * g.conj() / nrm;
    (c, s)
}

fn rot_rows(t: &mut CMat, k: usize, cols: std::ops::Range<usize>, c: f64, s: Complex64) {
    for j in cols {
        let x = t[(k, j)];
        let y = t[(k + 1, j)];
        t[(k, j)] = x * c + s * y;
        t[(k + 1, j)] = y * c - s.conj() * x;
    }
}

fn rot_cols(t: &mut CMat, k: usize, rows: std::ops::Range<usize>, c: f64, s: Complex64) {
    for i in rows {
        let x = t[(i, k)];
        let y = t[(i, k + 1)];
        t[(i, k)] = x * c + s * y;
        t[(i, k + 1)] = y * c - s.conj() * x;
    }
}

/// Swap the adjacent diagonal entries `k` and `k+1` of an upper triangular
/// Schur factor, updating the Schur vectors.
fn swap_adjacent(t: &mut CMat, q: &mut CMat, k: usize) {
    let n = t.nrows();
    let t11 = t[(k, k)];
    let t22 = t[(k + 1, k + 1)];
    let (c, s) = lartg(t[(k, k + 1)], t22 - t11);
    if k + 2 < n {
        rot_rows(t, k, (k + 2)..n, c, s);
    }
    rot_cols(t, k, 0..k, c, s.conj());
    t[(k, k)] = t22;
    t[(k + 1, k + 1)] = t11;
    let rows = q.nrows();
    rot_cols(q, k, 0..rows, c, s.conj());
}

/// Reorder a complex Schur form so that the diagonal entries flagged in
/// `select` come first, preserving relative order within both groups.
/// Returns the number of selected entries.
pub fn reorder_schur(t: &mut CMat, q: &mut CMat, select: &[bool]) -> usize {
    let n = t.nrows();
    assert_eq!(select.len(), n);
    let mut sel = select.to_vec();
    let mut ks = 0;
    for k in 0..n {
        if sel[k] {
            let mut pos = k;
            while pos > ks {
                swap_adjacent(t, q, pos - 1);
                sel.swap(pos - 1, pos);
                pos -= 1;
            }
            ks += 1;
        }
    }
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = C0;
        }
    }
    ks
}

/// Single-linkage clustering of points closer than `tol`.
pub fn cluster(points: &[Complex64], tol: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut i = i;
        while p[i] != r {
            let nx = p[i];
            p[i] = r;
            i = nx;
        }
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (points[i] - points[j]).norm() <= tol {
                let ri = find(&mut parent, i);
                let rj = find(&mut parent, j);
                if ri != rj {
                    parent[rj.max(ri)] = rj.min(ri);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_to_group = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_to_group[r] == usize::MAX {
            root_to_group[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_to_group[r]].push(i);
    }
    groups
}

pub fn mean(points: &[Complex64]) -> Complex64 {
    let s: Complex64 = points.iter().sum();
    s / points.len().max(1) as f64
}

/// Greedy nearest-first matching of two multisets.
///
/// Returns the matched pairs `(i, j, distance)` and the unmatched indices of
/// each side; a pair is only formed when its distance is at most `tol`.
pub fn match_multisets(
    a: &[Complex64],
    b: &[Complex64],
    tol: f64,
) -> (Vec<(usize, usize, f64)>, Vec<usize>, Vec<usize>) {
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            let d = (x - y).norm();
            if d <= tol {
                cand.push((d, i, j));
            }
        }
    }
    cand.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut pairs = Vec::new();
    for (d, i, j) in cand {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            pairs.push((i, j, d));
        }
    }
    let ua = (0..a.len()).filter(|&i| !used_a[i]).collect();
    let ub = (0..b.len()).filter(|&j| !used_b[j]).collect();
    (pairs, ua, ub)
}

/// Solve `A X = B` for square complex `A` via LU; `None` when singular.
pub fn solve_c(a: &CMat, b: &CMat) -> Option<CMat> {
    if a.nrows() == 0 {
        return Some(CMat::zeros(0, b.ncols()));
    }
    a.clone().lu().solve(b)
}

pub fn solve_r(a: &RMat, b: &RMat) -> Option<RMat> {
    if a.nrows() == 0 {
        return Some(RMat::zeros(0, b.ncols()));
    }
    a.clone().lu().solve(b)
}

/// 2-norm condition number; infinite for singular or empty-rank matrices.
pub fn cond(a: &CMat) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (None, None) => 1.0,
        _ => f64::INFINITY,
    }
}

/// Symmetric inverse square root of a symmetric positive definite matrix.
pub fn spd_inv_sqrt(a: &RMat) -> Option<RMat> {
    let e = SymmetricEigen::new((a + a.transpose()) * 0.5);
    if e.eigenvalues.iter().any(|&l| l <= 0.0) {
        return None;
    }
    let d = RMat::from_diagonal(&e.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Some(&e.eigenvectors * d * e.eigenvectors.transpose())
}
