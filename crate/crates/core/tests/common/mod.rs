//! Random instances and independent numerical oracles shared by the
//! integration suites. Oracles use nalgebra directly, not the crate's own
//! linear algebra helpers.
#![allow(dead_code)]

use dissip_core::{Behavior, Poly, PolyMatrix, RMat, StateSpace};
use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type C64 = Complex<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn diag(v: &[f64]) -> RMat {
    RMat::from_diagonal(&nalgebra::DVector::from_vec(v.to_vec()))
}

/// `diag(I_m, −I_p)`.
pub fn bounded_real_sigma(m: usize, p: usize) -> RMat {
    let mut v = vec![1.0; m];
    v.extend(std::iter::repeat(-1.0).take(p));
    diag(&v)
}

/// `0` plus `count − 1` log-spaced frequencies in `[1e-3, 1e3]·scale`.
pub fn log_grid(count: usize, scale: f64) -> Vec<f64> {
    let mut g = vec![0.0];
    let (lo, hi) = ((1e-3 * scale).log10(), (1e3 * scale).log10());
    for i in 0..count - 1 {
        g.push(10f64.powf(lo + (hi - lo) * i as f64 / (count - 2) as f64));
    }
    g
}

/// Eigenvalues by capped Schur iterations, restarting on `QAQᵀ` for a
/// rotation `Q` if nalgebra stalls.
pub fn eigs(a: &RMat) -> Vec<C64> {
    let n = a.nrows();
    let mut b = a.clone();
    for k in 0..10 {
        if let Some(s) = nalgebra::linalg::Schur::try_new(b.clone(), f64::EPSILON, 500 * n.max(4)) {
            return s.complex_eigenvalues().iter().copied().collect();
        }
        let th = 0.3 + k as f64;
        let mut q = RMat::identity(n, n);
        for i in 0..n.saturating_sub(1) {
            let mut g = RMat::identity(n, n);
            let (c, s) = (th.cos(), th.sin());
            g[(i, i)] = c;
            g[(i + 1, i + 1)] = c;
            g[(i, i + 1)] = -s;
            g[(i + 1, i)] = s;
            q = g * q;
        }
        b = &q * a * q.transpose();
    }
    panic!("eigenvalue iteration did not converge");
}

fn cplx(a: &RMat) -> DMatrix<C64> {
    a.map(|x| C64::new(x, 0.0))
}

/// `C (jωI − A)⁻¹ B + D` by LU.
pub fn transfer(ss: &StateSpace, w: f64) -> Option<DMatrix<C64>> {
    let n = ss.a.nrows();
    let s = DMatrix::<C64>::identity(n, n) * C64::new(0.0, w) - cplx(&ss.a);
    let x = s.lu().solve(&cplx(&ss.b))?;
    Some(cplx(&ss.c) * x + cplx(&ss.d))
}

fn min_herm_eig(m: DMatrix<C64>) -> f64 {
    let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalue of `I + G*JG` over the grid.
pub fn popov_oracle(ss: &StateSpace, j: &RMat, grid: &[f64]) -> f64 {
    let m = ss.b.ncols();
    let jc = cplx(j);
    grid.iter()
        .filter_map(|&w| transfer(ss, w))
        .map(|g| min_herm_eig(DMatrix::identity(m, m) + g.adjoint() * &jc * g))
        .fold(f64::INFINITY, f64::min)
}

/// Largest singular value of `G(jω)` over the grid.
pub fn peak_gain(ss: &StateSpace, grid: &[f64]) -> f64 {
    grid.iter()
        .filter_map(|&w| transfer(ss, w))
        .map(|g| g.singular_values().iter().copied().fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

/// Largest eigenvalue of the dissipation LMI, assembled here from scratch.
pub fn lmi_max_eig(ss: &StateSpace, j: &RMat, k: &RMat) -> f64 {
    let (n, m) = (ss.a.nrows(), ss.b.ncols());
    let mut l = RMat::zeros(n + m, n + m);
    let tl = k * &ss.a + ss.a.transpose() * k - ss.c.transpose() * j * &ss.c;
    let tr = k * &ss.b - ss.c.transpose() * j * &ss.d;
    let br = -(RMat::identity(m, m) + ss.d.transpose() * j * &ss.d);
    l.view_mut((0, 0), (n, n)).copy_from(&tl);
    l.view_mut((0, n), (n, m)).copy_from(&tr);
    l.view_mut((n, 0), (m, n)).copy_from(&tr.transpose());
    l.view_mut((n, n), (m, m)).copy_from(&br);
    let l = (&l + l.transpose()) * 0.5;
    l.symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn controllable(a: &RMat, b: &RMat) -> bool {
    let n = a.nrows();
    let mut k = b.clone();
    let mut blk = b.clone();
    for _ in 1..n {
        blk = a * blk;
        k = nalgebra::stack![k, blk.clone()];
    }
    let sv = k.singular_values();
    sv.iter().filter(|&&s| s > 1e-6 * sv[0].max(1.0)).count() == n
}

fn uniform(rng: &mut ChaCha8Rng, r: usize, c: usize, s: f64) -> RMat {
    RMat::from_fn(r, c, |_, _| rng.gen_range(-s..s))
}

/// Controllable `(A, B, C)` with `D = 0`, poles at least 0.2 off the
/// imaginary axis and `C` scaled so that the grid peak gain equals `gain`.
pub fn random_bounded_real(rng: &mut ChaCha8Rng, gain: f64) -> StateSpace {
    loop {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=2);
        let p = rng.gen_range(1..=2);
        let a = uniform(rng, n, n, 2.0);
        let eig = eigs(&a);
        if eig.iter().any(|z| z.re.abs() < 0.2) {
            continue;
        }
        let b = uniform(rng, n, m, 1.0);
        if b.rank(1e-6) < m || !controllable(&a, &b) {
            continue;
        }
        let c = uniform(rng, p, n, 1.0);
        let ss = StateSpace::new(a, b, c, RMat::zeros(p, m)).unwrap();
        let scale = 1.0 + ss.a.norm();
        let g = peak_gain(&ss, &log_grid(10_000, scale));
        if g < 1e-3 {
            continue;
        }
        let c = &ss.c * (gain / g);
        return StateSpace::new(ss.a.clone(), ss.b.clone(), c, ss.d.clone()).unwrap();
    }
}

pub fn fpoly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `p(−ξ)` for ascending coefficients.
pub fn fpoly_reflect(a: &[f64]) -> Vec<f64> {
    a.iter().enumerate().map(|(k, &c)| if k % 2 == 1 { -c } else { c }).collect()
}

pub fn fpoly_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    (0..a.len().max(b.len())).map(|k| a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).collect()
}

/// Roots through the companion matrix.
pub fn fpoly_roots(c: &[f64]) -> Vec<C64> {
    let mut c = c.to_vec();
    while c.last().is_some_and(|x| x.abs() < 1e-14) {
        c.pop();
    }
    let d = c.len() - 1;
    if d == 0 {
        return vec![];
    }
    let lead = c[d];
    let comp = RMat::from_fn(d, d, |i, j| if j == d - 1 { -c[i] / lead } else if i == j + 1 { 1.0 } else { 0.0 });
    eigs(&comp)
}

pub fn int_poly(c: &[i64]) -> Poly {
    Poly::from_ints(c)
}

/// `a(ξ)·[p(ξ), −q(ξ)]`: `q` Hurwitz, `|p(jω)| < |q(jω)|` with margin, and
/// `a` with roots in the open left half plane (so the modes are unmixed).
pub struct UncontrollableInstance {
    pub behavior: Behavior,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub lambda_un: Vec<f64>,
}

fn int_roots_poly(roots: &[i64]) -> Vec<i64> {
    roots.iter().fold(vec![1], |acc, &r| {
        let mut out = vec![0; acc.len() + 1];
        for (k, &c) in acc.iter().enumerate() {
            out[k] += c * r;
            out[k + 1] += c;
        }
        out
    })
}

pub fn random_uncontrollable(rng: &mut ChaCha8Rng) -> UncontrollableInstance {
    loop {
        let na = rng.gen_range(1..=2);
        let nq = rng.gen_range(1..=2);
        let mut ar: Vec<i64> = (0..na).map(|_| rng.gen_range(1..=6)).collect();
        ar.sort();
        ar.dedup();
        let qr: Vec<i64> = (0..nq).map(|_| rng.gen_range(1..=5)).collect();
        let a = int_roots_poly(&ar);
        let q = int_roots_poly(&qr);
        let p: Vec<i64> = (0..nq).map(|_| rng.gen_range(-2..=2)).collect();
        if p.iter().all(|&x| x == 0) {
            continue;
        }
        let (pf, qf): (Vec<f64>, Vec<f64>) = (p.iter().map(|&x| x as f64).collect(), q.iter().map(|&x| x as f64).collect());
        let gap = log_grid(2000, 10.0)
            .into_iter()
            .map(|w| {
                let ev = |c: &[f64]| c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &x| acc * C64::new(0.0, w) + x);
                ev(&qf).norm_sqr() - ev(&pf).norm_sqr()
            })
            .fold(f64::INFINITY, f64::min);
        if gap < 0.5 {
            continue;
        }
        // p and q must be coprime, otherwise the controllable part changes
        let (pp, qq) = (int_poly(&p), int_poly(&q));
        if !pp.gcd(&qq).is_constant() {
            continue;
        }
        let ap = int_poly(&a);
        let r = PolyMatrix::from_fn(1, 2, |_, j| if j == 0 { &ap * &pp } else { -(&ap * &qq) });
        let behavior = Behavior::kernel(r);
        let lambda_un = ar.iter().map(|&r| -(r as f64)).collect();
        return UncontrollableInstance { behavior, p: pf, q: qf, lambda_un };
    }
}

/// Random integer kernel `L(ξ)·R₀(ξ)`, at most 3×4 and degree 3. About a
/// third of the draws skip `L`, which usually leaves a controllable kernel.
pub fn random_kernel(rng: &mut ChaCha8Rng) -> PolyMatrix {
    let rows = rng.gen_range(1..=3);
    let w = rng.gen_range(rows..=4);
    let bare = rng.gen_bool(0.35);
    let mut rp = |deg: usize| -> Poly {
        let c: Vec<i64> = (0..=deg).map(|_| rng.gen_range(-2..=2)).collect();
        int_poly(&c)
    };
    let r0 = PolyMatrix::from_fn(rows, w, |_, _| rp(1));
    if bare {
        return r0;
    }
    let l = PolyMatrix::from_fn(rows, rows, |i, j| if i == j { rp(2) } else { rp(1) });
    l.mul(&r0).unwrap()
}

/// Pair `each item of a` with a distinct item of `b`, greedily by distance.
pub fn pair_distance(a: &[C64], b: &[C64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap())?;
        used[k] = true;
        worst = worst.max(d);
    }
    Some(worst)
}
