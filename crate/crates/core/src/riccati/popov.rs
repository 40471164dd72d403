//! Frequency-domain test of dissipativity for controllable behaviors: the
//! Popov function `Mᵀ(−jω)ΣM(jω)` must be positive semidefinite on the
//! imaginary axis. Verdicts are sampled on a grid plus the imaginary-axis
//! roots of `det ∂Φ`, so they are labeled as grid-certified.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::linalg::{self, CMat, RMat};
use crate::poly::{rat_from_f64, Poly};
use crate::polymat::PolyMatrix;
use crate::realization::StateSpace;

pub const GRID_LABEL: &str = "grid-certified";

#[derive(Clone, Debug, Serialize)]
pub struct PopovVerdict {
    pub pass: bool,
    /// Smallest eigenvalue divided by `max(1, ‖M(jω)‖²)`.
    pub min_normalized: f64,
    /// Smallest eigenvalue without normalization.
    pub min_raw: f64,
    /// Frequency where the normalized minimum is attained.
    pub witness: f64,
    pub boundary: Vec<f64>,
    pub grid_points: usize,
    pub label: &'static str,
}

/// `0` followed by `count − 1` log-spaced points in `[1e-4·scale, 1e4·scale]`.
pub fn default_grid(count: usize, scale: f64) -> Vec<f64> {
    let count = count.max(2);
    let s = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
    let (lo, hi) = ((1e-4 * s).log10(), (1e4 * s).log10());
    let k = count - 1;
    let mut g = vec![0.0];
    for i in 0..k {
        let t = if k == 1 { 0.0 } else { i as f64 / (k - 1) as f64 };
        g.push(10f64.powf(lo + t * (hi - lo)));
    }
    g
}

/// `det(Mᵀ(−ξ) Σ M(ξ))`, computed exactly.
pub fn partial_determinant(m: &PolyMatrix, sigma: &RMat) -> Result<Poly> {
    let s = PolyMatrix::from_fn(sigma.nrows(), sigma.ncols(), |i, j| Poly::constant(rat_from_f64(sigma[(i, j)])));
    let phi = m.reflect().transpose().mul(&s)?.mul(m)?;
    phi.det()
}

/// Nonnegative frequencies `ω` with `jω` a root of `p`.
pub fn boundary_frequencies(p: &Poly) -> Vec<f64> {
    imaginary_axis_frequencies(&p.roots())
}

pub fn imaginary_axis_frequencies(points: &[Complex64]) -> Vec<f64> {
    let mut out: Vec<f64> = points
        .iter()
        .filter(|z| z.re.abs() <= 1e-6 * (1.0 + z.norm()))
        .map(|z| z.im.abs())
        .collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));
    out
}

/// Scan `grid ∪ boundary`; `eval(ω)` returns `(Π(ω), ‖M(jω)‖²)` or `None` at
/// points that must be skipped.
fn scan(grid: &[f64], boundary: &[f64], tol: f64, eval: impl Fn(f64) -> Option<(CMat, f64)>) -> PopovVerdict {
    let mut min_normalized = f64::INFINITY;
    let mut min_raw = f64::INFINITY;
    let mut witness = 0.0;
    let mut count = 0;
    for &w in grid.iter().chain(boundary) {
        let Some((pi, size)) = eval(w) else { continue };
        count += 1;
        let lo = linalg::herm_eigs(&pi).first().copied().unwrap_or(f64::INFINITY);
        let norm = lo / size.max(1.0);
        if norm < min_normalized {
            min_normalized = norm;
            witness = w;
        }
        min_raw = min_raw.min(lo);
    }
    PopovVerdict {
        pass: min_normalized >= -tol,
        min_normalized,
        min_raw,
        witness,
        boundary: boundary.to_vec(),
        grid_points: count,
        label: GRID_LABEL,
    }
}

/// Popov check for an image representation `w = M(d/dt)ℓ`.
pub fn controllable_dissipativity(m: &PolyMatrix, sigma: &RMat, grid: &[f64], tol: f64) -> Result<PopovVerdict> {
    let det = partial_determinant(m, sigma)?;
    let boundary = boundary_frequencies(&det);
    let s = linalg::to_complex(sigma);
    Ok(scan(grid, &boundary, tol, |w| {
        let mj = m.eval(Complex64::new(0.0, w));
        let size = linalg::norm2(&mj).powi(2);
        Some((mj.adjoint() * &s * mj, size))
    }))
}

/// Popov check through the transfer matrix: `Π(ω) = [I; G(jω)]* diag(I, J) [I; G(jω)]`
/// in canonical coordinates. Frequencies at poles are skipped.
pub fn transfer_dissipativity(ss: &StateSpace, j: &RMat, grid: &[f64], boundary: &[f64], tol: f64) -> PopovVerdict {
    let (m, p) = (ss.m(), ss.p());
    let jc = linalg::to_complex(j);
    scan(grid, boundary, tol, |w| {
        let g = ss.transfer_eval(Complex64::new(0.0, w)).ok()?;
        let mut stacked = CMat::zeros(m + p, m);
        stacked.view_mut((0, 0), (m, m)).copy_from(&CMat::identity(m, m));
        stacked.view_mut((m, 0), (p, m)).copy_from(&g);
        let size = linalg::norm2(&stacked).powi(2);
        let pi = CMat::identity(m, m) + g.adjoint() * &jc * g;
        Some((pi, size))
    })
}
