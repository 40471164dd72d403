//! Spectral side of the construction: clustering of `σ(M)`, Jordan structure
//! at real eigenvalues, c-set selection, the P-neutral M-invariant subspace
//! and extraction of the storage matrix from it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::hamiltonian::{sort_c, HamiltonianData};
use crate::behavior::ModeSet;
use crate::error::{Error, Result};
use crate::linalg::{self, fmt_c, CMat, RMat, JAY};

/// Default clustering tolerance, relative to `max(1, ‖M‖)`.
pub const CLUSTER_TOL: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct Cluster {
    pub members: Vec<usize>,
    pub center: Complex64,
    /// Eigenvalue of `M` on the real axis (imaginary axis of `H`).
    pub real: bool,
}

/// Complex Schur form of `M` with its eigenvalues grouped into clusters.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub q: CMat,
    pub t: CMat,
    pub eigs: Vec<Complex64>,
    pub clusters: Vec<Cluster>,
    pub scale: f64,
    pub cluster_abs: f64,
}

impl Spectrum {
    /// Clusters at `cluster_tol·‖M‖` first. The spectrum of `M` is closed
    /// under conjugation with multiplicities, but a defective eigenvalue
    /// splits by about `√ε·‖M‖` and can break that pattern; the tolerance
    /// is then widened by decades, at most to `1e-4·‖M‖`, until it holds.
    pub fn new(m: &CMat, cluster_tol: f64) -> Self {
        let scale = linalg::norm2(m).max(1.0);
        let (q, t) = linalg::schur(m);
        let eigs: Vec<Complex64> = (0..t.nrows()).map(|i| t[(i, i)]).collect();
        let mut cluster_abs = cluster_tol * scale;
        let mut clusters = group(&eigs, cluster_abs);
        while !conjugation_closed(&clusters, cluster_abs.max(1e-6 * scale)) && cluster_abs * 10.0 <= 1e-4 * scale * (1.0 + 1e-12) {
            cluster_abs *= 10.0;
            clusters = group(&eigs, cluster_abs);
        }
        Spectrum { q, t, eigs, clusters, scale, cluster_abs }
    }

    pub fn dim(&self) -> usize {
        self.eigs.len()
    }

    /// Schur vectors and nilpotent part `T_gg − λ₀I` of one cluster.
    fn isolate(&self, g: usize) -> (CMat, CMat) {
        let c = &self.clusters[g];
        let mut sel = vec![false; self.dim()];
        for &i in &c.members {
            sel[i] = true;
        }
        let (mut t, mut q) = (self.t.clone(), self.q.clone());
        let s = linalg::reorder_schur(&mut t, &mut q, &sel);
        let mut nil = t.view((0, 0), (s, s)).into_owned();
        for i in 0..s {
            nil[(i, i)] -= c.center;
        }
        (q.columns(0, s).into_owned(), nil)
    }

    /// Jordan block sizes of one cluster, largest first.
    pub fn block_sizes(&self, g: usize, rank_tol: f64) -> Result<Vec<usize>> {
        let (_, nil) = self.isolate(g);
        let ranks = rank_staircase(&nil, self.scale, rank_tol)?;
        Ok(sizes_from_ranks(&ranks))
    }

    pub fn real_clusters(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.clusters.len()).filter(|&g| self.clusters[g].real)
    }
}

fn group(eigs: &[Complex64], tol: f64) -> Vec<Cluster> {
    linalg::cluster(eigs, tol)
        .into_iter()
        .map(|members| {
            let pts: Vec<Complex64> = members.iter().map(|&i| eigs[i]).collect();
            let mut center = linalg::mean(&pts);
            let real = center.im.abs() <= tol;
            if real {
                center.im = 0.0;
            }
            Cluster { members, center, real }
        })
        .collect()
}

/// Every non-real cluster has a conjugate cluster of the same size.
fn conjugation_closed(clusters: &[Cluster], tol: f64) -> bool {
    clusters.iter().filter(|c| !c.real).all(|a| {
        clusters
            .iter()
            .any(|b| !b.real && b.members.len() == a.members.len() && (b.center - a.center.conj()).norm() <= tol)
    })
}

fn mat_pow(a: &CMat, k: usize) -> CMat {
    let mut out = CMat::identity(a.nrows(), a.ncols());
    for _ in 0..k {
        out = &out * a;
    }
    out
}

fn threshold(scale: f64, rank_tol: f64, k: usize) -> f64 {
    rank_tol * scale.powi(k as i32)
}

/// `r_k = rank(N^k)` for `k = 0..=s+1`.
fn rank_staircase(nil: &CMat, scale: f64, rank_tol: f64) -> Result<Vec<usize>> {
    let s = nil.nrows();
    let mut ranks = vec![s];
    for k in 1..=s {
        if *ranks.last().unwrap() == 0 {
            ranks.push(0);
            continue;
        }
        let thr = threshold(scale, rank_tol, k);
        let sv = linalg::singular_values(&mat_pow(nil, k));
        if sv.iter().any(|&v| v > thr / 100.0 && v < thr * 100.0) {
            return Err(Error::IllConditioned);
        }
        ranks.push(sv.iter().filter(|&&v| v > thr).count());
    }
    ranks.push(0);
    Ok(ranks)
}

fn sizes_from_ranks(r: &[usize]) -> Vec<usize> {
    let s = r[0];
    let mut sizes = Vec::new();
    for k in (1..=s).rev() {
        let count = r[k - 1] as isize - 2 * r[k] as isize + r[k + 1] as isize;
        for _ in 0..count.max(0) {
            sizes.push(k);
        }
    }
    sizes
}

/// Jordan block sizes of `m` at the eigenvalue `lambda`, from the rank
/// staircase of the restricted Schur block.
pub fn partial_multiplicities(m: &CMat, lambda: Complex64, rank_tol: f64) -> Result<Vec<usize>> {
    let spec = Spectrum::new(m, CLUSTER_TOL);
    let g = spec
        .clusters
        .iter()
        .enumerate()
        .map(|(g, c)| (g, (c.center - lambda).norm()))
        .filter(|&(_, d)| d <= spec.cluster_abs.max(1e-6 * spec.scale))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .map(|(g, _)| g)
        .ok_or_else(|| Error::SpectrumMismatch(format!("{} is not an eigenvalue", fmt_c(lambda))))?;
    spec.block_sizes(g, rank_tol)
}

/// One member of each nonreal conjugate pair of `σ(M)`, with multiplicity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CSet {
    pub members: ModeSet,
    #[serde(skip)]
    pub(crate) clusters: Vec<usize>,
}

impl CSet {
    pub fn members(&self) -> &[Complex64] {
        &self.members.modes
    }
}

/// How a conjugate pair without a forced member is resolved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieBreak {
    /// Positive imaginary part in `M`, i.e. the antistable eigenvalue of `H`.
    #[default]
    UpperHalfPlane,
    LowerHalfPlane,
}

/// Pick the c-set: the clusters containing `jλ` for `λ ∈ Λun` are forced,
/// every other conjugate pair contributes its member with positive
/// imaginary part.
pub fn build_cset(spec: &Spectrum, lambda_un: &ModeSet, match_tol: f64) -> Result<CSet> {
    build_cset_with(spec, lambda_un, match_tol, TieBreak::UpperHalfPlane)
}

pub fn build_cset_with(spec: &Spectrum, lambda_un: &ModeSet, match_tol: f64, tie: TieBreak) -> Result<CSet> {
    let nc = spec.clusters.len();
    let tol = match_tol.max(spec.cluster_abs);
    let mut forced = vec![None::<Complex64>; nc];
    for &lam in lambda_un.iter() {
        let target = JAY * lam;
        if target.im.abs() <= spec.cluster_abs {
            return Err(Error::UnmixingViolated(fmt_c(lam), fmt_c(-lam.conj())));
        }
        let g = (0..nc)
            .filter(|&g| !spec.clusters[g].real)
            .map(|g| (g, (spec.clusters[g].center - target).norm()))
            .filter(|&(_, d)| d <= tol)
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .map(|(g, _)| g)
            .ok_or_else(|| {
                Error::SpectrumMismatch(format!("j·{} is not an eigenvalue of M", fmt_c(lam)))
            })?;
        forced[g] = Some(lam);
    }
    let mut partner = vec![usize::MAX; nc];
    for a in 0..nc {
        if spec.clusters[a].real || partner[a] != usize::MAX {
            continue;
        }
        let want = spec.clusters[a].center.conj();
        let b = (0..nc)
            .filter(|&b| b != a && !spec.clusters[b].real && partner[b] == usize::MAX)
            .map(|b| (b, (spec.clusters[b].center - want).norm()))
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .filter(|&(b, d)| {
                d <= tol.max(1e-6 * spec.scale)
                    && spec.clusters[b].members.len() == spec.clusters[a].members.len()
            })
            .map(|(b, _)| b)
            .ok_or_else(|| {
                Error::SpectrumMismatch(format!(
                    "no conjugate partner for eigenvalue {} of M",
                    fmt_c(spec.clusters[a].center)
                ))
            })?;
        partner[a] = b;
        partner[b] = a;
    }
    let mut chosen = Vec::new();
    for a in 0..nc {
        let b = partner[a];
        if b == usize::MAX || b < a {
            continue;
        }
        let pick = match (forced[a], forced[b]) {
            (Some(x), Some(y)) => return Err(Error::UnmixingViolated(fmt_c(x), fmt_c(y))),
            (Some(_), None) => a,
            (None, Some(_)) => b,
            (None, None) => {
                if (spec.clusters[a].center.im > 0.0) == (tie == TieBreak::UpperHalfPlane) {
                    a
                } else {
                    b
                }
            }
        };
        chosen.push(pick);
    }
    chosen.sort_unstable();
    let mut members = Vec::new();
    for &g in &chosen {
        let c = &spec.clusters[g];
        members.extend(std::iter::repeat_n(c.center, c.members.len()));
    }
    sort_c(&mut members);
    Ok(CSet { members: ModeSet { modes: members }, clusters: chosen })
}

#[derive(Clone, Copy, Debug)]
pub struct SubspaceOptions {
    pub rank_tol: f64,
    pub subspace_tol: f64,
    pub cond_max: f64,
    pub herm_tol: f64,
    pub real_tol: f64,
}

impl Default for SubspaceOptions {
    fn default() -> Self {
        SubspaceOptions { rank_tol: 1e-8, subspace_tol: 1e-8, cond_max: 1e10, herm_tol: 1e-8, real_tol: 1e-8 }
    }
}

/// `Σ_k (ker N^k ∩ im N^k)`: the first halves of all Jordan chains of a
/// nilpotent block whose blocks all have even size.
fn half_chains(nil: &CMat, scale: f64, rank_tol: f64, max_size: usize) -> CMat {
    let s = nil.nrows();
    let mut cols = Vec::new();
    for k in 1..=max_size {
        let nk = mat_pow(nil, k);
        let thr = threshold(scale, rank_tol, k);
        let ker = linalg::null_space_abs(&nk, thr);
        let im = linalg::range_abs(&nk, thr);
        let both = linalg::intersect_orthonormal(&ker, &im, 1e-6);
        cols.extend(both.column_iter().map(|c| c.into_owned()));
    }
    if cols.is_empty() {
        return CMat::zeros(s, 0);
    }
    linalg::orth(&CMat::from_columns(&cols), 1e-8)
}

/// Orthonormal basis of the n-dimensional M-invariant P-neutral subspace
/// belonging to the c-set.
pub fn neutral_invariant_subspace(
    hd: &HamiltonianData,
    spec: &Spectrum,
    cset: &CSet,
    opts: &SubspaceOptions,
) -> Result<CMat> {
    let n = hd.n();
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let mut cols: Vec<nalgebra::DVector<Complex64>> = Vec::new();

    let mut sel = vec![false; spec.dim()];
    for &g in &cset.clusters {
        for &i in &spec.clusters[g].members {
            sel[i] = true;
        }
    }
    let (mut t, mut q) = (spec.t.clone(), spec.q.clone());
    let k = linalg::reorder_schur(&mut t, &mut q, &sel);
    cols.extend((0..k).map(|j| q.column(j).into_owned()));

    for g in spec.real_clusters() {
        let sizes = spec.block_sizes(g, opts.rank_tol)?;
        if sizes.iter().any(|s| s % 2 == 1) {
            return Err(Error::OddMultiplicity { eigenvalue: fmt_c(spec.clusters[g].center), sizes });
        }
        let (qg, nil) = spec.isolate(g);
        let half = half_chains(&nil, spec.scale, opts.rank_tol, sizes[0]);
        let want: usize = sizes.iter().sum::<usize>() / 2;
        if half.ncols() != want {
            return Err(Error::IllConditioned);
        }
        let lifted = qg * half;
        cols.extend(lifted.column_iter().map(|c| c.into_owned()));
    }

    if cols.len() != n {
        return Err(Error::SpectrumMismatch(format!(
            "selected subspace has dimension {} instead of {n}",
            cols.len()
        )));
    }
    let x = linalg::orth(&CMat::from_columns(&cols), 1e-10);
    if x.ncols() != n {
        return Err(Error::IllConditioned);
    }
    let invariance = linalg::norm2(&(&hd.m * &x - &x * (x.adjoint() * &hd.m * &x)));
    if invariance > opts.subspace_tol * spec.scale {
        return Err(Error::IllConditioned);
    }
    let pn = linalg::norm2(&hd.p).max(f64::MIN_POSITIVE);
    let neutrality = linalg::norm2(&(x.adjoint() * &hd.p * &x)) / pn;
    if neutrality > opts.subspace_tol {
        return Err(Error::NeutralityFailed(neutrality));
    }
    Ok(x)
}

/// `K = X₂X₁⁻¹` for a basis `[X₁; X₂]`, returned real symmetric.
pub fn extract_k(basis: &CMat, opts: &SubspaceOptions) -> Result<RMat> {
    let n = basis.ncols();
    if basis.nrows() != 2 * n {
        return Err(Error::ShapeMismatch(format!("basis is {}x{n}", basis.nrows())));
    }
    if n == 0 {
        return Ok(RMat::zeros(0, 0));
    }
    let x1 = basis.rows(0, n).into_owned();
    let x2 = basis.rows(n, n).into_owned();
    let c = linalg::cond(&x1);
    if !(c <= opts.cond_max) {
        return Err(Error::NotGraphSubspace(c));
    }
    // K X₁ = X₂  ⇔  X₁ᵀ Kᵀ = X₂ᵀ
    let kt = linalg::solve_c(&x1.transpose(), &x2.transpose()).ok_or(Error::NotGraphSubspace(c))?;
    let k = kt.transpose();
    let knorm = linalg::norm2(&k).max(1e-12);
    let skew = linalg::norm2(&((&k - k.adjoint()) * Complex64::new(0.5, 0.0)));
    if skew > opts.herm_tol * knorm {
        return Err(Error::NonHermitian(skew / knorm));
    }
    let kh = (&k + k.adjoint()) * Complex64::new(0.5, 0.0);
    let imag = linalg::norm2_real(&kh.map(|z| z.im));
    if imag > opts.real_tol * knorm {
        return Err(Error::NonReal(imag / knorm));
    }
    let kr = kh.map(|z| z.re);
    Ok((&kr + kr.transpose()) * 0.5)
}
