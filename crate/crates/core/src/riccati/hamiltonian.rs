//! Riccati data: the matrices Ã, D̃, C̃, the Hamiltonian `H`, its complex
//! form `M = jH` with the indefinite inner product `P`, and certificate checks.

use num_complex::Complex64;
use serde::Serialize;

use crate::behavior::ModeSet;
use crate::linalg::{self, CMat, RMat, C0, C1, JAY};
use crate::error::{Error, Result};
use crate::realization::StateSpace;

/// Minimum eigenvalue of `I + DᵀJD`.
pub fn strictness_at_infinity(d: &RMat, j: &RMat) -> f64 {
    let m = d.ncols();
    if m == 0 {
        return f64::INFINITY;
    }
    let r = RMat::identity(m, m) + d.transpose() * j * d;
    linalg::min_sym_eig(&r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tilde {
    pub a: RMat,
    pub d: RMat,
    pub c: RMat,
}

fn sym(a: RMat) -> RMat {
    (&a + a.transpose()) * 0.5
}

fn tilde_raw(ss: &StateSpace, j: &RMat) -> Option<Tilde> {
    let (n, m, p) = (ss.n(), ss.m(), ss.p());
    let r = RMat::identity(m, m) + ss.d.transpose() * j * &ss.d;
    let rinv_dj_c = linalg::solve_r(&r, &(ss.d.transpose() * j * &ss.c))?;
    let rinv_bt = linalg::solve_r(&r, &ss.b.transpose())?;
    let a = &ss.a - &ss.b * rinv_dj_c;
    let d = sym(&ss.b * rinv_bt);
    let c = if p == 0 {
        RMat::zeros(n, n)
    } else {
        let jdd = j + &ss.d * ss.d.transpose();
        sym(ss.c.transpose() * linalg::solve_r(&jdd, &ss.c)?)
    };
    Some(Tilde { a, d, c })
}

/// `Ã = A − B R⁻¹DᵀJC`, `D̃ = B R⁻¹Bᵀ`, `C̃ = Cᵀ(J + DDᵀ)⁻¹C` with `R = I + DᵀJD`.
pub fn build_tilde(ss: &StateSpace, j: &RMat, tol: f64) -> Result<Tilde> {
    let s = strictness_at_infinity(&ss.d, j);
    if s <= tol {
        return Err(Error::StrictnessViolated(s));
    }
    if ss.p() > 0 {
        let jdd = j + &ss.d * ss.d.transpose();
        let sv = linalg::singular_values(&linalg::to_complex(&jdd));
        let lo = sv.last().copied().unwrap_or(0.0);
        if lo <= 1e-12 * sv[0].max(1.0) {
            return Err(Error::SingularJdd);
        }
    }
    tilde_raw(ss, j).ok_or(Error::SingularJdd)
}

/// Hamiltonian data. `phat` is kept for completeness; nothing consumes it.
#[derive(Clone, Debug)]
pub struct HamiltonianData {
    pub atilde: RMat,
    pub dtilde: RMat,
    pub ctilde: RMat,
    pub h: RMat,
    pub m: CMat,
    pub p: CMat,
    pub phat: CMat,
}

impl HamiltonianData {
    pub fn n(&self) -> usize {
        self.atilde.nrows()
    }
}

fn blocks(tl: &RMat, tr: &RMat, bl: &RMat, br: &RMat) -> RMat {
    let n = tl.nrows();
    let mut h = RMat::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(tl);
    h.view_mut((0, n), (n, n)).copy_from(tr);
    h.view_mut((n, 0), (n, n)).copy_from(bl);
    h.view_mut((n, n), (n, n)).copy_from(br);
    h
}

/// `H = [Ã D̃; C̃ −Ãᵀ]`, `M = jH`, `P = [−C̃ Ãᵀ; Ã D̃]`, `P̂ = j[0 I; −I 0]`.
pub fn build_hamiltonian(t: &Tilde) -> Result<HamiltonianData> {
    let n = t.a.nrows();
    let h = blocks(&t.a, &t.d, &t.c, &(-t.a.transpose()));
    let m = linalg::to_complex(&h) * JAY;
    let p = linalg::to_complex(&blocks(&(-&t.c), &t.a.transpose(), &t.a, &t.d));
    let mut phat = CMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        phat[(i, n + i)] = JAY;
        phat[(n + i, i)] = -JAY;
    }
    let res = linalg::norm2(&(&p * &m - m.adjoint() * &p));
    let bound = 1e-12 * linalg::norm2(&p) * linalg::norm2(&m);
    if res > bound {
        return Err(Error::SelfAdjointnessFailed(res));
    }
    Ok(HamiltonianData { atilde: t.a.clone(), dtilde: t.d.clone(), ctilde: t.c.clone(), h, m, p, phat })
}

/// Frobenius norm of `KÃ + ÃᵀK + KD̃K − C̃`.
pub fn are_residual(t: &Tilde, k: &RMat) -> f64 {
    (k * &t.a + t.a.transpose() * k + k * &t.d * k - &t.c).norm()
}

/// The dissipation LMI block matrix for storage `xᵀKx`.
pub fn lmi_matrix(ss: &StateSpace, j: &RMat, k: &RMat) -> RMat {
    let (n, m) = (ss.n(), ss.m());
    let tl = k * &ss.a + ss.a.transpose() * k - ss.c.transpose() * j * &ss.c;
    let tr = k * &ss.b - ss.c.transpose() * j * &ss.d;
    let br = -(RMat::identity(m, m) + ss.d.transpose() * j * &ss.d);
    let mut l = RMat::zeros(n + m, n + m);
    l.view_mut((0, 0), (n, n)).copy_from(&tl);
    l.view_mut((0, n), (n, m)).copy_from(&tr);
    l.view_mut((n, 0), (m, n)).copy_from(&tr.transpose());
    l.view_mut((n, n), (m, m)).copy_from(&br);
    sym(l)
}

/// `(ARE residual, largest LMI eigenvalue)`; the residual is infinite when the
/// tilde matrices do not exist.
pub fn verify_certificate(ss: &StateSpace, j: &RMat, k: &RMat) -> (f64, f64) {
    let are = tilde_raw(ss, j).map_or(f64::INFINITY, |t| are_residual(&t, k));
    let lmi = linalg::max_sym_eig(&lmi_matrix(ss, j, k));
    (are, lmi)
}

/// `‖H[I; K] − [I; K](Ã + D̃K)‖`.
pub fn graph_residual(hd: &HamiltonianData, k: &RMat) -> f64 {
    let n = hd.n();
    let mut g = RMat::zeros(2 * n, n);
    g.view_mut((0, 0), (n, n)).copy_from(&RMat::identity(n, n));
    g.view_mut((n, 0), (n, n)).copy_from(k);
    let closed = &hd.atilde + &hd.dtilde * k;
    linalg::norm2_real(&(&hd.h * &g - &g * closed))
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub pass: bool,
    #[serde(serialize_with = "ser_c")]
    pub hamiltonian: Vec<Complex64>,
    #[serde(serialize_with = "ser_c")]
    pub expected: Vec<Complex64>,
    pub max_distance: f64,
    #[serde(serialize_with = "ser_c")]
    pub unmatched_hamiltonian: Vec<Complex64>,
    #[serde(serialize_with = "ser_c")]
    pub unmatched_expected: Vec<Complex64>,
}

pub(crate) fn ser_c<S: serde::Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

/// Compare `σ(H)` with `roots ∪ Λun ∪ (−Λun)` as multisets.
pub fn spectrum_identity_check(h: &RMat, roots: &[Complex64], lambda_un: &ModeSet, tol: f64) -> SpectrumReport {
    let mut hs = linalg::eigenvalues_real(h);
    sort_c(&mut hs);
    let mut expected: Vec<Complex64> = roots.to_vec();
    expected.extend(lambda_un.iter().copied());
    expected.extend(lambda_un.iter().map(|z| -z));
    sort_c(&mut expected);
    let (pairs, ua, ub) = linalg::match_multisets(&hs, &expected, tol);
    let max_distance = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    SpectrumReport {
        pass: ua.is_empty() && ub.is_empty(),
        unmatched_hamiltonian: ua.iter().map(|&i| hs[i]).collect(),
        unmatched_expected: ub.iter().map(|&i| expected[i]).collect(),
        hamiltonian: hs,
        expected,
        max_distance,
    }
}

pub(crate) fn sort_c(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
}

/// `[I; K]` as a complex basis, handy for comparing subspaces.
pub fn graph_basis(k: &RMat) -> CMat {
    let n = k.nrows();
    CMat::from_fn(2 * n, n, |i, j| {
        if i < n {
            if i == j { C1 } else { C0 }
        } else {
            Complex64::new(k[(i - n, j)], 0.0)
        }
    })
}
