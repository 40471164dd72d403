//! Input/state/output realizations of kernel behaviors, the Kalman
//! controllability staircase, transfer evaluation and exact feedthrough.

use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::behavior::IoPartition;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat};
use crate::poly::{rat_to_f64, Poly, Rational};
use crate::polymat::PolyMatrix;
use crate::ratlin::{self, QMat};

/// `x' = A x + B u`, `y = C x + D u`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    pub a: RMat,
    pub b: RMat,
    pub c: RMat,
    pub d: RMat,
}

impl StateSpace {
    pub fn new(a: RMat, b: RMat, c: RMat, d: RMat) -> Result<Self> {
        let n = a.nrows();
        let ok = a.ncols() == n
            && b.nrows() == n
            && c.ncols() == n
            && d.nrows() == c.nrows()
            && d.ncols() == b.ncols();
        if !ok {
            return Err(Error::ShapeMismatch(format!(
                "A {:?}, B {:?}, C {:?}, D {:?}",
                a.shape(),
                b.shape(),
                c.shape(),
                d.shape()
            )));
        }
        Ok(StateSpace { a, b, c, d })
    }

    pub fn from_rows(a: &[&[f64]], b: &[&[f64]], c: &[&[f64]], d: &[&[f64]]) -> Result<Self> {
        let n = a.len();
        let m = d.first().map_or(b.first().map_or(0, |r| r.len()), |r| r.len());
        let p = d.len().max(c.len());
        let mk = |rows: &[&[f64]], r: usize, cc: usize| {
            RMat::from_fn(r, cc, |i, j| rows[i][j])
        };
        Self::new(mk(a, n, n), mk(b, n, m), mk(c, p, n), mk(d, p, m))
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Output dimension.
    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    /// `C (sI − A)⁻¹ B + D`.
    pub fn transfer_eval(&self, s: Complex64) -> Result<CMat> {
        let n = self.n();
        let d = linalg::to_complex(&self.d);
        if n == 0 {
            return Ok(d);
        }
        let si_a = CMat::identity(n, n) * s - linalg::to_complex(&self.a);
        let scale = 1.0 + linalg::norm2_real(&self.a) + s.norm();
        let smin = linalg::singular_values(&si_a).last().copied().unwrap_or(0.0);
        if smin <= 1e-13 * scale {
            return Err(Error::PoleEvaluation(linalg::fmt_c(s)));
        }
        let x = linalg::solve_c(&si_a, &linalg::to_complex(&self.b))
            .ok_or_else(|| Error::PoleEvaluation(linalg::fmt_c(s)))?;
        Ok(linalg::to_complex(&self.c) * x + d)
    }

    /// PBH test: `rank [λI − A; C] = n` at every eigenvalue of `A`.
    pub fn is_observable(&self, tol: f64) -> bool {
        let n = self.n();
        let ac = linalg::to_complex(&self.a);
        let cc = linalg::to_complex(&self.c);
        let scale = 1.0 + linalg::norm2_real(&self.a) + linalg::norm2_real(&self.c);
        linalg::eigenvalues_real(&self.a).into_iter().all(|lam| {
            let mut st = CMat::zeros(n + self.p(), n);
            st.view_mut((0, 0), (n, n)).copy_from(&(CMat::identity(n, n) * lam - &ac));
            st.view_mut((n, 0), (self.p(), n)).copy_from(&cc);
            let s = linalg::singular_values(&st);
            s.iter().filter(|&&v| v > tol * scale).count() == n
        })
    }

    /// Kalman controllability staircase.
    pub fn kalman(&self, tol: f64) -> KalmanForm {
        kalman(self, tol)
    }
}

#[derive(Serialize, Deserialize)]
#[allow(non_snake_case)]
struct StateSpaceFile {
    A: Vec<Vec<f64>>,
    B: Vec<Vec<f64>>,
    C: Vec<Vec<f64>>,
    D: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<usize>,
}

fn rows_of(m: &RMat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn mat_from(rows: &[Vec<f64>], r: usize, c: usize, name: &str) -> std::result::Result<RMat, String> {
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(format!("{name} must be {r}x{c}"));
    }
    Ok(RMat::from_fn(r, c, |i, j| rows[i][j]))
}

impl Serialize for StateSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateSpaceFile {
            A: rows_of(&self.a),
            B: rows_of(&self.b),
            C: rows_of(&self.c),
            D: rows_of(&self.d),
            n: Some(self.n()),
            m: Some(self.m()),
            p: Some(self.p()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StateSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = StateSpaceFile::deserialize(d)?;
        let n = f.n.unwrap_or(f.A.len());
        let m = f
            .m
            .or_else(|| f.D.first().map(Vec::len))
            .or_else(|| f.B.first().map(Vec::len))
            .unwrap_or(0);
        let p = f.p.unwrap_or(f.D.len().max(f.C.len()));
        let build = || -> std::result::Result<StateSpace, String> {
            let b = if f.B.is_empty() && n > 0 && m == 0 {
                RMat::zeros(n, 0)
            } else {
                mat_from(&f.B, n, m, "B")?
            };
            let c = if f.C.is_empty() && n == 0 { RMat::zeros(p, 0) } else { mat_from(&f.C, p, n, "C")? };
            let dd = if f.D.is_empty() { RMat::zeros(p, m) } else { mat_from(&f.D, p, m, "D")? };
            StateSpace::new(mat_from(&f.A, n, n, "A")?, b, c, dd).map_err(|e| e.to_string())
        };
        build().map_err(serde::de::Error::custom)
    }
}

/// `T⁻¹ A T = [A_c A_cp; 0 A_u]`, `T⁻¹ B = [B_c; 0]`, `C T = [C_c C_u]`.
#[derive(Clone, Debug)]
pub struct KalmanForm {
    pub t: RMat,
    pub a_c: RMat,
    pub a_cp: RMat,
    pub a_u: RMat,
    pub b_c: RMat,
    pub c_c: RMat,
    pub c_u: RMat,
    pub n_c: usize,
    pub n_u: usize,
}

impl KalmanForm {
    /// Reassemble `T⁻¹ A T`.
    pub fn transformed_a(&self) -> RMat {
        let n = self.n_c + self.n_u;
        let mut a = RMat::zeros(n, n);
        a.view_mut((0, 0), (self.n_c, self.n_c)).copy_from(&self.a_c);
        a.view_mut((0, self.n_c), (self.n_c, self.n_u)).copy_from(&self.a_cp);
        a.view_mut((self.n_c, self.n_c), (self.n_u, self.n_u)).copy_from(&self.a_u);
        a
    }

    pub fn uncontrollable_modes(&self) -> Vec<Complex64> {
        linalg::eigenvalues_real(&self.a_u)
    }
}

/// Orthogonal staircase: each step compresses the current input block with
/// an SVD and moves its range to the top of the remaining coordinates.
pub fn kalman(ss: &StateSpace, tol: f64) -> KalmanForm {
    let n = ss.n();
    let scale = linalg::norm2_real(&ss.a).max(linalg::norm2_real(&ss.b)).max(f64::MIN_POSITIVE);
    let thr = tol * scale;
    let mut t = RMat::identity(n, n);
    let mut a = ss.a.clone();
    let mut b = ss.b.clone();
    let mut n_c = 0;
    let mut block = b.clone();
    while n_c < n && block.ncols() > 0 {
        let rest = n - n_c;
        // left singular vectors of `block` = right singular vectors of its transpose
        let (_, s, v) = linalg::full_svd(&linalg::to_complex(&block.transpose()));
        let r = s.iter().take(block.nrows().min(block.ncols())).filter(|&&x| x > thr).count();
        if r == 0 {
            break;
        }
        let u = v.map(|z| z.re);
        let mut q = RMat::identity(n, n);
        q.view_mut((n_c, n_c), (rest, rest)).copy_from(&u);
        a = q.transpose() * &a * &q;
        b = q.transpose() * &b;
        t = &t * &q;
        let prev = n_c;
        n_c += r;
        if n_c < n {
            block = a.view((n_c, prev), (n - n_c, r)).into_owned();
        }
    }
    // clean structural zeros
    for i in n_c..n {
        for j in 0..n_c {
            a[(i, j)] = 0.0;
        }
        for j in 0..b.ncols() {
            b[(i, j)] = 0.0;
        }
    }
    let c = &ss.c * &t;
    let n_u = n - n_c;
    KalmanForm {
        a_c: a.view((0, 0), (n_c, n_c)).into_owned(),
        a_cp: a.view((0, n_c), (n_c, n_u)).into_owned(),
        a_u: a.view((n_c, n_c), (n_u, n_u)).into_owned(),
        b_c: b.view((0, 0), (n_c, b.ncols())).into_owned(),
        c_c: c.view((0, 0), (c.nrows(), n_c)).into_owned(),
        c_u: c.view((0, n_c), (c.nrows(), n_u)).into_owned(),
        t,
        n_c,
        n_u,
    }
}

fn row_degree(m: &PolyMatrix, i: usize) -> Option<usize> {
    m.row(i).iter().filter_map(Poly::degree).max()
}

fn leading_row_matrix(m: &PolyMatrix, degs: &[usize]) -> QMat {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m.coeff(i, j, degs[i])).collect())
        .collect()
}

/// Unimodular left operations on `[P Q]` until `P` is row reduced.
/// Returns the row degrees of `P`.
fn row_reduce(p: &mut PolyMatrix, q: &mut PolyMatrix) -> Result<Vec<usize>> {
    let rows = p.nrows();
    loop {
        let degs = (0..rows)
            .map(|i| row_degree(p, i).ok_or(Error::SingularOutputBlock))
            .collect::<Result<Vec<usize>>>()?;
        let hr = leading_row_matrix(p, &degs);
        let Some(alpha) = ratlin::left_null_vector(&hr, rows) else {
            return Ok(degs);
        };
        let target = (0..rows)
            .filter(|&i| !alpha[i].is_zero())
            .max_by(|&x, &y| degs[x].cmp(&degs[y]).then(y.cmp(&x)))
            .expect("nonzero null vector");
        let kt = degs[target];
        let inv = alpha[target].recip();
        for mat in [&mut *p, &mut *q] {
            let new_row: Vec<Poly> = (0..mat.ncols())
                .map(|j| {
                    let mut acc = Poly::zero();
                    for i in 0..rows {
                        if alpha[i].is_zero() {
                            continue;
                        }
                        let c = &alpha[i] * &inv;
                        acc = &acc + &mat.get(i, j).shift(kt - degs[i]).scale(&c);
                    }
                    acc
                })
                .collect();
            for (j, e) in new_row.into_iter().enumerate() {
                mat.set(target, j, e);
            }
        }
    }
}

fn q_to_f64(m: &QMat, rows: usize, cols: usize) -> RMat {
    RMat::from_fn(rows, cols, |i, j| rat_to_f64(&m[i][j]))
}

/// Observable realization of `ker R` with the given input/output split.
///
/// Builds an observer-form realization from the row-reduced left fraction
/// `P y = Q u` with `P = R[:, outputs]`, `Q = −R[:, inputs]`.
pub fn realize(r: &PolyMatrix, part: &IoPartition) -> Result<StateSpace> {
    part.validate(r.ncols())?;
    let (ins, outs) = (&part.inputs, &part.outputs);
    if outs.len() != r.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "{} kernel rows but {} outputs",
            r.nrows(),
            outs.len()
        )));
    }
    let mut p = r.select_cols(outs);
    let mut q = r.select_cols(ins).scale(&-Rational::one());
    let pdet = p.det()?;
    if pdet.is_zero() {
        return Err(Error::SingularOutputBlock);
    }
    let degs = row_reduce(&mut p, &mut q)?;
    let (np, nm) = (outs.len(), ins.len());
    for (i, &k) in degs.iter().enumerate() {
        if row_degree(&q, i).is_some_and(|dq| dq > k) {
            return Err(Error::ImproperTransfer);
        }
    }
    let p_hr = leading_row_matrix(&p, &degs);
    let q_hr = leading_row_matrix(&q, &degs);
    let p_hr_inv = ratlin::inverse(&p_hr).ok_or(Error::SingularOutputBlock)?;
    let d_exact = ratlin::mul(&p_hr_inv, &q_hr, np, nm);
    let d_poly = PolyMatrix::from_fn(np, nm, |i, j| Poly::constant(d_exact[i][j].clone()));
    let q_bar = q.sub(&p.mul(&d_poly)?)?;

    let n: usize = degs.iter().sum();
    let mut offs = Vec::with_capacity(np);
    let mut acc = 0;
    for &k in &degs {
        offs.push(acc);
        acc += k;
    }
    // controller form of the transposed fraction Q̄ᵀ (Pᵀ)⁻¹
    let mut a0 = ratlin::zeros(n, n);
    let mut b0 = ratlin::zeros(n, np);
    let mut d_lc = ratlin::zeros(np, n);
    let mut n_lc = ratlin::zeros(nm, n);
    for i in 0..np {
        let (off, k) = (offs[i], degs[i]);
        if k == 0 {
            continue;
        }
        for l in 0..k - 1 {
            a0[off + l][off + l + 1] = Rational::one();
        }
        b0[off + k - 1][i] = Rational::one();
        for l in 0..k {
            for rr in 0..np {
                d_lc[rr][off + l] = p.coeff(i, rr, l);
            }
            for rr in 0..nm {
                n_lc[rr][off + l] = q_bar.coeff(i, rr, l);
            }
        }
    }
    let d_hc: QMat = (0..np).map(|i| (0..np).map(|j| p_hr[j][i].clone()).collect()).collect();
    let d_hc_inv = ratlin::inverse(&d_hc).ok_or(Error::SingularOutputBlock)?;
    let bc = ratlin::mul(&b0, &d_hc_inv, np, np);
    let corr = ratlin::mul(&bc, &d_lc, np, n);
    let ac: QMat = (0..n).map(|i| (0..n).map(|j| &a0[i][j] - &corr[i][j]).collect()).collect();

    let a = q_to_f64(&ac, n, n).transpose();
    let b = q_to_f64(&n_lc, nm, n).transpose();
    let c = q_to_f64(&bc, n, np).transpose();
    let d = q_to_f64(&d_exact, np, nm);
    let ss = StateSpace::new(a, b, c, d)?;
    if !ss.is_observable(1e-10) {
        return Err(Error::NotObservable);
    }
    Ok(ss)
}

/// Exact `D = lim G(s)` for `G = W₂ W₁⁻¹` with `W₁ = M[inputs]`, `W₂ = M[outputs]`.
pub fn feedthrough(m: &PolyMatrix, part: &IoPartition) -> Result<RMat> {
    part.validate(m.nrows())?;
    let w1 = m.select_rows(&part.inputs);
    let w2 = m.select_rows(&part.outputs);
    if !w1.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "input block is {}x{}",
            w1.nrows(),
            w1.ncols()
        )));
    }
    let det = w1.det()?;
    let Some(dd) = det.degree() else {
        return Err(Error::InvalidInput("input block of the image is singular".into()));
    };
    let num = w2.mul(&w1.adjugate()?)?;
    let lead = det.leading();
    let mut out = RMat::zeros(num.nrows(), num.ncols());
    for i in 0..num.nrows() {
        for j in 0..num.ncols() {
            let e = num.get(i, j);
            if e.degree().is_some_and(|k| k > dd) {
                return Err(Error::ImproperTransfer);
            }
            out[(i, j)] = rat_to_f64(&(e.coeff(dd) / &lead));
        }
    }
    Ok(out)
}

/// `x = X(d/dt) w` for an observable realization: coefficient matrices of
/// `X(ξ)` (each `n × w`, ascending powers), in the caller's variable order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateMap {
    pub coeffs: Vec<Vec<Vec<f64>>>,
}

impl StateMap {
    pub fn coeff(&self, k: usize) -> RMat {
        let c = &self.coeffs[k];
        let cols = c.first().map_or(0, Vec::len);
        RMat::from_fn(c.len(), cols, |i, j| c[i][j])
    }

    pub fn eval(&self, s: Complex64) -> CMat {
        let mut out: Option<CMat> = None;
        for k in (0..self.coeffs.len()).rev() {
            let ck = linalg::to_complex(&self.coeff(k));
            out = Some(match out {
                None => ck,
                Some(acc) => acc * s + ck,
            });
        }
        out.unwrap_or_else(|| CMat::zeros(0, 0))
    }
}

/// Recover the state from derivatives of the external variables through the
/// observability matrix.
pub fn state_map(ss: &StateSpace, part: &IoPartition) -> Result<StateMap> {
    let (n, m, p) = (ss.n(), ss.m(), ss.p());
    let w = m + p;
    part.validate(w)?;
    if n == 0 {
        return Ok(StateMap { coeffs: Vec::new() });
    }
    let mut obs = RMat::zeros(p * n, n);
    let mut ak = RMat::identity(n, n);
    let mut powers = Vec::with_capacity(n);
    for k in 0..n {
        obs.view_mut((k * p, 0), (p, n)).copy_from(&(&ss.c * &ak));
        powers.push(ak.clone());
        ak = &ak * &ss.a;
    }
    let pinv = obs
        .clone()
        .pseudo_inverse(1e-12 * linalg::norm2_real(&obs).max(1.0))
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    // markov block T_{k,i}: C A^{k-1-i} B for i < k, D for i = k
    let markov = |k: usize, i: usize| -> RMat {
        if i == k {
            ss.d.clone()
        } else {
            &ss.c * &powers[k - 1 - i] * &ss.b
        }
    };
    let mut coeffs = Vec::with_capacity(n);
    for deg in 0..n {
        let mut xk = RMat::zeros(n, w);
        let py = pinv.view((0, deg * p), (n, p)).into_owned();
        let mut pu = RMat::zeros(n, m);
        for k in deg..n {
            pu -= pinv.view((0, k * p), (n, p)) * markov(k, deg);
        }
        for (col, &var) in part.outputs.iter().enumerate() {
            xk.set_column(var, &py.column(col));
        }
        for (col, &var) in part.inputs.iter().enumerate() {
            xk.set_column(var, &pu.column(col));
        }
        coeffs.push(rows_of(&xk));
    }
    Ok(StateMap { coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::ratio;

    fn ex1_kernel() -> PolyMatrix {
        PolyMatrix::from_ints(&[&[&[1, 2, 1], &[-1, -3, -2]]])
    }

    fn u_then_y() -> IoPartition {
        IoPartition { inputs: vec![0], outputs: vec![1] }
    }

    #[test]
    fn observer_form_of_first_example() {
        let ss = realize(&ex1_kernel(), &u_then_y()).unwrap();
        let expect = StateSpace::from_rows(
            &[&[0.0, -0.5], &[1.0, -1.5]],
            &[&[-0.5], &[-0.5]],
            &[&[0.0, -0.5]],
            &[&[0.5]],
        )
        .unwrap();
        assert_eq!(ss, expect);
        let g0 = ss.transfer_eval(Complex64::new(0.0, 0.0)).unwrap();
        assert!((g0[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        let mut eig: Vec<f64> = linalg::eigenvalues_real(&ss.a).iter().map(|z| z.re).collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((eig[0] + 1.0).abs() < 1e-12 && (eig[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn static_kernel_has_no_states() {
        let r = PolyMatrix::from_ints(&[&[&[1], &[-1]]]);
        let ss = realize(&r, &u_then_y()).unwrap();
        assert_eq!(ss.n(), 0);
        assert_eq!(ss.d[(0, 0)], 1.0);
    }

    #[test]
    fn rlc_kernel_transfer() {
        // (ξ+2)² y = 2(ξ+2) u
        let r = PolyMatrix::from_ints(&[&[&[-4, -2], &[4, 4, 1]]]);
        let ss = realize(&r, &u_then_y()).unwrap();
        let reference = StateSpace::from_rows(
            &[&[0.0, -1.0], &[4.0, -4.0]],
            &[&[1.0], &[2.0]],
            &[&[0.0, 1.0]],
            &[&[0.0]],
        )
        .unwrap();
        for s in [Complex64::new(1.0, 0.0), Complex64::new(0.3, 2.0)] {
            let a = ss.transfer_eval(s).unwrap();
            let b = reference.transfer_eval(s).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
        assert!(ss.is_observable(1e-10));
    }

    #[test]
    fn improper_and_singular_partitions() {
        let r = PolyMatrix::from_ints(&[&[&[0, 0, 1], &[1]]]);
        assert!(matches!(realize(&r, &u_then_y()), Err(Error::ImproperTransfer)));
        let r = PolyMatrix::from_ints(&[&[&[1], &[]]]);
        assert!(matches!(realize(&r, &u_then_y()), Err(Error::SingularOutputBlock)));
    }

    #[test]
    fn row_reduction_handles_dependent_leading_rows() {
        // P = [[ξ, ξ], [ξ+1, ξ]] has singular leading matrix
        let r = PolyMatrix::from_ints(&[
            &[&[1], &[0, 1], &[0, 1]],
            &[&[], &[1, 1], &[0, 1]],
        ]);
        let part = IoPartition { inputs: vec![0], outputs: vec![1, 2] };
        let ss = realize(&r, &part).unwrap();
        assert_eq!(ss.n(), r.select_cols(&[1, 2]).det().unwrap().degree().unwrap());
        let s = Complex64::new(0.7, 0.4);
        let g = ss.transfer_eval(s).unwrap();
        let r2 = r.select_cols(&[1, 2]).eval(s);
        let r1 = r.select_cols(&[0]).eval(s);
        let direct = -linalg::solve_c(&r2, &r1).unwrap();
        assert!((g - direct).norm() < 1e-10);
    }

    #[test]
    fn feedthrough_examples() {
        let m = PolyMatrix::from_ints(&[&[&[1, 2]], &[&[1, 1]]]);
        let part = IoPartition { inputs: vec![0], outputs: vec![1] };
        assert_eq!(feedthrough(&m, &part).unwrap()[(0, 0)], rat_to_f64(&ratio(1, 2)));
        let m = PolyMatrix::from_ints(&[&[&[1]], &[&[]]]);
        assert_eq!(feedthrough(&m, &part).unwrap()[(0, 0)], 0.0);
        let m = PolyMatrix::from_ints(&[&[&[1]], &[&[0, 1]]]);
        assert!(matches!(feedthrough(&m, &part), Err(Error::ImproperTransfer)));
    }

    #[test]
    fn kalman_examples() {
        let ss = StateSpace::from_rows(
            &[&[0.0, -1.0], &[4.0, -4.0]],
            &[&[1.0], &[2.0]],
            &[&[0.0, 1.0]],
            &[&[0.0]],
        )
        .unwrap();
        let kf = ss.kalman(1e-10);
        assert_eq!((kf.n_c, kf.n_u), (1, 1));
        assert!((kf.a_u[(0, 0)] + 2.0).abs() < 1e-10);
        let back = &kf.t * kf.transformed_a() * kf.t.transpose();
        assert!((back - &ss.a).norm() < 1e-10);

        let zero_b = StateSpace::new(ss.a.clone(), RMat::zeros(2, 1), ss.c.clone(), ss.d.clone()).unwrap();
        let kf = zero_b.kalman(1e-10);
        assert_eq!(kf.n_c, 0);
        assert!((&kf.a_u - &ss.a).norm() < 1e-12);
    }

    #[test]
    fn transfer_eval_errors_at_poles() {
        let ss = StateSpace::from_rows(&[&[-1.0]], &[&[1.0]], &[&[1.0]], &[&[0.0]]).unwrap();
        assert!(matches!(ss.transfer_eval(Complex64::new(-1.0, 0.0)), Err(Error::PoleEvaluation(_))));
    }

    #[test]
    fn state_map_reproduces_exponential_trajectories() {
        let r = ex1_kernel();
        let part = u_then_y();
        let ss = realize(&r, &part).unwrap();
        let xm = state_map(&ss, &part).unwrap();
        for s in [Complex64::new(0.3, 0.0), Complex64::new(-0.2, 1.1)] {
            // w0 in ker R(s)
            let rs = r.eval(s);
            let w0 = nalgebra::DVector::from_vec(vec![-rs[(0, 1)], rs[(0, 0)]]);
            let x = xm.eval(s) * &w0;
            let u = w0.rows(0, 1).into_owned();
            let y = w0.rows(1, 1).into_owned();
            let a = linalg::to_complex(&ss.a);
            let lhs = &x * s - &a * &x - linalg::to_complex(&ss.b) * &u;
            assert!(lhs.norm() < 1e-10 * (1.0 + w0.norm()));
            let out = linalg::to_complex(&ss.c) * &x + linalg::to_complex(&ss.d) * &u - y;
            assert!(out.norm() < 1e-10 * (1.0 + w0.norm()));
        }
    }

    #[test]
    fn json_round_trip() {
        let ss = StateSpace::from_rows(&[&[0.0, -1.0], &[4.0, -4.0]], &[&[1.0], &[2.0]], &[&[0.0, 1.0]], &[&[0.0]]).unwrap();
        let s = serde_json::to_string(&ss).unwrap();
        let back: StateSpace = serde_json::from_str(&s).unwrap();
        assert_eq!(back, ss);
        let bare: StateSpace = serde_json::from_str(r#"{"A":[[-1]],"B":[[1]],"C":[[1]],"D":[[0]]}"#).unwrap();
        assert_eq!(bare.n(), 1);
    }
}
