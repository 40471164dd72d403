//! Supply rates `wᵀΣw` and the congruences that bring Σ to signature form.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::behavior::IoPartition;
use crate::error::{Error, Result};
use crate::linalg::{self, RMat};

/// Σ in canonical coordinates `diag(I_m, I_q, −I_p)` together with the
/// output signature `J = diag(I_q, −I_p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupplyRate {
    #[serde(with = "crate::report::rows")]
    pub sigma: RMat,
    pub m: usize,
    pub q: usize,
    pub p: usize,
    #[serde(with = "crate::report::rows")]
    pub j: RMat,
}

impl SupplyRate {
    pub fn sigma_plus(&self) -> usize {
        self.m + self.q
    }

    pub fn sigma_minus(&self) -> usize {
        self.p
    }

    pub fn w(&self) -> usize {
        self.m + self.q + self.p
    }
}

fn check_symmetric(sigma: &RMat) -> Result<()> {
    if !sigma.is_square() {
        return Err(Error::NonSquare { rows: sigma.nrows(), cols: sigma.ncols() });
    }
    let scale = sigma.amax().max(f64::MIN_POSITIVE);
    if (sigma - sigma.transpose()).amax() > 1e-12 * scale {
        return Err(Error::SingularSigma);
    }
    Ok(())
}

fn is_diagonal(s: &RMat) -> bool {
    (0..s.nrows()).all(|i| (0..s.ncols()).all(|j| i == j || s[(i, j)] == 0.0))
}

/// Positive and negative inertia of a nonsingular symmetric matrix.
pub fn inertia(sigma: &RMat) -> Result<(usize, usize)> {
    let (_, signs) = congruence(sigma)?;
    let plus = signs.iter().filter(|&&s| s > 0.0).count();
    Ok((plus, signs.len() - plus))
}

/// `W` with `WᵀΣW = diag(signs)`.
///
/// Diagonal Σ is only rescaled, so coordinates keep their meaning; otherwise
/// the orthonormal eigenvectors are used.
pub fn congruence(sigma: &RMat) -> Result<(RMat, Vec<f64>)> {
    check_symmetric(sigma)?;
    let n = sigma.nrows();
    if is_diagonal(sigma) {
        let scale = sigma.amax();
        let mut w = RMat::zeros(n, n);
        let mut signs = Vec::with_capacity(n);
        for i in 0..n {
            let d = sigma[(i, i)];
            if d.abs() <= 1e-12 * scale || d == 0.0 {
                return Err(Error::SingularSigma);
            }
            w[(i, i)] = 1.0 / d.abs().sqrt();
            signs.push(d.signum());
        }
        return Ok((w, signs));
    }
    let e = SymmetricEigen::new((sigma + sigma.transpose()) * 0.5);
    let lmax = e.eigenvalues.amax();
    if e.eigenvalues.iter().any(|l| l.abs() <= 1e-12 * lmax) {
        return Err(Error::SingularSigma);
    }
    // positives first, each group in increasing eigenvalue order
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        let (la, lb) = (e.eigenvalues[a], e.eigenvalues[b]);
        (la < 0.0).cmp(&(lb < 0.0)).then(la.partial_cmp(&lb).unwrap())
    });
    let w = RMat::from_fn(n, n, |i, j| {
        let k = idx[j];
        e.eigenvectors[(i, k)] / e.eigenvalues[k].abs().sqrt()
    });
    let signs = idx.iter().map(|&k| e.eigenvalues[k].signum()).collect();
    Ok((w, signs))
}

/// Canonical supply rate for a behavior with `m_b` inputs, plus the change of
/// variables `w = W w̃` with `WᵀΣ_rawW = diag(I_{σ₊}, −I_{σ₋})`.
pub fn canonicalize_supply(sigma_raw: &RMat, m_b: usize) -> Result<(SupplyRate, RMat)> {
    let (w0, signs) = congruence(sigma_raw)?;
    let n = signs.len();
    let mut order: Vec<usize> = (0..n).filter(|&i| signs[i] > 0.0).collect();
    let plus = order.len();
    order.extend((0..n).filter(|&i| signs[i] < 0.0));
    if m_b > plus {
        return Err(Error::InputCardinalityExceeded { m: m_b, sigma_plus: plus });
    }
    let w = RMat::from_fn(n, n, |i, j| w0[(i, order[j])]);
    let (q, p) = (plus - m_b, n - plus);
    let mut sigma = RMat::identity(n, n);
    let mut j = RMat::identity(q + p, q + p);
    for k in plus..n {
        sigma[(k, k)] = -1.0;
        j[(k - m_b, k - m_b)] = -1.0;
    }
    Ok((SupplyRate { sigma, m: m_b, q, p, j }, w))
}

/// Congruence respecting an input/output split: `Σ` must be block diagonal
/// with a positive definite input block.
///
/// Returns `(W_u, W_y, J)` with `W_uᵀΣ_uuW_u = I` and `W_yᵀΣ_yyW_y = J`.
pub fn block_congruence(sigma: &RMat, io: &IoPartition) -> Result<(RMat, RMat, RMat)> {
    check_symmetric(sigma)?;
    io.validate(sigma.nrows())?;
    let scale = sigma.amax().max(f64::MIN_POSITIVE);
    for &i in &io.inputs {
        for &o in &io.outputs {
            if sigma[(i, o)].abs() > 1e-12 * scale {
                return Err(Error::InvalidInput("Σ couples inputs and outputs".into()));
            }
        }
    }
    let pick = |rows: &[usize], cols: &[usize]| {
        RMat::from_fn(rows.len(), cols.len(), |a, b| sigma[(rows[a], cols[b])])
    };
    let s_uu = pick(&io.inputs, &io.inputs);
    let s_yy = pick(&io.outputs, &io.outputs);
    let w_u = if s_uu.is_empty() {
        s_uu.clone()
    } else {
        linalg::spd_inv_sqrt(&s_uu).ok_or_else(|| {
            Error::InvalidInput("Σ restricted to the inputs is not positive definite".into())
        })?
    };
    let (w_y, signs) = if s_yy.is_empty() { (s_yy.clone(), Vec::new()) } else { congruence(&s_yy)? };
    let j = RMat::from_diagonal(&nalgebra::DVector::from_vec(signs));
    Ok((w_u, w_y, j))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> RMat {
        RMat::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    #[test]
    fn diag_supply() {
        let (s, w) = canonicalize_supply(&m(&[&[1.0, 0.0], &[0.0, -1.0]]), 1).unwrap();
        assert_eq!((s.m, s.q, s.p), (1, 0, 1));
        assert_eq!(s.j, m(&[&[-1.0]]));
        assert_eq!(w, RMat::identity(2, 2));
    }

    #[test]
    fn identity_supply_has_empty_j() {
        let (s, _) = canonicalize_supply(&RMat::identity(2, 2), 2).unwrap();
        assert_eq!((s.m, s.q, s.p), (2, 0, 0));
        assert_eq!(s.j.shape(), (0, 0));
    }

    #[test]
    fn permutation_form_uses_eigenvectors() {
        let sig = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let (s, w) = canonicalize_supply(&sig, 1).unwrap();
        assert_eq!((s.m, s.q, s.p), (1, 0, 1));
        let c = w.transpose() * &sig * &w;
        assert!((c - m(&[&[1.0, 0.0], &[0.0, -1.0]])).amax() < 1e-12);
    }

    #[test]
    fn scaled_diagonal_keeps_order() {
        let sig = m(&[&[-4.0, 0.0], &[0.0, 9.0]]);
        let (w, signs) = congruence(&sig).unwrap();
        assert_eq!(signs, vec![-1.0, 1.0]);
        assert!((w[(0, 0)] - 0.5).abs() < 1e-15 && (w[(1, 1)] - 1.0 / 3.0).abs() < 1e-15);
        let (s, w) = canonicalize_supply(&sig, 1).unwrap();
        let c = w.transpose() * &sig * &w;
        assert!((c - &s.sigma).amax() < 1e-12);
    }

    #[test]
    fn errors() {
        assert_eq!(canonicalize_supply(&m(&[&[1.0, 0.0], &[0.0, 0.0]]), 0), Err(Error::SingularSigma));
        assert_eq!(canonicalize_supply(&m(&[&[1.0, 1.0], &[1.0, 1.0]]), 0), Err(Error::SingularSigma));
        assert_eq!(canonicalize_supply(&m(&[&[1.0, 2.0], &[0.0, 1.0]]), 0), Err(Error::SingularSigma));
        assert_eq!(
            canonicalize_supply(&m(&[&[1.0, 0.0], &[0.0, -1.0]]), 2),
            Err(Error::InputCardinalityExceeded { m: 2, sigma_plus: 1 })
        );
    }

    #[test]
    fn block_split() {
        let sig = m(&[&[-1.0, 0.0, 0.0], &[0.0, 4.0, 0.0], &[0.0, 0.0, 2.0]]);
        let io = IoPartition { inputs: vec![1], outputs: vec![0, 2] };
        let (wu, wy, j) = block_congruence(&sig, &io).unwrap();
        assert!((wu[(0, 0)] - 0.5).abs() < 1e-15);
        assert_eq!(j, m(&[&[-1.0, 0.0], &[0.0, 1.0]]));
        let syy = m(&[&[-1.0, 0.0], &[0.0, 2.0]]);
        assert!((wy.transpose() * syy * &wy - &j).amax() < 1e-12);
        let bad = IoPartition { inputs: vec![0], outputs: vec![1, 2] };
        assert!(block_congruence(&sig, &bad).is_err());
    }
}
