//! Benchmark inputs: the first worked example and families that grow with a
//! size parameter.

use dissip_core::{Behavior, IoPartition, PolyMatrix, RMat, StateSpace};

pub fn diag(v: &[f64]) -> RMat {
    RMat::from_diagonal(&nalgebra::DVector::from_vec(v.to_vec()))
}

/// `(ξ²+2ξ+1) w₁ = (ξ²+3ξ+2) w₂` with `w₁` the input.
pub fn first_example() -> Behavior {
    Behavior::kernel(PolyMatrix::from_ints(&[&[&[1, 2, 1], &[-1, -3, -2]]]))
        .with_io(IoPartition { inputs: vec![0], outputs: vec![1] })
        .expect("valid partition")
}

/// A damped mass-spring ladder with `n` states, driven at one end and
/// observed at the other, scaled to an H∞ gain well below one.
pub fn ladder(n: usize) -> StateSpace {
    let a = RMat::from_fn(n, n, |i, j| match i as isize - j as isize {
        0 => -2.0,
        1 | -1 => 0.8,
        _ => 0.0,
    });
    let mut b = RMat::zeros(n, 1);
    b[(0, 0)] = 1.0;
    let mut c = RMat::zeros(1, n);
    c[(0, n - 1)] = 0.2;
    StateSpace::new(a, b, c, RMat::zeros(1, 1)).expect("consistent shapes")
}

/// A `k×(k+1)` kernel `diag((ξ+1), (ξ+1)², …)·[I | 1]` with `k` nontrivial
/// invariant factors, for the exact Smith reduction.
pub fn staircase_kernel(k: usize) -> PolyMatrix {
    let l = PolyMatrix::from_fn(k, k, |i, j| {
        if i == j {
            (0..=i).fold(dissip_core::Poly::from_ints(&[1]), |acc, _| &acc * &dissip_core::Poly::from_ints(&[1, 1]))
        } else {
            dissip_core::Poly::zero()
        }
    });
    let r0 = PolyMatrix::from_fn(k, k + 1, |i, j| dissip_core::Poly::from_ints(&[(i == j || j == k) as i64]));
    l.mul(&r0).expect("conformable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use dissip_core::{certify, certify_state_space};

    #[test]
    fn inputs_are_certifiable() {
        assert!(certify(&first_example(), &diag(&[1.0, -1.0]), &Default::default()).unwrap().is_dissipative());
        for n in [2, 4, 8, 16] {
            let out = certify_state_space(&ladder(n), &-RMat::identity(1, 1), &Default::default()).unwrap();
            assert!(out.is_dissipative(), "n = {n}: {:?}", out.refusal);
        }
        for k in 1..=4 {
            assert_eq!(staircase_kernel(k).smith_form().nontrivial_factors().len(), k);
        }
    }
}
