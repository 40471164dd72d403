//! Dissipativity of linear differential behaviors that need not be
//! controllable: exact polynomial-matrix algebra, state-space realization,
//! storage functions from neutral invariant subspaces of a Hamiltonian, and
//! the related orthogonality and embedding checks.

pub mod analysis;
pub mod behavior;
pub mod error;
pub mod linalg;
pub mod poly;
pub mod polymat;
mod ratlin;
pub mod realization;
pub mod report;
pub mod riccati;

pub use analysis::{
    cardinality_bounds, embed_both_ways, lossless_obstruction, orthogonality_check, static_part_nonexistence,
    OrthogonalityVerdict, StaticFinding,
};
pub use behavior::{Behavior, IoPartition, ModeSet};
pub use error::{Error, Result};
pub use linalg::{CMat, RMat};
pub use poly::Poly;
pub use polymat::PolyMatrix;
pub use realization::StateSpace;
pub use report::{Report, Status};
pub use riccati::{certify, certify_state_space, CertifyOptions, CertifyOutcome, SupplyRate, TieBreak};
