//! Storage functions for dissipative behaviors through Hamiltonian
//! invariant subspaces.

pub mod certify;
pub mod hamiltonian;
pub mod popov;
pub mod subspace;
pub mod supply;

pub use certify::{certify, certify_state_space, solve_storage, CertifyOptions, CertifyOutcome, StorageCertificate};
pub use hamiltonian::{
    build_hamiltonian, build_tilde, spectrum_identity_check, strictness_at_infinity, verify_certificate,
    HamiltonianData, SpectrumReport, Tilde,
};
pub use popov::{controllable_dissipativity, default_grid, PopovVerdict};
pub use subspace::{build_cset, extract_k, neutral_invariant_subspace, partial_multiplicities, CSet, Spectrum, TieBreak};
pub use supply::{canonicalize_supply, SupplyRate};
