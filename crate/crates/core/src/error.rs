use thiserror::Error;

/// Failures raised by the algebraic and numerical routines.
///
/// Several variants correspond to a violated hypothesis of the dissipativity
/// theorem rather than to a programming error; [`crate::riccati::certify`] turns
/// those into refusal reports instead of propagating them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("behavior is not controllable")]
    NotControllable,
    #[error("matrix is not unimodular")]
    NotUnimodular,
    #[error("supply rate matrix is singular or not symmetric")]
    SingularSigma,
    #[error("input cardinality {m} exceeds positive signature {sigma_plus}")]
    InputCardinalityExceeded { m: usize, sigma_plus: usize },
    #[error("transfer function is not proper for this partition")]
    ImproperTransfer,
    #[error("output block of the kernel representation is singular")]
    SingularOutputBlock,
    #[error("evaluation point {0} is a pole")]
    PoleEvaluation(String),
    #[error("I + D^T J D is not positive definite (min eigenvalue {0:e})")]
    StrictnessViolated(f64),
    #[error("J + D D^T is singular")]
    SingularJdd,
    #[error("P M - M^* P residual {0:e} exceeds tolerance")]
    SelfAdjointnessFailed(f64),
    #[error("rank decisions are unstable at the requested tolerance")]
    IllConditioned,
    #[error("unmixing violated: uncontrollable modes {0} and {1} are mirror images")]
    UnmixingViolated(String, String),
    #[error("odd partial multiplicities {sizes:?} at real eigenvalue {eigenvalue} of M")]
    OddMultiplicity { eigenvalue: String, sizes: Vec<usize> },
    #[error("subspace is not P-neutral (residual {0:e})")]
    NeutralityFailed(f64),
    #[error("invariant subspace is not a graph subspace (cond(X1) = {0:e})")]
    NotGraphSubspace(f64),
    #[error("storage matrix is not Hermitian (relative defect {0:e})")]
    NonHermitian(f64),
    #[error("storage matrix is not real (relative imaginary part {0:e})")]
    NonReal(f64),
    #[error("strict dissipativity not verified: {0}")]
    StrictnessNotVerified(String),
    #[error("(C, A) is not observable")]
    NotObservable,
    #[error("spectrum mismatch: {0}")]
    SpectrumMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Short stable identifier used in reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonSquare { .. } => "non_square",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::NotControllable => "not_controllable",
            Error::NotUnimodular => "not_unimodular",
            Error::SingularSigma => "singular_sigma",
            Error::InputCardinalityExceeded { .. } => "input_cardinality_exceeded",
            Error::ImproperTransfer => "improper_transfer",
            Error::SingularOutputBlock => "singular_output_block",
            Error::PoleEvaluation(_) => "pole_evaluation",
            Error::StrictnessViolated(_) => "strictness_violated",
            Error::SingularJdd => "singular_jdd",
            Error::SelfAdjointnessFailed(_) => "self_adjointness_failed",
            Error::IllConditioned => "ill_conditioned",
            Error::UnmixingViolated(..) => "unmixing_violated",
            Error::OddMultiplicity { .. } => "odd_multiplicity",
            Error::NeutralityFailed(_) => "neutrality_failed",
            Error::NotGraphSubspace(_) => "not_graph_subspace",
            Error::NonHermitian(_) => "non_hermitian",
            Error::NonReal(_) => "non_real",
            Error::StrictnessNotVerified(_) => "strictness_not_verified",
            Error::NotObservable => "not_observable",
            Error::SpectrumMismatch(_) => "spectrum_mismatch",
            Error::InvalidInput(_) => "invalid_input",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
