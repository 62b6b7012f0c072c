//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LitError {
    #[error("orbital index {index} out of range for basis of size {n_sp}")]
    IndexOutOfRange { index: usize, n_sp: usize },

    #[error("operator index set must be strictly ascending: {0:?}")]
    NonAscendingIndices(Vec<usize>),

    #[error("particle number {a} exceeds basis size {n_sp}")]
    EmptySpace { a: usize, n_sp: usize },

    #[error("configuration {word:#b} not present in the configuration space")]
    ConfigNotInSpace { word: u64 },

    #[error("state vectors belong to different configuration spaces")]
    SpaceMismatch,

    #[error("transition {from:#b} -> {to:#b} leaves the M_J-filtered space (Hamiltonian breaks the block symmetry)")]
    SymmetryEscape { from: u64, to: u64 },

    #[error("parse error in {path} line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("monomial rank mismatch: |Q| = {nq} but |P| = {np}")]
    RankMismatch { nq: usize, np: usize },

    #[error("conjugate monomial values conflict beyond tolerance: {0}")]
    HermitizeConflict(String),

    #[error("Hamiltonian matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("dimension {dim} exceeds the dense-solver cap {cap}")]
    DimCapExceeded { dim: usize, cap: usize },

    #[error("sigma_I must be positive (got {0})")]
    NonPositiveSigmaI(f64),

    #[error("non-finite amplitude encountered during Chebyshev recursion (rescaling failure?)")]
    NonFiniteAmplitude,

    #[error("Lorentz integral at truncation {needed} requires moments up to order {required}, only {available} available")]
    InsufficientMoments {
        needed: usize,
        required: usize,
        available: usize,
    },

    #[error("block-encoding contract violated: |<O,0|W^k|O,0> - mu_k| = {0:.3e}")]
    ContractViolation(f64),

    #[error("Hadamard-test probability {0} outside [0,1]: moment bound violated upstream")]
    ProbabilityOutOfRange(f64),

    #[error("two new peaks at {e1:.4} and {e2:.4} MeV are closer than sigma_I = {sigma_i}; reduce sigma_I")]
    PeaksTooClose { e1: f64, e2: f64, sigma_i: f64 },

    #[error("continuum part below -{0:.3e} at sigma_R = {1:.3}: bound-state inputs inconsistent")]
    NegativeContinuum(f64, f64),

    #[error("inversion unstable, widen sigma_R range or adjust beta (no plateau up to m_max = {0})")]
    InversionUnstable(usize),

    #[error("quadrature failed to converge on [{0:.3}, {1:.3}]")]
    QuadratureFailure(f64, f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LitError>;
