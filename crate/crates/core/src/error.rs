use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sector dimension {dim} exceeds the dense limit {limit}; use the Krylov propagator")]
    Capacity { dim: usize, limit: usize },

    #[error("unsupported system size L = {0}: the perturbative state requires L = 4m + 2")]
    UnsupportedSize(usize),

    #[error("operator breaks particle-hole symmetry: max |[H, PH]| = {0:e}")]
    SymmetryViolation(f64),

    #[error("no eigenstates within {width} of E = {center}")]
    EmptyWindow { center: f64, width: f64 },

    #[error("undefined result: {0}")]
    Undefined(String),

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("Krylov propagation did not converge after {0} sub-steps")]
    Convergence(usize),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
