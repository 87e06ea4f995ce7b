use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix has non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:e} exceeds {limit:e})")]
    NonHermitian { asymmetry: f64, limit: f64 },

    #[error("eigensolver failed: {0}")]
    SolverFailure(String),

    #[error("negative eigenvalue {value:e} below -{tol:e}")]
    NegativeEigenvalue { value: f64, tol: f64 },

    #[error("trace {trace} differs from 1 by more than {tol:e}")]
    InvalidTrace { trace: f64, tol: f64 },

    #[error("matrix is not positive definite (min eigenvalue {min_eig:e}, required > {tol:e})")]
    NotPositiveDefinite { min_eig: f64, tol: f64 },

    #[error("invalid state at x = {x:?}: {reason}")]
    DomainViolation { x: Vec<f64>, reason: String },

    #[error("point x = {x:?} is within {required:e} of the domain boundary (distance {distance:e})")]
    BoundaryPoint { x: Vec<f64>, distance: f64, required: f64 },

    #[error("finite-difference step {step:e} is below the roundoff floor {floor:e}")]
    StepTooSmall { step: f64, floor: f64 },

    #[error("inconsistent jet: {0}")]
    JetInconsistent(String),

    #[error("invalid jet: {0}")]
    InvalidJet(String),

    #[error("state is not PSD on the step ladder: {0}")]
    NotPsdOnLadder(String),

    #[error("precondition failed: {0}")]
    PreconditionFail(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonFinite { .. } => "NonFinite",
            Error::NotSquare { .. } => "NotSquare",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::NonHermitian { .. } => "NonHermitian",
            Error::SolverFailure(_) => "SolverFailure",
            Error::NegativeEigenvalue { .. } => "NegativeEigenvalue",
            Error::InvalidTrace { .. } => "InvalidTrace",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::DomainViolation { .. } => "DomainViolation",
            Error::BoundaryPoint { .. } => "BoundaryPoint",
            Error::StepTooSmall { .. } => "StepTooSmall",
            Error::JetInconsistent(_) => "JetInconsistent",
            Error::InvalidJet(_) => "InvalidJet",
            Error::NotPsdOnLadder(_) => "NotPsdOnLadder",
            Error::PreconditionFail(_) => "PreconditionFail",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::InvalidModel(_) => "InvalidModel",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
