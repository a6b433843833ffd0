use thiserror::Error;

/// Errors raised by the numerical and quantum operations of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semi-definite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("non-finite entry in matrix")]
    NonFinite,

    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("invalid projector family: {0}")]
    InvalidProjectorFamily(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid noise model: {0}")]
    InvalidNoiseModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dilation needs a {0}-dimensional state, budget is {1}")]
    DilationBudget(usize, usize),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by malformed input files rather than by
    /// objects violating a domain invariant.
    pub fn is_parse(&self) -> bool {
        matches!(self, Error::Parse(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
