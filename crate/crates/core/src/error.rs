use thiserror::Error;

/// Errors produced by state construction, protocol setup and the numerical
/// operations built on top of them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("matrix is not positive semidefinite: {0}")]
    NotPositiveSemidefinite(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("invalid context: {0}")]
    InvalidContext(String),

    #[error("steering infeasible: {0}")]
    SteeringInfeasible(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("invalid bit string: {0}")]
    InvalidBitString(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("internal invariant violated: {0}")]
    InvariantViolated(String),
}

pub type Result<T> = core::result::Result<T, Error>;
