use alloc::string::String;

/// Errors raised by the samplers and their building blocks.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A distribution or model parameter lies outside its domain.
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    /// Every candidate in a categorical draw had zero (or NaN) weight.
    #[error("degenerate likelihood: all allocation weights vanish")]
    DegenerateLikelihood,
    #[error("trace is constant; effective sample size is undefined")]
    ConstantTrace,
    #[error("trace too short: need at least {needed} values, got {got}")]
    TraceTooShort { needed: usize, got: usize },
    #[error("mixture density is zero at observation {0}")]
    ZeroDensity(usize),
    #[error("density realizations are not on a common grid")]
    MismatchedGrid,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::ParameterDomain(msg.into())
}
