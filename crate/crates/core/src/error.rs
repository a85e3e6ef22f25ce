use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid element {value} for the {semiring} semiring")]
    InvalidElement { value: f64, semiring: &'static str },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("zero vector: {0}")]
    ZeroVector(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("family mismatch: {0}")]
    FamilyMismatch(String),

    /// The semi-scalar product needs `[[1 (+) 1]] != 2`; the sum-stable
    /// alpha = 1 (Cauchy) case violates this.
    #[error("semi-scalar product undefined: [[1 (+) 1]] - 2 = 0 for {0}")]
    DegenerateDenominator(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("empty model")]
    EmptyModel,

    /// A search that is guaranteed to succeed did not. Always a bug.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
