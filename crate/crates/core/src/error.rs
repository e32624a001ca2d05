use thiserror::Error;

/// Errors produced by tensor algebra, sketching kernels and decompositions.
#[derive(Debug, Error)]
pub enum TuckerError {
    #[error("mode {mode} out of range for tensor of order {order}")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("rank {rank} too large for dimension {dim}")]
    RankTooLarge { rank: usize, dim: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mode {0} appears more than once")]
    DuplicateMode(usize),

    #[error("tensor has zero norm")]
    ZeroTensor,

    #[error("factor {0} is not orthonormal")]
    NotOrthonormal(usize),

    #[error("too few nonzero columns: need {needed}, found {found}")]
    InsufficientSupport { needed: usize, found: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TuckerError>;

pub(crate) fn mismatch(msg: impl Into<String>) -> TuckerError {
    TuckerError::DimensionMismatch(msg.into())
}
