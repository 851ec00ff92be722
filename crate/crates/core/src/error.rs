use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoherenceError {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NonHermitian { deviation: f64 },
    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPsd { eigenvalue: f64 },
    #[error("state is not normalized (norm^2 = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("dimension {0} not supported")]
    BadDim(usize),
    #[error("rank {rank} invalid for dimension {dim}")]
    BadRank { dim: usize, rank: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("Kraus operators are not complete (deviation {deviation:.3e})")]
    IncompleteChannel { deviation: f64 },
    #[error("channel is not incoherent")]
    NotIncoherent,
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("optimizer failed: {0}")]
    OptimizerFailed(String),
    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, CoherenceError>;
