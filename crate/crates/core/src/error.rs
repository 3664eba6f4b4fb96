use alloc::vec::Vec;

/// Failure modes shared by every engine component.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("covariance factorization failed (jitter levels tried: {tried:?})")]
    NumericalFailure { tried: Vec<f64> },
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate data: {0}")]
    DegenerateData(&'static str),
    #[error("response episode is already complete")]
    EpisodeComplete,
    #[error("world state is terminal (collision latched)")]
    TerminalState,
}

pub type Result<T> = core::result::Result<T, Error>;
