use thiserror::Error;

/// Errors raised across the design toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Cholesky factorization kept failing after jitter escalation.
    #[error("numerical failure: {context} (n = {n}, max jitter tried = {jitter:e}, min diagonal = {min_diag:e})")]
    NumericalFailure {
        context: String,
        n: usize,
        jitter: f64,
        min_diag: f64,
    },

    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("degenerate point set: {0}")]
    Degenerate(String),

    #[error("unknown name: {0}")]
    Unknown(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
