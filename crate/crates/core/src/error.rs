use thiserror::Error;

/// Failure categories shared by every module of the crate.
///
/// The CLI maps these onto process exit codes, so the variants are coarse on
/// purpose: configuration problems, misuse of an API, physics-domain
/// violations, and the two ways a numerical run can go wrong.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("data integrity error: {0}")]
    Integrity(String),

    #[error("numerical instability at t = {time}: {detail}")]
    Instability { time: f64, detail: String },

    #[error("no convergence after {steps} steps (last energy change {last_delta:e})")]
    Convergence { steps: usize, last_delta: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
