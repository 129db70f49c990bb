use thiserror::Error;

/// Errors produced by the lab's construction and evaluation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: usize, limit: usize },

    /// A linear-domain aggregate exceeded the f64 range. The log of the
    /// value is still available.
    #[error("value exceeds f64 range; log of value is {log_value}")]
    Overflow { log_value: f64 },

    /// A selection feasibility inequality failed at the stated `d`.
    /// `min_k` is the smallest m/sigma^2 that would satisfy it.
    #[error("infeasible at d={d}: {inequality} (requires m/sigma^2 >= {min_k:.6e})")]
    InfeasibleSelection {
        d: usize,
        inequality: String,
        min_k: f64,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("retry budget exhausted after {0} candidate draws")]
    RetryBudget(usize),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
