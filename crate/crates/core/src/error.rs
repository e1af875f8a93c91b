use thiserror::Error;

/// Errors surfaced by the library. `InvalidConfig` and `Io` are caller
/// mistakes; `Invariant` means an internal consistency check failed.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid mode index {0}: must be in [-14,-1] or [2,80]")]
    InvalidMode(i32),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("reference coverage violation: missing indices [{missing_lo}, {missing_hi}]")]
    RefCoverage { missing_lo: i64, missing_hi: i64 },
    #[error("adder graph does not cover fundamental {0}")]
    MissingFundamental(u64),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("input error: {0}")]
    Input(String),
    #[error("internal invariant violation: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
