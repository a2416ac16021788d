use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error(
        "insufficient oversampling: N = {n} leaves M = {m} out-of-band bins (N_omega = {n_omega})"
    )]
    InsufficientOversampling { n: usize, n_omega: usize, m: i64 },

    #[error("runaway folding: {folds} folds registered (cap {cap}) near t = {time}")]
    RunawayFolds { folds: usize, cap: usize, time: f64 },

    #[error("support of size {support} exceeds the {rows} available rows")]
    SupportTooLarge { support: usize, rows: usize },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
