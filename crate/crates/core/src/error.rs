use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("step function has {values} values for {cells} cells")]
    ValueCount { cells: usize, values: usize },

    #[error("partition mismatch: {0}")]
    PartitionMismatch(String),

    #[error("truncation mismatch: {left} vs {right}")]
    TruncationMismatch { left: usize, right: usize },

    #[error("domain error: {0}")]
    Domain(String),

    /// `1 - i*lambda_k` sits on the branch cut of the principal logarithm.
    #[error("cell {cell}: 1 - i*lambda = {value} lies on the branch cut of log")]
    BranchCut { cell: usize, value: String },

    #[error("singular element: constant coefficient is zero ({0})")]
    Singular(String),

    #[error("inner series has nonzero constant term {0}")]
    NonzeroConstantTerm(f64),

    #[error("truncation loss {loss:e} exceeds bound {bound:e} at t = {t}")]
    TruncationLoss { t: f64, loss: f64, bound: f64 },

    #[error("invalid multi-index: {0}")]
    InvalidMultiIndex(String),

    #[error("io: {0}")]
    Io(String),

    #[error("json: {0}")]
    Json(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
