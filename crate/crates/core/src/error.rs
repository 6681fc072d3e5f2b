use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite score")]
    NonFiniteScore,
    #[error("gradient norms unavailable")]
    GradNormsUnavailable,
    #[error("subset exceeds batch: k = {k}, batch size = {batch}")]
    SubsetExceedsBatch { k: usize, batch: usize },
    #[error("no candidates")]
    NoCandidates,
    #[error("method count changed: expected {expected}, got {got}")]
    MethodCountChanged { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("divergence detected")]
    Divergence,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("non-numeric cell at row {row}, column `{column}`: {value:?}")]
    NonNumericCell { row: usize, column: String, value: String },
    #[error("malformed csv: {0}")]
    MalformedCsv(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
