use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("incomplete result grid, missing cells: {}", .0.join(", "))]
    IncompleteGrid(Vec<String>),
    #[error("run diverged: {0}")]
    Divergence(String),
    #[error(transparent)]
    Core(#[from] adaselection::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl BenchError {
    /// Process exit code: 2 for config or input parse errors, 3 for a diverged single run.
    pub fn exit_code(&self) -> i32 {
        use adaselection::Error as Core;
        match self {
            BenchError::Config(_) | BenchError::IncompleteGrid(_) | BenchError::Json(_) | BenchError::Csv(_) => 2,
            BenchError::Divergence(_) => 3,
            BenchError::Core(e) => match e {
                Core::Divergence => 3,
                Core::Io(_) => 1,
                _ => 2,
            },
            BenchError::Io(_) => 1,
        }
    }
}
