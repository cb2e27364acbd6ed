use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate minimal sample: {0}")]
    DegenerateSample(String),

    #[error("column index {index} out of range for {m} columns")]
    IndexOutOfRange { index: usize, m: usize },

    #[error("empty column selection")]
    EmptyColumnSet,

    #[error("duplicate column index {0}")]
    DuplicateIndex(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("problem with {d} variables exceeds the exhaustive limit of {limit}")]
    TooLarge { d: usize, limit: usize },

    #[error("pruning stalled with {} surviving columns", survivors.len())]
    StalledPruning { survivors: Vec<usize>, round: usize },

    #[error("empty model selection")]
    EmptySelection,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("no non-degenerate sample after {0} consecutive draws")]
    ExhaustedRedraws(usize),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Solver guard violations, as opposed to bad input data.
    pub fn is_solver_guard(&self) -> bool {
        matches!(self, Error::TooLarge { .. } | Error::StalledPruning { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
