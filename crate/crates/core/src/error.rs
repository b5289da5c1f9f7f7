use thiserror::Error;

#[derive(Debug, Error)]
pub enum TedError {
    #[error("no instances")]
    NoInstances,
    #[error("instance {index} has no explanation")]
    MissingExplanation { index: usize },
    #[error("instance {index} carries an explanation but the dataset is explanation-free")]
    UnexpectedExplanation { index: usize },
    #[error("unknown (label, explanation) pair ({label}, {explanation})")]
    UnknownPair { label: String, explanation: String },
    #[error("composite id {id} out of range (codec has {len} composites)")]
    CompositeOutOfRange { id: usize, len: usize },
    #[error("explanations do not determine labels")]
    NotFunctional,
    #[error("explanation {0} was never observed when the codec was fit")]
    UnknownExplanation(String),
    #[error("illegal board: {0}")]
    IllegalBoard(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dataset too small: {got} instances, need at least {need}")]
    TooSmall { got: usize, need: usize },
    #[error("malformed dataset: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = TedError> = std::result::Result<T, E>;
