use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate softmax row")]
    DegenerateSoftmaxRow,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid model config: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate score bundle")]
    DegenerateBundle,

    #[error(
        "bundle too close to boundary: coordinate {index} = {value} is within {margin} of 0 or 1"
    )]
    NearBoundary {
        index: usize,
        value: f64,
        margin: f64,
    },

    #[error("duplicate doc_id {0:?}")]
    DuplicateDocId(String),

    #[error("unknown doc_id {0:?}")]
    UnknownDocId(String),

    #[error("index is empty")]
    EmptyIndex,

    #[error("gold set is empty")]
    EmptyGold,

    #[error("no negatives available after excluding gold {0:?}")]
    NoNegatives(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
