use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gallery is empty")]
    EmptyGallery,

    #[error("probe set is empty")]
    EmptyProbes,

    #[error("{what} is empty")]
    EmptyInput { what: &'static str },

    #[error("embedding has norm {norm} (unit norm required)")]
    NotUnitNorm { norm: f64 },

    #[error("embedding dimension {got} differs from {expected}")]
    DimMismatch { expected: usize, got: usize },

    #[error("embedding of identity {identity} is missing its {what} tag")]
    MissingTag {
        what: &'static str,
        identity: u64,
    },

    #[error("protocol data is missing cells: {}", cells.join(", "))]
    MissingCells { cells: Vec<String> },

    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },

    #[error("score {value} at index {index} is outside [0, 1]")]
    BadScore { index: usize, value: f64 },

    #[error("predictions have shape {predictions:?} but labels have {labels:?}")]
    ShapeMismatch {
        predictions: Vec<usize>,
        labels: Vec<usize>,
    },

    #[error("need at least 2 rows, got {rows}")]
    TooFewRows { rows: usize },

    #[error("bad benchmark request: {0}")]
    BadBench(String),

    #[error(transparent)]
    Model(#[from] gaitmodel::ModelError),
}
