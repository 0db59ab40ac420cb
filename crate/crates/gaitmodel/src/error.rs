use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    BadConfig(String),
    #[error("batch is empty")]
    EmptyBatch,
    #[error("sequence length {t} exceeds the positional table length {max_t}")]
    SequenceTooLong { t: usize, max_t: usize },
    #[error("sequence has {len} frames but embedding requires at least {needed}")]
    SequenceTooShort { len: usize, needed: usize },
    #[error("input has {got} features per frame, expected {expected}")]
    BadInputDim { expected: usize, got: usize },
    #[error("input must be a [batch, time, features] tensor, got shape {0:?}")]
    BadInputRank(Vec<usize>),
    #[error(transparent)]
    Tensor(#[from] tensorad::TensorError),
    #[error(transparent)]
    Skeleton(#[from] skelcore::SkelError),
    #[error(transparent)]
    Archive(#[from] tensorad::ArchiveError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error("bad model card: {0}")]
    BadCard(String),
}
