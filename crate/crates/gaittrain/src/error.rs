use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    BadConfig(String),
    #[error("dataset has {len} tracklets, fewer than the batch size {batch_size}")]
    DatasetTooSmall { len: usize, batch_size: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("tracklet {id} has {len} frames, below the {needed}-frame crop")]
    TrackletTooShort { id: u64, len: usize, needed: usize },
    #[error("tracklet {id} has no attribute annotations, required by this regime")]
    MissingAttributes { id: u64 },
    #[error("anchor {index} has no positive pair in the batch")]
    AnchorWithoutPositive { index: usize },
    #[error("supcon needs at least two views, got {0}")]
    BatchTooSmall(usize),
    #[error("{count} labels for {rows} projection rows")]
    LabelCountMismatch { rows: usize, count: usize },
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
    #[error("target {value} at row {row}, column {col} outside [0, 1]")]
    TargetOutOfRange { row: usize, col: usize, value: f64 },
    #[error("non-finite {component} loss at epoch {epoch}, step {step}")]
    NonFiniteLoss {
        epoch: usize,
        step: usize,
        component: &'static str,
    },
    #[error(transparent)]
    Skeleton(#[from] skelcore::SkelError),
    #[error(transparent)]
    Tensor(#[from] tensorad::TensorError),
    #[error(transparent)]
    Model(#[from] gaitmodel::ModelError),
    #[error(transparent)]
    Pipe(#[from] gaitpipe::PipeError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
