use thiserror::Error;

/// Errors produced by pipeline stages and their file formats.
#[derive(Debug, Error)]
pub enum PipeError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("no detections: input contained zero valid lines")]
    NoDetections,
    #[error("bad bounding box: width {width} and height {height} must be positive and finite")]
    BadBbox { width: f64, height: f64 },
    #[error("bbox_area_ratio {0} outside [0, 1]")]
    BadAreaRatio(f64),
    #[error("frame rate {0} must be finite and positive")]
    BadFps(f64),
    #[error("invalid pipeline config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Skeleton(#[from] skelcore::SkelError),
    #[error("tracklet has {len} frames, need at least 2 to resample")]
    TooShortToResample { len: usize },
    #[error("attribute value {value} for {name} outside [0, 1]")]
    ScoreOutOfRange { name: String, value: f64 },
    #[error("unknown provider attributes: {}", .0.join(", "))]
    UnknownAttributes(Vec<String>),
    #[error("unknown attribute provider {0:?}")]
    UnknownProvider(String),
    #[error("invalid attribute schema: {0}")]
    BadSchema(String),
    #[error("attribute vector has {got} values, expected {expected}")]
    WrongAttributeCount { expected: usize, got: usize },
    #[error("no crops supplied for attribute fusion")]
    EmptyCrops,
    #[error("crop weights sum to zero")]
    ZeroTotalWeight,
    #[error("scores file line {line}: {reason}")]
    BadScoresLine { line: usize, reason: String },
    #[error("scores reference tracklet {0} which is not in the dataset")]
    UnknownTracklet(u64),
    #[error(
        "tracklet {tracklet}: incomplete annotation, missing crop {crop} augmentation {aug}"
    )]
    MissingScores { tracklet: u64, crop: usize, aug: usize },
    #[error("tracklet {tracklet}: scores reference crop {crop}, but only {n_crops} crops exist")]
    BadCropIndex { tracklet: u64, crop: usize, n_crops: usize },
    #[error("archive line {line}: {reason}")]
    BadArchiveLine { line: usize, reason: String },
}
