use thiserror::Error;

/// Errors produced by skeleton construction and sequence transforms.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SkelError {
    #[error("skeleton frame must have {expected} values, got {got}")]
    BadFlatLength { expected: usize, got: usize },

    #[error("joint {joint} has non-finite coordinates ({x}, {y})")]
    NonFiniteJoint { joint: usize, x: f64, y: f64 },

    #[error("joint {joint} confidence {confidence} outside [0, 1]")]
    ConfidenceRange { joint: usize, confidence: f64 },

    #[error("frame rate must be finite and positive, got {fps}")]
    BadFrameRate { fps: f64 },

    #[error("sequence is empty")]
    EmptySequence,

    #[error("sequence of {len} frames is shorter than crop length {crop}")]
    SequenceTooShort { len: usize, crop: usize },

    #[error("pace factor {factor} on {len} frames would leave {out_len} frames (need at least 2)")]
    PaceTooShort { factor: f64, len: usize, out_len: usize },

    #[error("pace range ({lo}, {hi}) is not an ordered positive interval")]
    BadPaceRange { lo: f64, hi: f64 },

    #[error("noise sigma must be finite and non-negative, got {sigma}")]
    BadSigma { sigma: f64 },

    #[error("crop length must be at least 1")]
    ZeroCrop,
}
