use thiserror::Error;

/// Errors raised by tensor construction and graph operations.
#[derive(Debug, Clone, Error)]
pub enum TensorError {
    #[error("{op}: shape {lhs:?} is incompatible with {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("{op}: expected rank {expected}, got shape {shape:?}")]
    BadRank {
        op: &'static str,
        expected: usize,
        shape: Vec<usize>,
    },

    #[error("{op}: axis {axis} out of range for shape {shape:?}")]
    BadAxis {
        op: &'static str,
        axis: usize,
        shape: Vec<usize>,
    },

    #[error("permute: {axes:?} is not a permutation of 0..{rank}")]
    BadPermutation { axes: Vec<usize>, rank: usize },

    #[error("reshape: cannot view {from:?} ({from_elems} values) as {to:?} ({to_elems} values)")]
    ReshapeMismatch {
        from: Vec<usize>,
        from_elems: usize,
        to: Vec<usize>,
        to_elems: usize,
    },

    #[error("from_vec: {got} values do not fill shape {shape:?}")]
    DataLength { shape: Vec<usize>, got: usize },

    #[error("{op}: operand list is empty")]
    EmptyOperands { op: &'static str },

    #[error("backward: loss must be a scalar, got shape {shape:?}")]
    NotScalar { shape: Vec<usize> },

    #[error("bce_with_logits: target {value} at index {index} outside [0, 1]")]
    TargetOutOfRange { index: usize, value: f64 },

    #[error("dropout: probability {p} outside [0, 1)")]
    BadDropout { p: f64 },

    #[error("embedding_add: sequence length {seq} exceeds table rows {rows}")]
    EmbeddingTooShort { seq: usize, rows: usize },
}
