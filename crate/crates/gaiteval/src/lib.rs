//! Recognition and attribute metrics for gait embeddings: gallery–probe
//! rank-1 accuracy, the cross-view condition × angle protocol grid, gender
//! precision/recall/F1, per-attribute R², and a forward-pass timing
//! benchmark across the three encoder sizes.
//!
//! All metrics are pure functions over [`LabeledEmbedding`] lists or
//! tensors; CSV rendering helpers cover the two tabular outputs.

mod bench;
mod casia;
mod embedding;
mod error;
mod gender;
mod r2;
mod rank;

pub use bench::{
    bench_csv, bench_inference, estimated_forward_bytes, quoted_params, BenchOptions,
    BenchmarkResult, QUOTED_PARAM_COUNTS,
};
pub use casia::{casia_protocol, nm_gallery, CasiaTable, CASIA_ANGLES};
pub use embedding::{Condition, LabeledEmbedding};
pub use error::EvalError;
pub use gender::{gender_metrics, ClassMetrics, GenderReport};
pub use r2::{mean_defined, r2_scores};
pub use rank::{nearest, rank1};
