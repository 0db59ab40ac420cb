//! Minimal dense-tensor engine with reverse-mode automatic differentiation.
//!
//! The design is a flat tape: [`Graph`] owns every node's value and gradient,
//! ops append nodes and record what they need for the reverse pass, and
//! [`Graph::backward`] walks the tape once in reverse creation order.
//! Everything is `f64` and row-major.
//!
//! The op set is the minimal closure needed for a pre-norm transformer
//! encoder and its contrastive / attribute losses: matmul (optionally
//! batched), elementwise arithmetic, broadcasts over rows and columns,
//! reductions, softmax, layer norm, GELU, row normalization, positional
//! table addition, dropout, and a fused logit-space BCE.
//!
//! Determinism: given the same inputs and seeds, every op — including the
//! parallel matmul, whose threads own disjoint output rows — produces
//! bit-identical results. Gradients accumulate across [`Graph::backward`]
//! calls until [`Graph::zero_grads`], so two backward passes double them.
//!
//! [`grad_check`] validates any scalar-loss graph against central finite
//! differences, and [`save_archive`]/[`load_archive`] provide a versioned
//! named-tensor file format used for checkpoints.

mod archive;
mod error;
mod gradcheck;
mod graph;
mod tensor;

pub use archive::{load_archive, save_archive, ArchiveError};
pub use error::TensorError;
pub use gradcheck::{grad_check, GradCheckOptions, GradCheckReport, TensorCheck};
pub use graph::{Graph, Var, L2_NORM_FLOOR};
pub use tensor::Tensor;
