//! A transformer encoder over normalized skeleton sequences.
//!
//! Each frame's 18 joints flatten to a 54-value token, which an input
//! projection lifts to `d_model`. A learnable positional table is added,
//! a stack of pre-norm residual blocks (multi-head self-attention, then a
//! GELU feed-forward) transforms the sequence, and mean pooling over time
//! plus a final linear layer yields the identity embedding. Two light
//! heads hang off that embedding: a projection for contrastive training
//! and appearance logits for 42 pedestrian attributes.
//!
//! Three standard depths are provided (SM/MD/XL at 4/8/12 layers); all
//! other dimensions are shared. Forward passes build onto a caller-owned
//! [`tensorad::Graph`], so the same code path serves training (backward
//! through the graph) and inference ([`GaitModel::embed`], which crops,
//! encodes, and L2-normalizes). Checkpoints pair a named-tensor archive
//! with a TOML model card recording the configuration and provenance.

mod checkpoint;
mod config;
mod error;
mod model;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointPaths, ModelCard};
pub use config::{ModelConfig, ModelSize};
pub use error::ModelError;
pub use model::{param_count, param_shapes, ForwardOutput, GaitModel, ParamVars, INIT_STD};
