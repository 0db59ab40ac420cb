//! Training for the gait encoder: losses, batch sampling, schedules,
//! optimization, and the pretrain/fine-tune loops.
//!
//! Pretraining is self-supervised over pipeline archives — every tracklet
//! id is treated as its own class — with three regimes: contrastive
//! (supervised contrastive loss over two augmented views per tracklet),
//! attributes (soft binary cross-entropy against the 42-d appearance
//! vectors), and multitask (their weighted sum). The contrastive loss is
//! averaged over anchors and stabilized with a per-anchor max shift, which
//! matters at the default temperature of 0.001 where logits reach ±1000.
//!
//! Optimization is Adam under a triangular cyclical learning rate.
//! Fine-tuning switches to a linear-to-zero schedule with layer-wise
//! learning-rate decay: heads at the base rate, each encoder layer below
//! the top geometrically slower, the input projection and positional
//! table slowest. Runs are reproducible from (config, seed).

mod batch;
mod config;
mod dataset;
mod error;
mod loss;
mod optim;
mod schedule;
mod trainer;

pub use batch::{augment_view, two_view_batch, MultiViewBatch};
pub use config::TrainConfig;
pub use dataset::GaitDataset;
pub use error::TrainError;
pub use loss::{bce_soft, combined_loss, supcon_loss};
pub use optim::Adam;
pub use schedule::{cyclical_lr, finetune_lr, llrd_rate_for, llrd_rates};
pub use trainer::{
    finetune, pretrain, write_loss_csv, EpochStats, FinetuneTask, GenderHead, Regime,
};
