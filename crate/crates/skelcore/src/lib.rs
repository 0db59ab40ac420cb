//! Core skeleton types and transforms for pose-sequence gait analysis.
//!
//! The crate provides:
//!
//! - an 18-joint [`Skeleton`] in the standard detector joint order, with
//!   flattening to the model's 54-value frame layout,
//! - pelvis-centered, scale-free pose [`normalize_skeleton`],
//! - fixed-rate [`SkeletonSequence`] containers with cropping and linear
//!   resampling,
//! - the stochastic training transforms: random crop, horizontal flip,
//!   playback pace, and coordinate jitter.
//!
//! Every transform is a pure function of its inputs and the caller's RNG
//! state; nothing here mutates in place.

mod augment;
mod error;
mod normalize;
mod sequence;
mod skeleton;

pub use augment::{
    jitter, mirror_sequence, pace_sequence, random_crop, random_flip, random_pace,
    AugmentationParams,
};
pub use error::SkelError;
pub use normalize::{normalize_skeleton, Normalized, DEGENERACY_EPSILON};
pub use sequence::{center_crop, resample_by_step, sample_at, SkeletonSequence};
pub use skeleton::{joint, Joint, Skeleton, FLAT_LEN, FLIP_PAIRS, LEG_JOINTS, NUM_JOINTS};
