use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::SkelError;
use crate::sequence::{resample_by_step, SkeletonSequence};
use crate::skeleton::Skeleton;

/// Knobs for the stochastic sequence transforms. `seed` is carried here so
/// training configs can snapshot it; the transforms themselves draw from
/// whatever RNG the caller hands in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationParams {
    /// Window length taken by the crops.
    pub crop_length: usize,
    /// Probability that a sequence is mirrored.
    pub flip_probability: f64,
    /// Playback-speed factors drawn uniformly from this closed interval.
    pub pace_range: (f64, f64),
    /// Standard deviation of the coordinate noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for AugmentationParams {
    fn default() -> Self {
        AugmentationParams {
            crop_length: 48,
            flip_probability: 0.5,
            pace_range: (0.9, 1.1),
            noise_sigma: 0.01,
            seed: 0,
        }
    }
}

impl AugmentationParams {
    pub fn validate(&self) -> Result<(), SkelError> {
        if self.crop_length == 0 {
            return Err(SkelError::ZeroCrop);
        }
        let (lo, hi) = self.pace_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
            return Err(SkelError::BadPaceRange { lo, hi });
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(SkelError::BadSigma {
                sigma: self.noise_sigma,
            });
        }
        Ok(())
    }
}

/// Takes a window of `crop_length` frames at a uniformly random start
/// (inclusive of both extremes). A sequence of exactly the crop length is
/// returned unchanged.
pub fn random_crop(
    seq: &SkeletonSequence,
    params: &AugmentationParams,
    rng: &mut impl Rng,
) -> Result<SkeletonSequence, SkelError> {
    params.validate()?;
    let crop = params.crop_length;
    let len = seq.len();
    if len < crop {
        return Err(SkelError::SequenceTooShort { len, crop });
    }
    let start = rng.gen_range(0..=len - crop);
    seq.with_frames(seq.frames()[start..start + crop].to_vec())
}

/// Mirrors the whole sequence with probability `flip_probability`.
pub fn random_flip(
    seq: &SkeletonSequence,
    params: &AugmentationParams,
    rng: &mut impl Rng,
) -> Result<SkeletonSequence, SkelError> {
    params.validate()?;
    if rng.gen::<f64>() < params.flip_probability {
        Ok(mirror_sequence(seq))
    } else {
        Ok(seq.clone())
    }
}

/// Deterministically mirrors every frame (see [`Skeleton::mirrored`]).
pub fn mirror_sequence(seq: &SkeletonSequence) -> SkeletonSequence {
    let frames: Vec<Skeleton> = seq.frames().iter().map(|s| s.mirrored()).collect();
    seq.with_frames(frames).expect("same length and rate")
}

/// Re-times the sequence by a speed factor drawn from `pace_range`:
/// factor `f` advances `f` source frames per output frame, giving
/// `round(len / f)` output frames via linear interpolation.
pub fn random_pace(
    seq: &SkeletonSequence,
    params: &AugmentationParams,
    rng: &mut impl Rng,
) -> Result<SkeletonSequence, SkelError> {
    params.validate()?;
    let (lo, hi) = params.pace_range;
    let factor = if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    };
    pace_sequence(seq, factor)
}

/// The deterministic core of [`random_pace`], exposed for callers that fix
/// the factor. A factor of exactly 1 returns the input unchanged.
pub fn pace_sequence(seq: &SkeletonSequence, factor: f64) -> Result<SkeletonSequence, SkelError> {
    if factor == 1.0 {
        return Ok(seq.clone());
    }
    let len = seq.len();
    let out_len = (len as f64 / factor).round() as usize;
    if out_len < 2 {
        return Err(SkelError::PaceTooShort {
            factor,
            len,
            out_len,
        });
    }
    let frames = resample_by_step(seq.frames(), out_len, factor)?;
    seq.with_frames(frames)
}

/// Adds independent Gaussian noise to every joint coordinate; confidences
/// are untouched. A sigma of zero returns the input bit-for-bit.
pub fn jitter(
    seq: &SkeletonSequence,
    params: &AugmentationParams,
    rng: &mut impl Rng,
) -> Result<SkeletonSequence, SkelError> {
    params.validate()?;
    if params.noise_sigma == 0.0 {
        return Ok(seq.clone());
    }
    let normal = Normal::new(0.0, params.noise_sigma).expect("validated sigma");
    let frames: Vec<Skeleton> = seq
        .frames()
        .iter()
        .map(|s| {
            let mut joints = *s.joints();
            for j in joints.iter_mut() {
                j.x += normal.sample(rng);
                j.y += normal.sample(rng);
            }
            Skeleton::from_joints_unchecked(joints)
        })
        .collect();
    seq.with_frames(frames)
}
