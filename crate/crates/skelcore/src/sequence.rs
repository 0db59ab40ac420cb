use crate::error::SkelError;
use crate::skeleton::{Joint, Skeleton, NUM_JOINTS};

/// An ordered, fixed-rate sequence of skeletons.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSequence {
    frames: Vec<Skeleton>,
    fps: f64,
}

impl SkeletonSequence {
    pub fn new(frames: Vec<Skeleton>, fps: f64) -> Result<Self, SkelError> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(SkelError::BadFrameRate { fps });
        }
        if frames.is_empty() {
            return Err(SkelError::EmptySequence);
        }
        Ok(SkeletonSequence { frames, fps })
    }

    pub fn frames(&self) -> &[Skeleton] {
        &self.frames
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Replaces the frames, keeping the rate.
    pub fn with_frames(&self, frames: Vec<Skeleton>) -> Result<Self, SkelError> {
        SkeletonSequence::new(frames, self.fps)
    }

    /// Flattens every frame into one row-major buffer of `len * 54` values.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.frames.len() * NUM_JOINTS * 3);
        for f in &self.frames {
            out.extend_from_slice(&f.flatten());
        }
        out
    }
}

/// Takes the centered window of `crop` frames, biased toward the front on
/// odd leftovers: a 100-frame sequence cropped to 48 keeps frames 26..74.
pub fn center_crop(seq: &SkeletonSequence, crop: usize) -> Result<SkeletonSequence, SkelError> {
    if crop == 0 {
        return Err(SkelError::ZeroCrop);
    }
    let len = seq.len();
    if len < crop {
        return Err(SkelError::SequenceTooShort { len, crop });
    }
    let start = (len - crop) / 2;
    seq.with_frames(seq.frames()[start..start + crop].to_vec())
}

/// Linearly interpolates a skeleton at fractional frame position `t`,
/// clamped to the valid range. All three joint components are interpolated;
/// integer positions reproduce source frames exactly.
pub fn sample_at(frames: &[Skeleton], t: f64) -> Skeleton {
    debug_assert!(!frames.is_empty());
    let max = (frames.len() - 1) as f64;
    let t = t.clamp(0.0, max);
    let i0 = t.floor() as usize;
    let frac = t - i0 as f64;
    if frac == 0.0 {
        return frames[i0].clone();
    }
    let a = frames[i0].joints();
    let b = frames[i0 + 1].joints();
    let mut joints = [Joint::new(0.0, 0.0, 0.0); NUM_JOINTS];
    for ((o, ja), jb) in joints.iter_mut().zip(a.iter()).zip(b.iter()) {
        o.x = ja.x + frac * (jb.x - ja.x);
        o.y = ja.y + frac * (jb.y - ja.y);
        o.confidence = (ja.confidence + frac * (jb.confidence - ja.confidence)).clamp(0.0, 1.0);
    }
    Skeleton::from_joints_unchecked(joints)
}

/// Resamples by stepping `step` source frames per output frame, producing
/// `out_len` frames. Positions past the last source frame clamp to it.
pub fn resample_by_step(
    frames: &[Skeleton],
    out_len: usize,
    step: f64,
) -> Result<Vec<Skeleton>, SkelError> {
    if frames.is_empty() {
        return Err(SkelError::EmptySequence);
    }
    Ok((0..out_len)
        .map(|j| sample_at(frames, j as f64 * step))
        .collect())
}
