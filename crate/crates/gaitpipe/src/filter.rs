use skelcore::{normalize_skeleton, resample_by_step, SkeletonSequence, LEG_JOINTS};

use crate::config::PipelineConfig;
use crate::error::PipeError;
use crate::track::Tracklet;

/// How many skeletons each confidence rule removed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfidenceDrops {
    pub low_average: usize,
    pub low_feet: usize,
}

/// Removes skeletons with mean confidence below `min_avg_confidence` or
/// ankle confidence below `min_feet_confidence`. Both comparisons are
/// strict, so values exactly on a threshold survive. A skeleton failing
/// both rules counts under the average rule only.
pub fn filter_confidence(t: Tracklet, cfg: &PipelineConfig) -> (Tracklet, ConfidenceDrops) {
    let mut drops = ConfidenceDrops::default();
    let detections = t
        .detections
        .into_iter()
        .filter(|d| {
            if d.skeleton.mean_confidence() < cfg.min_avg_confidence {
                drops.low_average += 1;
                false
            } else if d.skeleton.feet_confidence() < cfg.min_feet_confidence {
                drops.low_feet += 1;
                false
            } else {
                true
            }
        })
        .collect();
    (Tracklet { detections, ..t }, drops)
}

/// A tracklet shorter than `period_frames · fps / reference_fps` source
/// frames cannot cover one gait period after resampling.
pub fn passes_duration(t: &Tracklet, cfg: &PipelineConfig) -> bool {
    let threshold = cfg.period_frames as f64 * t.fps / cfg.reference_fps;
    (t.detections.len() as f64) >= threshold
}

/// Linearly resamples a tracklet's skeletons to the reference frame rate.
pub fn resample_tracklet(
    t: &Tracklet,
    cfg: &PipelineConfig,
) -> Result<SkeletonSequence, PipeError> {
    if t.fps <= 0.0 || !t.fps.is_finite() {
        return Err(PipeError::BadFps(t.fps));
    }
    if t.detections.len() < 2 {
        return Err(PipeError::TooShortToResample { len: t.detections.len() });
    }
    let frames: Vec<_> = t.detections.iter().map(|d| d.skeleton.clone()).collect();
    let out_len = (frames.len() as f64 * cfg.reference_fps / t.fps).round() as usize;
    if out_len < 2 {
        return Err(PipeError::TooShortToResample { len: out_len });
    }
    let step = t.fps / cfg.reference_fps;
    let resampled = resample_by_step(&frames, out_len, step)?;
    Ok(SkeletonSequence::new(resampled, cfg.reference_fps)?)
}

/// Pose-normalizes every frame, dropping frames whose scale denominators
/// were degenerate. Returns the surviving frames plus the drop count.
pub fn normalize_sequence(seq: &SkeletonSequence) -> (Vec<skelcore::Skeleton>, usize) {
    let mut dropped = 0usize;
    let frames = seq
        .frames()
        .iter()
        .filter_map(|s| {
            let n = normalize_skeleton(s);
            if n.degenerate {
                dropped += 1;
                None
            } else {
                Some(n.skeleton)
            }
        })
        .collect();
    (frames, dropped)
}

/// Mean per-frame Euclidean displacement of the four leg joints (knees and
/// ankles), in normalized units. Averaged over all frame transitions and
/// all four joints.
pub fn leg_speed(seq: &SkeletonSequence) -> Result<f64, PipeError> {
    let frames = seq.frames();
    if frames.len() < 2 {
        return Err(PipeError::TooShortToResample { len: frames.len() });
    }
    let mut total = 0.0;
    for w in frames.windows(2) {
        for &j in LEG_JOINTS.iter() {
            let a = w[0].joint(j);
            let b = w[1].joint(j);
            let dx = b.x - a.x;
            let dy = b.y - a.y;
            total += (dx * dx + dy * dy).sqrt();
        }
    }
    Ok(total / (((frames.len() - 1) * LEG_JOINTS.len()) as f64))
}

/// Keep iff the speed lies inside [leg_speed_min, leg_speed_max]; both
/// bounds inclusive.
pub fn passes_leg_speed(speed: f64, cfg: &PipelineConfig) -> bool {
    speed >= cfg.leg_speed_min && speed <= cfg.leg_speed_max
}
