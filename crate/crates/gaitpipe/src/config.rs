use serde::{Deserialize, Serialize};

use crate::error::PipeError;

/// Thresholds and constants for dataset construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Gait period length in frames at the reference rate.
    pub period_frames: usize,
    /// Frame rate every sequence is resampled to.
    pub reference_fps: f64,
    /// Skeletons with mean joint confidence below this are dropped.
    pub min_avg_confidence: f64,
    /// Skeletons with mean ankle confidence below this are dropped.
    pub min_feet_confidence: f64,
    /// Sequences outside [leg_speed_min, leg_speed_max] are dropped;
    /// values exactly on a bound are kept.
    pub leg_speed_min: f64,
    pub leg_speed_max: f64,
    /// Minimum IoU for the tracker to associate a detection with a track.
    pub tracker_iou_threshold: f64,
    /// Consecutive unmatched frames a track survives before closing.
    pub tracker_max_age: u64,
    /// Augmentations per crop expected in attribute score files.
    pub k_augment: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            period_frames: 48,
            reference_fps: 24.0,
            min_avg_confidence: 0.5,
            min_feet_confidence: 0.4,
            leg_speed_min: 0.0015,
            leg_speed_max: 0.09,
            tracker_iou_threshold: 0.3,
            tracker_max_age: 12,
            k_augment: 4,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipeError> {
        let unit = [
            ("min_avg_confidence", self.min_avg_confidence),
            ("min_feet_confidence", self.min_feet_confidence),
            ("tracker_iou_threshold", self.tracker_iou_threshold),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(PipeError::BadConfig(format!("{name} {v} outside [0, 1]")));
            }
        }
        if self.period_frames == 0 {
            return Err(PipeError::BadConfig("period_frames must be at least 1".into()));
        }
        if !(self.reference_fps.is_finite() && self.reference_fps > 0.0) {
            return Err(PipeError::BadFps(self.reference_fps));
        }
        if !(self.leg_speed_min.is_finite() && self.leg_speed_max.is_finite())
            || self.leg_speed_min < 0.0
            || self.leg_speed_min > self.leg_speed_max
        {
            return Err(PipeError::BadConfig(format!(
                "leg speed range [{}, {}] is invalid",
                self.leg_speed_min, self.leg_speed_max
            )));
        }
        if self.k_augment == 0 {
            return Err(PipeError::BadConfig("k_augment must be at least 1".into()));
        }
        Ok(())
    }
}
