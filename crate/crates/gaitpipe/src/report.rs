use std::fmt;

/// Stage-by-stage accounting for one dataset build.
///
/// The four stage counts say how many tracklets were still alive after
/// tracking, the confidence filter, the duration filter, and the leg-speed
/// filter, in that order. A tracklet that cannot be resampled or loses too
/// many frames to degenerate normalization never exhibits a valid leg
/// speed, so it is counted as a leg-speed drop; `unresampleable` records
/// how often that happened.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageReport {
    pub detections: usize,
    pub malformed_lines: usize,
    pub tracked: usize,
    pub after_confidence: usize,
    pub after_duration: usize,
    pub after_leg_speed: usize,
    pub skeletons_dropped_low_confidence: usize,
    pub skeletons_dropped_low_feet: usize,
    pub degenerate_frames_dropped: usize,
    pub unresampleable: usize,
}

impl StageReport {
    /// Tracklets alive after each stage, in pipeline order.
    pub fn survivors(&self) -> [usize; 4] {
        [self.tracked, self.after_confidence, self.after_duration, self.after_leg_speed]
    }
}

impl fmt::Display for StageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "stage        tracklets")?;
        writeln!(f, "tracked      {}", self.tracked)?;
        writeln!(f, "confidence   {}", self.after_confidence)?;
        writeln!(f, "duration     {}", self.after_duration)?;
        writeln!(f, "leg-speed    {}", self.after_leg_speed)?;
        writeln!(f, "detections read: {}", self.detections)?;
        writeln!(f, "malformed lines skipped: {}", self.malformed_lines)?;
        writeln!(
            f,
            "skeletons dropped: {} low confidence, {} low feet confidence",
            self.skeletons_dropped_low_confidence, self.skeletons_dropped_low_feet
        )?;
        writeln!(f, "degenerate frames dropped: {}", self.degenerate_frames_dropped)?;
        write!(f, "unresampleable tracklets: {}", self.unresampleable)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn survivors_follow_stage_order() {
        let report = StageReport {
            tracked: 5,
            after_confidence: 4,
            after_duration: 3,
            after_leg_speed: 2,
            ..Default::default()
        };
        assert_eq!(report.survivors(), [5, 4, 3, 2]);
        let text = report.to_string();
        let positions: Vec<usize> = ["tracked", "confidence", "duration", "leg-speed"]
            .iter()
            .map(|s| text.find(s).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }
}
