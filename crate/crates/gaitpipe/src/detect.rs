use std::io::{BufRead, BufReader};
use std::path::Path;

use skelcore::{Skeleton, FLAT_LEN};

use crate::error::PipeError;

/// Axis-aligned box in pixel coordinates: top-left corner plus extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bbox {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Bbox {
    pub fn new(x: f64, y: f64, width: f64, height: f64) -> Result<Self, PipeError> {
        let finite = [x, y, width, height].iter().all(|v| v.is_finite());
        if !finite || width <= 0.0 || height <= 0.0 {
            return Err(PipeError::BadBbox { width, height });
        }
        Ok(Bbox { x, y, width, height })
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Intersection over union; 0 when the boxes are disjoint.
    pub fn iou(&self, other: &Bbox) -> f64 {
        let ix = (self.x + self.width).min(other.x + other.width) - self.x.max(other.x);
        let iy = (self.y + self.height).min(other.y + other.height) - self.y.max(other.y);
        if ix <= 0.0 || iy <= 0.0 {
            return 0.0;
        }
        let inter = ix * iy;
        inter / (self.area() + other.area() - inter)
    }
}

/// One detected person in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame_index: u64,
    pub bbox: Bbox,
    pub skeleton: Skeleton,
    /// Bbox area relative to the full image, in [0, 1].
    pub bbox_area_ratio: f64,
}

/// All detections sharing one frame index, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameGroup {
    pub frame_index: u64,
    pub detections: Vec<Detection>,
}

/// Parsed detection stream plus ingest bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestResult {
    /// Frame groups sorted by frame index.
    pub frames: Vec<FrameGroup>,
    pub detections: usize,
    pub malformed_lines: usize,
}

/// Reads a line-delimited detection stream.
///
/// Each line holds 60 whitespace-separated fields: frame index, bbox
/// (x y width height), 54 skeleton values (x y confidence per joint), and
/// bbox_area_ratio. Blank lines and `#` comments are ignored. Malformed
/// lines are counted and skipped; an input with zero valid lines is an
/// error.
pub fn ingest(path: &Path) -> Result<IngestResult, PipeError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut malformed = 0usize;
    let mut detections = 0usize;
    let mut by_frame: std::collections::BTreeMap<u64, Vec<Detection>> =
        std::collections::BTreeMap::new();

    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match parse_line(trimmed) {
            Some(det) => {
                detections += 1;
                by_frame.entry(det.frame_index).or_default().push(det);
            }
            None => malformed += 1,
        }
    }

    if detections == 0 {
        return Err(PipeError::NoDetections);
    }
    let frames = by_frame
        .into_iter()
        .map(|(frame_index, detections)| FrameGroup { frame_index, detections })
        .collect();
    Ok(IngestResult { frames, detections, malformed_lines: malformed })
}

fn parse_line(line: &str) -> Option<Detection> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 5 + FLAT_LEN + 1 {
        return None;
    }
    let frame_index: u64 = fields[0].parse().ok()?;
    let nums: Vec<f64> = fields[1..]
        .iter()
        .map(|f| f.parse::<f64>())
        .collect::<Result<_, _>>()
        .ok()?;
    let bbox = Bbox::new(nums[0], nums[1], nums[2], nums[3]).ok()?;
    let skeleton = Skeleton::unflatten(&nums[4..4 + FLAT_LEN]).ok()?;
    let ratio = nums[4 + FLAT_LEN];
    if !(0.0..=1.0).contains(&ratio) {
        return None;
    }
    Some(Detection { frame_index, bbox, skeleton, bbox_area_ratio: ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::io::Write;

    fn detection_line(frame: u64, x: f64) -> String {
        let mut fields = vec![
            frame.to_string(),
            x.to_string(),
            "0".into(),
            "10".into(),
            "20".into(),
        ];
        for _ in 0..18 {
            fields.extend(["1.0".into(), "2.0".into(), "0.9".into()]);
        }
        fields.push("0.5".into());
        fields.join(" ")
    }

    fn write_stream(lines: &[String]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "{}", lines.join("\n")).unwrap();
        f
    }

    #[test]
    fn iou_hand_values() {
        let a = Bbox::new(0.0, 0.0, 2.0, 2.0).unwrap();
        let b = Bbox::new(1.0, 0.0, 2.0, 2.0).unwrap();
        let c = Bbox::new(10.0, 10.0, 2.0, 2.0).unwrap();
        assert_relative_eq!(a.iou(&b), 1.0 / 3.0);
        assert_relative_eq!(a.iou(&a), 1.0);
        assert_eq!(a.iou(&c), 0.0);
        assert_relative_eq!(a.iou(&b), b.iou(&a));
    }

    #[test]
    fn degenerate_bbox_rejected() {
        assert!(Bbox::new(0.0, 0.0, 0.0, 2.0).is_err());
        assert!(Bbox::new(0.0, 0.0, 2.0, -1.0).is_err());
        assert!(Bbox::new(f64::NAN, 0.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn groups_by_frame_in_order() {
        let lines: Vec<String> = [2u64, 0, 1, 2, 0, 1]
            .iter()
            .enumerate()
            .map(|(i, &f)| detection_line(f, i as f64 * 100.0))
            .collect();
        let f = write_stream(&lines);
        let result = ingest(f.path()).unwrap();
        assert_eq!(result.detections, 6);
        assert_eq!(result.malformed_lines, 0);
        let frames: Vec<u64> = result.frames.iter().map(|g| g.frame_index).collect();
        assert_eq!(frames, vec![0, 1, 2]);
        assert!(result.frames.iter().all(|g| g.detections.len() == 2));
        // Within a frame, detections keep file order.
        assert_relative_eq!(result.frames[0].detections[0].bbox.x, 100.0);
        assert_relative_eq!(result.frames[0].detections[1].bbox.x, 400.0);
    }

    #[test]
    fn malformed_lines_counted_and_skipped() {
        let lines = vec![
            "# header".into(),
            detection_line(0, 0.0),
            "3 garbage".into(),
            detection_line(1, 0.0).replace("0.9", "nope"),
            detection_line(1, 0.0),
        ];
        let f = write_stream(&lines);
        let result = ingest(f.path()).unwrap();
        assert_eq!(result.detections, 2);
        assert_eq!(result.malformed_lines, 2);
    }

    #[test]
    fn empty_input_is_an_error() {
        let f = write_stream(&["# nothing here".into()]);
        assert!(matches!(ingest(f.path()), Err(PipeError::NoDetections)));
    }
}
