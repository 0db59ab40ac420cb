use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use skelcore::{Skeleton, FLAT_LEN};

use crate::attributes::{AttributeVector, NUM_ATTRIBUTES};
use crate::error::PipeError;

/// A fully processed tracklet: normalized frames at the reference rate,
/// plus fused attributes when annotation was requested.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedTracklet {
    pub id: u64,
    pub fps: f64,
    pub frames: Vec<Skeleton>,
    pub attributes: Option<AttributeVector>,
}

/// Writes tracklets as one line each: id, fps, frame count, the frames'
/// 54 values apiece, then optionally the 42 attribute values. Floats use
/// the shortest round-trip encoding, so identical inputs produce
/// byte-identical files.
pub fn write_archive(path: &Path, tracklets: &[ProcessedTracklet]) -> Result<(), PipeError> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    for t in tracklets {
        write!(out, "{} {} {}", t.id, t.fps, t.frames.len())?;
        for frame in &t.frames {
            for v in frame.flatten() {
                write!(out, " {v}")?;
            }
        }
        if let Some(attrs) = &t.attributes {
            for v in attrs.values() {
                write!(out, " {v}")?;
            }
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads an archive produced by [`write_archive`].
pub fn read_archive(path: &Path) -> Result<Vec<ProcessedTracklet>, PipeError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut tracklets = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        tracklets.push(parse_tracklet(trimmed, line_no)?);
    }
    Ok(tracklets)
}

fn parse_tracklet(line: &str, line_no: usize) -> Result<ProcessedTracklet, PipeError> {
    let bad = |reason: String| PipeError::BadArchiveLine { line: line_no, reason };
    let mut fields = line.split_whitespace();
    let id: u64 = fields
        .next()
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| bad("missing or invalid id".into()))?;
    let fps: f64 = fields
        .next()
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| bad("missing or invalid fps".into()))?;
    let frame_count: usize = fields
        .next()
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| bad("missing or invalid frame count".into()))?;

    let values: Vec<f64> = fields
        .map(|f| f.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| bad(format!("bad value: {e}")))?;

    let skeleton_values = frame_count * FLAT_LEN;
    let attrs = match values.len().checked_sub(skeleton_values) {
        Some(0) => None,
        Some(n) if n == NUM_ATTRIBUTES => Some(AttributeVector::new(
            values[skeleton_values..].to_vec(),
        )?),
        _ => {
            return Err(bad(format!(
                "{} values do not fit {frame_count} frames with optional attributes",
                values.len()
            )))
        }
    };

    let frames = values[..skeleton_values]
        .chunks_exact(FLAT_LEN)
        .map(Skeleton::unflatten)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ProcessedTracklet { id, fps, frames, attributes: attrs })
}
