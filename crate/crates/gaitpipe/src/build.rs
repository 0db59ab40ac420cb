use std::collections::BTreeSet;
use std::path::Path;

use skelcore::Skeleton;

use crate::archive::ProcessedTracklet;
use crate::attributes::{
    coalesce_schema, fuse_attributes, read_scores, AttributeSchema, AttributeVector,
};
use crate::config::PipelineConfig;
use crate::detect::{ingest, Detection};
use crate::error::PipeError;
use crate::filter::{
    filter_confidence, leg_speed, normalize_sequence, passes_duration, passes_leg_speed,
    resample_tracklet,
};
use crate::report::StageReport;
use crate::track::track;

/// Output of one dataset build: processed tracklets in id order plus the
/// stage accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBuild {
    pub tracklets: Vec<ProcessedTracklet>,
    pub report: StageReport,
}

struct Survivor {
    id: u64,
    detections: Vec<Detection>,
    frames: Vec<Skeleton>,
}

/// Runs the full construction pipeline on a detection stream recorded at
/// `fps`: ingest, track, confidence and duration filters, resampling to
/// the reference rate, pose normalization, the leg-speed filter, and —
/// when a score file is given — attribute fusion.
///
/// The result is a pure function of the inputs; rerunning produces
/// identical tracklets. A readable input with zero valid detection lines
/// yields an empty build with a zeroed report.
pub fn build_dataset(
    detections_path: &Path,
    fps: f64,
    cfg: &PipelineConfig,
    scores_path: Option<&Path>,
) -> Result<DatasetBuild, PipeError> {
    cfg.validate()?;
    if !(fps.is_finite() && fps > 0.0) {
        return Err(PipeError::BadFps(fps));
    }

    let mut report = StageReport::default();
    let ingested = match ingest(detections_path) {
        Ok(r) => r,
        Err(PipeError::NoDetections) => {
            return Ok(DatasetBuild { tracklets: Vec::new(), report })
        }
        Err(e) => return Err(e),
    };
    report.detections = ingested.detections;
    report.malformed_lines = ingested.malformed_lines;

    let tracklets = track(
        &ingested.frames,
        cfg.tracker_iou_threshold,
        cfg.tracker_max_age,
        fps,
    );
    report.tracked = tracklets.len();
    let tracked_ids: BTreeSet<u64> = tracklets.iter().map(|t| t.id).collect();

    let mut confident = Vec::new();
    for t in tracklets {
        let (kept, drops) = filter_confidence(t, cfg);
        report.skeletons_dropped_low_confidence += drops.low_average;
        report.skeletons_dropped_low_feet += drops.low_feet;
        if !kept.detections.is_empty() {
            confident.push(kept);
        }
    }
    report.after_confidence = confident.len();

    let long_enough: Vec<_> =
        confident.into_iter().filter(|t| passes_duration(t, cfg)).collect();
    report.after_duration = long_enough.len();

    let mut survivors = Vec::new();
    for t in long_enough {
        let seq = match resample_tracklet(&t, cfg) {
            Ok(seq) => seq,
            Err(PipeError::TooShortToResample { .. }) => {
                report.unresampleable += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let (frames, degenerate) = normalize_sequence(&seq);
        report.degenerate_frames_dropped += degenerate;
        if frames.len() < 2 {
            report.unresampleable += 1;
            continue;
        }
        let normalized = seq.with_frames(frames)?;
        if !passes_leg_speed(leg_speed(&normalized)?, cfg) {
            continue;
        }
        survivors.push(Survivor {
            id: t.id,
            detections: t.detections,
            frames: normalized.frames().to_vec(),
        });
    }
    report.after_leg_speed = survivors.len();

    let attributes = match scores_path {
        Some(path) => Some(fuse_all(path, &survivors, &tracked_ids, cfg)?),
        None => None,
    };

    let tracklets = survivors
        .into_iter()
        .enumerate()
        .map(|(i, s)| ProcessedTracklet {
            id: s.id,
            fps: cfg.reference_fps,
            frames: s.frames,
            attributes: attributes.as_ref().and_then(|a| a[i].clone()),
        })
        .collect();
    Ok(DatasetBuild { tracklets, report })
}

/// Fuses attributes for every survivor that has scores. Scores naming a
/// tracklet the tracker never produced are an error; scores for tracklets
/// dropped by a filter are skipped.
fn fuse_all(
    scores_path: &Path,
    survivors: &[Survivor],
    tracked_ids: &BTreeSet<u64>,
    cfg: &PipelineConfig,
) -> Result<Vec<Option<AttributeVector>>, PipeError> {
    let table = read_scores(scores_path)?;
    let schema = AttributeSchema::builtin()?;
    for id in table.tracklet_ids() {
        if !tracked_ids.contains(&id) {
            return Err(PipeError::UnknownTracklet(id));
        }
    }

    let mut fused = Vec::with_capacity(survivors.len());
    for s in survivors {
        let Some(crops) = table.crops(s.id) else {
            fused.push(None);
            continue;
        };
        let positions: Vec<usize> =
            (0..s.detections.len()).step_by(cfg.period_frames).collect();
        if let Some((&crop, _)) = crops.iter().find(|(&c, _)| c >= positions.len()) {
            return Err(PipeError::BadCropIndex {
                tracklet: s.id,
                crop,
                n_crops: positions.len(),
            });
        }

        let mut weighted = Vec::with_capacity(positions.len());
        for (crop, &pos) in positions.iter().enumerate() {
            let augs = crops.get(&crop).ok_or(PipeError::MissingScores {
                tracklet: s.id,
                crop,
                aug: 0,
            })?;
            let mut vectors = Vec::with_capacity(cfg.k_augment);
            for aug in 0..cfg.k_augment {
                let scores = augs.get(&aug).ok_or(PipeError::MissingScores {
                    tracklet: s.id,
                    crop,
                    aug,
                })?;
                vectors.push(coalesce_schema(&schema, scores)?);
            }
            weighted.push((s.detections[pos].bbox_area_ratio, vectors));
        }
        fused.push(Some(fuse_attributes(&weighted)?));
    }
    Ok(fused)
}
