//! Dataset construction for skeleton-based gait analysis.
//!
//! Turns a raw per-frame detection stream into an archive of clean,
//! normalized walking tracklets:
//!
//! 1. **ingest** — parse line-delimited detections, skipping malformed
//!    lines;
//! 2. **track** — greedy IoU association with max-age coasting through
//!    short occlusions;
//! 3. **confidence filter** — drop skeletons with weak overall or ankle
//!    detections;
//! 4. **duration filter** — drop tracklets shorter than one gait period
//!    at the source rate;
//! 5. **resample + normalize** — unify every sequence to the reference
//!    frame rate and strip camera translation and scale;
//! 6. **leg-speed filter** — keep sequences whose legs move like walking,
//!    neither standing still nor jittering implausibly fast;
//! 7. **attribute fusion** (optional) — coalesce ensemble appearance
//!    scores onto a fixed 42-slot schema and average them across crops,
//!    weighted by bounding-box area.
//!
//! Removal thresholds are strict inequalities: a value exactly on a bound
//! survives. Every stage is a pure function, so a rebuild from the same
//! inputs is byte-identical.

mod archive;
mod attributes;
mod build;
mod config;
mod detect;
mod error;
mod filter;
mod report;
mod track;

pub use archive::{read_archive, write_archive, ProcessedTracklet};
pub use attributes::{
    coalesce_schema, fuse_attributes, read_scores, AttributeSchema, AttributeVector, Provider,
    ProviderScores, ScoreTable, Slot, SlotSource, GENDER_SLOT, NUM_ATTRIBUTES,
};
pub use build::{build_dataset, DatasetBuild};
pub use config::PipelineConfig;
pub use detect::{ingest, Bbox, Detection, FrameGroup, IngestResult};
pub use error::PipeError;
pub use filter::{
    filter_confidence, leg_speed, normalize_sequence, passes_duration, passes_leg_speed,
    resample_tracklet, ConfidenceDrops,
};
pub use report::StageReport;
pub use track::{track, Tracklet};
