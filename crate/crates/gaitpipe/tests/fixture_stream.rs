use std::path::Path;

use approx::assert_relative_eq;
use gaitpipe::{
    build_dataset, leg_speed, write_archive, AttributeSchema, PipelineConfig, GENDER_SLOT,
    NUM_ATTRIBUTES,
};
use skelcore::{joint, SkeletonSequence};

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// The shipped stream holds five spatially disjoint tracklets, each built
/// to die at exactly one stage (or survive to the end on an exact filter
/// boundary):
///
/// - id 0: 65 frames, all confidences exactly 0.5, one knee jump sized so
///   the leg speed equals the lower bound exactly — survives everything;
/// - id 1: 60 frames of confidence 0.49 — emptied by the confidence
///   filter;
/// - id 2: 50 detections with a 3-frame occlusion gap and three bad-ankle
///   frames — coasts through the gap as one track, then drops to 47
///   frames and dies at the duration filter;
/// - id 3: 48 frames (duration boundary, kept) with static legs — dies at
///   the leg-speed filter;
/// - id 4: 65 frames, ankle confidences exactly 0.4, knee jump sized for
///   a leg speed exactly on the upper bound — survives everything.
#[test]
fn engineered_stream_drops_one_tracklet_per_stage() {
    let build =
        build_dataset(&fixture("stream.txt"), 24.0, &PipelineConfig::default(), None).unwrap();

    assert_eq!(build.report.survivors(), [5, 4, 3, 2]);
    assert_eq!(build.report.detections, 288);
    assert_eq!(build.report.malformed_lines, 2);
    assert_eq!(build.report.skeletons_dropped_low_confidence, 60);
    assert_eq!(build.report.skeletons_dropped_low_feet, 3);
    assert_eq!(build.report.degenerate_frames_dropped, 0);
    assert_eq!(build.report.unresampleable, 0);

    let ids: Vec<u64> = build.tracklets.iter().map(|t| t.id).collect();
    assert_eq!(ids, vec![0, 4]);
    assert!(build.tracklets.iter().all(|t| t.frames.len() == 65 && t.fps == 24.0));
}

#[test]
fn survivors_sit_exactly_on_the_leg_speed_bounds() {
    let cfg = PipelineConfig::default();
    let build = build_dataset(&fixture("stream.txt"), 24.0, &cfg, None).unwrap();

    let speeds: Vec<f64> = build
        .tracklets
        .iter()
        .map(|t| {
            let seq = SkeletonSequence::new(t.frames.clone(), t.fps).unwrap();
            leg_speed(&seq).unwrap()
        })
        .collect();
    // Bit-exact: the fixture geometry makes normalization and resampling
    // identities, and the jump distances divide to the exact thresholds.
    assert_eq!(speeds[0], cfg.leg_speed_min);
    assert_eq!(speeds[1], cfg.leg_speed_max);

    // The knee jump survives the whole pipeline untouched.
    let t0 = &build.tracklets[0];
    assert_eq!(t0.frames[32].joint(joint::R_KNEE).x, 0.0);
    assert_eq!(t0.frames[33].joint(joint::R_KNEE).x, 0.384);
}

#[test]
fn rebuilds_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig::default();
    let paths = [dir.path().join("a.txt"), dir.path().join("b.txt")];
    for path in &paths {
        let build = build_dataset(&fixture("stream.txt"), 24.0, &cfg, None).unwrap();
        write_archive(path, &build.tracklets).unwrap();
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
    assert!(!a.is_empty());
}

#[test]
fn score_fusion_annotates_only_scored_tracklets() {
    let build = build_dataset(
        &fixture("stream.txt"),
        24.0,
        &PipelineConfig::default(),
        Some(&fixture("scores.txt")),
    )
    .unwrap();
    assert_eq!(build.report.survivors(), [5, 4, 3, 2]);

    let attrs = build.tracklets[0].attributes.as_ref().unwrap();
    // Crop 0 (weight 0.2) has Female mean 0.9, crop 1 (weight 0.1) has
    // 0.3: fused (0.2·0.9 + 0.1·0.3)/0.3 = 0.7. PETA Male enters
    // inverted; the Hat scores are dropped by the schema.
    assert_relative_eq!(attrs.values()[GENDER_SLOT], 0.7, max_relative = 1e-12);
    assert_eq!(attrs.values().len(), NUM_ATTRIBUTES);

    let schema = AttributeSchema::builtin().unwrap();
    let body_thin = schema.slot_index("BodyThin").unwrap();
    assert_relative_eq!(attrs.values()[body_thin], 0.5, max_relative = 1e-12);
    for (i, &v) in attrs.values().iter().enumerate() {
        if i != GENDER_SLOT && i != body_thin {
            assert_eq!(v, 0.0, "slot {i} should be untouched");
        }
    }

    assert!(build.tracklets[1].attributes.is_none());
}
