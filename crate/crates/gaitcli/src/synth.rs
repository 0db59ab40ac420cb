use gaiteval::Condition;
use gaitpipe::{AttributeVector, ProcessedTracklet, GENDER_SLOT, NUM_ATTRIBUTES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skelcore::{joint, normalize_skeleton, Joint, Skeleton, NUM_JOINTS};

use crate::error::CliError;

/// Synthetic walking corpus settings. Each identity walks at its own
/// frequency with identity-specific amplitude and arm phasing, so motion
/// alone separates identities and predicts the attribute vector.
#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub ids: usize,
    pub tracklets_per_id: usize,
    /// Frames per tracklet before the split.
    pub frames: usize,
    /// Trailing frames reserved for the evaluation split.
    pub holdout: usize,
    pub fps: f64,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            ids: 32,
            tracklets_per_id: 1,
            frames: 144,
            holdout: 48,
            fps: 24.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MiniCasiaOptions {
    pub subjects: usize,
    pub angles: Vec<u16>,
    pub runs_per_cell: usize,
    pub frames: usize,
    pub fps: f64,
    pub seed: u64,
}

impl Default for MiniCasiaOptions {
    fn default() -> Self {
        MiniCasiaOptions {
            subjects: 4,
            angles: vec![0, 54, 90],
            runs_per_cell: 2,
            frames: 64,
            fps: 24.0,
            seed: 0,
        }
    }
}

/// Per-identity generative factors: gait dynamics (frequency, swing
/// amplitude, arm phasing) plus static skeleton proportions, which survive
/// pose normalization the way real bone-length ratios do.
struct IdentityLatents {
    frequency: f64,
    amplitude: f64,
    arm_lag: f64,
    arm_len: f64,
    leg_len: f64,
    stance: f64,
    head_len: f64,
}

fn latents(seed: u64, id: u64, ids: usize) -> IdentityLatents {
    let u = if ids <= 1 { 0.5 } else { id as f64 / (ids - 1) as f64 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ id.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    IdentityLatents {
        frequency: 0.7 + 0.6 * u,
        amplitude: rng.gen_range(0.85..1.15),
        arm_lag: rng.gen_range(-0.4..0.4),
        arm_len: rng.gen_range(0.8..1.2),
        leg_len: rng.gen_range(0.85..1.15),
        stance: rng.gen_range(0.75..1.25),
        head_len: rng.gen_range(0.85..1.15),
    }
}

/// Soft attribute vector as fixed functions of the normalized gait
/// frequency u = (f − 0.7)/0.6. Slot 5 is constant to exercise the
/// undefined-R² path; the rest vary smoothly with u.
pub fn attributes_for_frequency(frequency: f64) -> AttributeVector {
    let u = ((frequency - 0.7) / 0.6).clamp(0.0, 1.0);
    let mut values = vec![0.0; NUM_ATTRIBUTES];
    values[GENDER_SLOT] = if u >= 0.5 { 1.0 } else { 0.0 };
    values[1] = u;
    values[2] = u * u;
    values[3] = 1.0 - u;
    values[4] = 0.5 + 0.5 * (std::f64::consts::TAU * u).sin().clamp(-1.0, 1.0);
    values[5] = 0.5;
    for (j, v) in values.iter_mut().enumerate().skip(6) {
        let k = 0.5 + 0.25 * (j % 4) as f64;
        *v = 0.5 + 0.45 * (std::f64::consts::TAU * k * u + 0.37 * j as f64).sin();
    }
    for v in &mut values {
        *v = v.clamp(0.0, 1.0);
    }
    AttributeVector::new(values).expect("values stay inside [0, 1]")
}

struct ConditionEffect {
    left_arm: f64,
    right_arm: f64,
}

fn condition_effect(condition: Condition) -> ConditionEffect {
    match condition {
        Condition::Nm => ConditionEffect { left_arm: 1.0, right_arm: 1.0 },
        Condition::Cl => ConditionEffect { left_arm: 0.7, right_arm: 0.7 },
        Condition::Bg => ConditionEffect { left_arm: 1.0, right_arm: 0.4 },
    }
}

/// One normalized walking pose. `view` scales the lateral (x) motion the
/// way a camera angle does: frontal views show little stride, side views
/// the full swing.
fn walking_frame(
    lat: &IdentityLatents,
    phase: f64,
    view: f64,
    effect: &ConditionEffect,
    rng: &mut ChaCha8Rng,
) -> Skeleton {
    use std::f64::consts::PI;

    let bob = 0.03 * (2.0 * phase).sin();
    let sway = 0.02 * phase.sin();
    let leg = lat.amplitude * view;
    let arm = phase + PI + lat.arm_lag;
    let hip = 0.12 * lat.stance;
    let knee_x = 0.13 * lat.stance;
    let ankle_x = 0.14 * lat.stance;
    let knee_y = 0.45 * lat.leg_len;
    let ankle_y = 0.90 * lat.leg_len;

    let mut joints = [Joint::new(0.0, 0.0, 0.0); NUM_JOINTS];
    let mut set = |index: usize, x: f64, y: f64| {
        joints[index] = Joint::new(x, y, 0.0);
    };
    set(joint::NOSE, 0.5 * sway, -0.90 - 0.20 * lat.head_len + bob);
    set(joint::NECK, sway, -0.90 + bob);
    set(joint::R_SHOULDER, 0.20 + sway, -0.90 + bob);
    set(joint::L_SHOULDER, -0.20 + sway, -0.90 + bob);
    set(
        joint::R_ELBOW,
        0.25 * lat.arm_len + 0.12 * leg * effect.right_arm * (arm - 0.3).sin(),
        -0.90 + 0.35 * lat.arm_len + bob,
    );
    set(
        joint::R_WRIST,
        0.27 * lat.arm_len + 0.22 * leg * effect.right_arm * arm.sin(),
        -0.90 + 0.70 * lat.arm_len + bob,
    );
    set(
        joint::L_ELBOW,
        -0.25 * lat.arm_len + 0.12 * leg * effect.left_arm * (arm + PI - 0.3).sin(),
        -0.90 + 0.35 * lat.arm_len + bob,
    );
    set(
        joint::L_WRIST,
        -0.27 * lat.arm_len + 0.22 * leg * effect.left_arm * (arm + PI).sin(),
        -0.90 + 0.70 * lat.arm_len + bob,
    );
    set(joint::R_HIP, hip + 0.8 * sway, 0.5 * bob);
    set(joint::L_HIP, -hip + 0.8 * sway, 0.5 * bob);
    set(joint::R_KNEE, knee_x + 0.18 * leg * (phase - 0.5).sin(), knee_y + 0.3 * bob);
    set(
        joint::L_KNEE,
        -knee_x + 0.18 * leg * (phase + PI - 0.5).sin(),
        knee_y + 0.3 * bob,
    );
    set(
        joint::R_ANKLE,
        ankle_x + 0.30 * leg * phase.sin(),
        ankle_y + 0.04 * (2.0 * phase).sin(),
    );
    set(
        joint::L_ANKLE,
        -ankle_x + 0.30 * leg * (phase + PI).sin(),
        ankle_y + 0.04 * (2.0 * phase + PI).sin(),
    );
    set(joint::R_EYE, 0.03 + 0.5 * sway, -0.90 - 0.25 * lat.head_len + bob);
    set(joint::L_EYE, -0.03 + 0.5 * sway, -0.90 - 0.25 * lat.head_len + bob);
    set(joint::R_EAR, 0.07 + 0.5 * sway, -0.90 - 0.22 * lat.head_len + bob);
    set(joint::L_EAR, -0.07 + 0.5 * sway, -0.90 - 0.22 * lat.head_len + bob);

    for j in &mut joints {
        *j = Joint::new(
            j.x + rng.gen_range(-0.006..0.006),
            j.y + rng.gen_range(-0.006..0.006),
            rng.gen_range(0.75..1.0),
        );
    }
    let raw = Skeleton::new(joints).expect("synthetic joints are finite");
    normalize_skeleton(&raw).skeleton
}

fn walking_tracklet(
    id: u64,
    lat: &IdentityLatents,
    frames: usize,
    fps: f64,
    view: f64,
    effect: &ConditionEffect,
    rng: &mut ChaCha8Rng,
) -> ProcessedTracklet {
    let phase0 = rng.gen_range(0.0..std::f64::consts::TAU);
    let frames = (0..frames)
        .map(|t| {
            let phase = std::f64::consts::TAU * lat.frequency * t as f64 / fps + phase0;
            walking_frame(lat, phase, view, effect, rng)
        })
        .collect();
    ProcessedTracklet {
        id,
        fps,
        frames,
        attributes: Some(attributes_for_frequency(lat.frequency)),
    }
}

/// Generates the corpus and splits every tracklet into a training head and
/// a held-out tail of `holdout` frames.
pub fn synth_corpus(
    opts: &SynthOptions,
) -> Result<(Vec<ProcessedTracklet>, Vec<ProcessedTracklet>), CliError> {
    if opts.ids == 0 || opts.tracklets_per_id == 0 {
        return Err(CliError::Usage("ids and tracklets-per-id must be at least 1".into()));
    }
    if opts.holdout == 0 || opts.frames <= opts.holdout {
        return Err(CliError::Usage(format!(
            "frames ({}) must exceed holdout ({}) and holdout must be at least 1",
            opts.frames, opts.holdout
        )));
    }
    if !(opts.fps.is_finite() && opts.fps > 0.0) {
        return Err(CliError::Usage(format!("fps {} must be positive", opts.fps)));
    }

    let effect = condition_effect(Condition::Nm);
    let mut train = Vec::new();
    let mut eval = Vec::new();
    for person in 0..opts.ids as u64 {
        let lat = latents(opts.seed, person, opts.ids);
        for k in 0..opts.tracklets_per_id as u64 {
            let id = person * opts.tracklets_per_id as u64 + k;
            let mut rng = ChaCha8Rng::seed_from_u64(
                opts.seed ^ id.wrapping_mul(0xD1B5_4A32_D192_ED03).wrapping_add(1),
            );
            let full =
                walking_tracklet(id, &lat, opts.frames, opts.fps, 1.0, &effect, &mut rng);
            let split = opts.frames - opts.holdout;
            train.push(ProcessedTracklet {
                id,
                fps: full.fps,
                frames: full.frames[..split].to_vec(),
                attributes: full.attributes.clone(),
            });
            eval.push(ProcessedTracklet {
                id,
                fps: full.fps,
                frames: full.frames[split..].to_vec(),
                attributes: full.attributes,
            });
        }
    }
    Ok((train, eval))
}

const CONDITION_CODES: [(Condition, u64); 3] =
    [(Condition::Nm, 1), (Condition::Cl, 2), (Condition::Bg, 3)];

/// Tracklet id layout for protocol-tagged corpora:
/// `subject·1_000_000 + condition·100_000 + run·10_000 + angle`, with
/// condition codes NM=1, CL=2, BG=3 and the angle in degrees.
pub fn encode_protocol_id(subject: u64, condition: Condition, run: u64, angle: u16) -> u64 {
    assert!(run < 10, "run index must be a single digit");
    assert!(angle < 10_000);
    let code = CONDITION_CODES
        .iter()
        .find(|(c, _)| *c == condition)
        .expect("every condition has a code")
        .1;
    subject * 1_000_000 + code * 100_000 + run * 10_000 + u64::from(angle)
}

pub fn decode_protocol_id(id: u64) -> Result<(u64, Condition, u64, u16), CliError> {
    let angle = id % 10_000;
    let run = (id / 10_000) % 10;
    let code = (id / 100_000) % 10;
    let subject = id / 1_000_000;
    let condition = CONDITION_CODES
        .iter()
        .find(|(_, c)| *c == code)
        .map(|(cond, _)| *cond)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "tracklet id {id} does not follow the subject/condition/run/angle layout"
            ))
        })?;
    Ok((subject, condition, run, angle as u16))
}

/// Protocol-shaped corpus: every (subject, angle, condition, run) cell gets
/// one tracklet, with camera angle scaling lateral motion and conditions
/// damping arm swing.
pub fn synth_mini_casia(opts: &MiniCasiaOptions) -> Result<Vec<ProcessedTracklet>, CliError> {
    if opts.subjects == 0 || opts.runs_per_cell == 0 || opts.runs_per_cell > 9 {
        return Err(CliError::Usage(
            "subjects must be at least 1 and runs-per-cell between 1 and 9".into(),
        ));
    }
    if opts.angles.is_empty() || opts.angles.iter().any(|&a| a >= 10_000) {
        return Err(CliError::Usage("angles must be non-empty and below 10000".into()));
    }
    if opts.frames == 0 || !(opts.fps.is_finite() && opts.fps > 0.0) {
        return Err(CliError::Usage("frames and fps must be positive".into()));
    }

    let mut out = Vec::new();
    for subject in 0..opts.subjects as u64 {
        let lat = latents(opts.seed, subject, opts.subjects);
        for &angle in &opts.angles {
            let view = 0.3 + 0.7 * f64::from(angle).to_radians().sin();
            for (condition, _) in CONDITION_CODES {
                let effect = condition_effect(condition);
                for run in 0..opts.runs_per_cell as u64 {
                    let id = encode_protocol_id(subject, condition, run, angle);
                    let mut rng = ChaCha8Rng::seed_from_u64(
                        opts.seed ^ id.wrapping_mul(0xA076_1D64_78BD_642F).wrapping_add(2),
                    );
                    out.push(walking_tracklet(
                        id, &lat, opts.frames, opts.fps, view, &effect, &mut rng,
                    ));
                }
            }
        }
    }
    Ok(out)
}
