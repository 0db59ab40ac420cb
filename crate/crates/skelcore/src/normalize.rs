use crate::skeleton::{joint, Joint, Skeleton, NUM_JOINTS};

/// Denominators below this are substituted and the frame flagged degenerate.
pub const DEGENERACY_EPSILON: f64 = 1e-6;

/// Result of pose normalization. `degenerate` is set when either scale
/// denominator fell below [`DEGENERACY_EPSILON`] and was substituted;
/// callers may drop such frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub skeleton: Skeleton,
    pub degenerate: bool,
}

/// Centers a pose on the pelvis and removes camera scale.
///
/// The pelvis is the midpoint of the two hips. Every x is shifted by the
/// pelvis x and divided by the horizontal shoulder distance; every y is
/// shifted by the pelvis y and divided by the neck-to-pelvis vertical
/// distance. Both denominators are measured on the input pose, so
/// translating or uniformly scaling the input leaves the output unchanged.
/// Confidences pass through untouched.
pub fn normalize_skeleton(input: &Skeleton) -> Normalized {
    let js = input.joints();
    let pelvis_x = (js[joint::R_HIP].x + js[joint::L_HIP].x) / 2.0;
    let pelvis_y = (js[joint::R_HIP].y + js[joint::L_HIP].y) / 2.0;

    let mut degenerate = false;
    let mut shoulder_dx = (js[joint::R_SHOULDER].x - js[joint::L_SHOULDER].x).abs();
    if shoulder_dx < DEGENERACY_EPSILON {
        shoulder_dx = DEGENERACY_EPSILON;
        degenerate = true;
    }
    let mut torso_dy = (js[joint::NECK].y - pelvis_y).abs();
    if torso_dy < DEGENERACY_EPSILON {
        torso_dy = DEGENERACY_EPSILON;
        degenerate = true;
    }

    let mut out = [Joint::new(0.0, 0.0, 0.0); NUM_JOINTS];
    for (o, j) in out.iter_mut().zip(js.iter()) {
        *o = Joint::new(
            (j.x - pelvis_x) / shoulder_dx,
            (j.y - pelvis_y) / torso_dy,
            j.confidence,
        );
    }
    Normalized {
        skeleton: Skeleton::from_joints_unchecked(out),
        degenerate,
    }
}
