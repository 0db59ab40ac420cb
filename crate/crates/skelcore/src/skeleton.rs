use crate::error::SkelError;

/// Number of joints in the 18-point pose layout.
pub const NUM_JOINTS: usize = 18;

/// Values per flattened skeleton: (x, y, confidence) per joint.
pub const FLAT_LEN: usize = NUM_JOINTS * 3;

/// Joint indices of the 18-point layout.
///
/// The order is fixed and load-bearing: normalization reads hips, shoulders
/// and neck by index, and the horizontal mirror swaps left/right pairs.
pub mod joint {
    pub const NOSE: usize = 0;
    pub const NECK: usize = 1;
    pub const R_SHOULDER: usize = 2;
    pub const R_ELBOW: usize = 3;
    pub const R_WRIST: usize = 4;
    pub const L_SHOULDER: usize = 5;
    pub const L_ELBOW: usize = 6;
    pub const L_WRIST: usize = 7;
    pub const R_HIP: usize = 8;
    pub const R_KNEE: usize = 9;
    pub const R_ANKLE: usize = 10;
    pub const L_HIP: usize = 11;
    pub const L_KNEE: usize = 12;
    pub const L_ANKLE: usize = 13;
    pub const R_EYE: usize = 14;
    pub const L_EYE: usize = 15;
    pub const R_EAR: usize = 16;
    pub const L_EAR: usize = 17;
}

/// Left/right joint pairs exchanged by a horizontal mirror.
pub const FLIP_PAIRS: [(usize, usize); 8] = [
    (joint::R_SHOULDER, joint::L_SHOULDER),
    (joint::R_ELBOW, joint::L_ELBOW),
    (joint::R_WRIST, joint::L_WRIST),
    (joint::R_HIP, joint::L_HIP),
    (joint::R_KNEE, joint::L_KNEE),
    (joint::R_ANKLE, joint::L_ANKLE),
    (joint::R_EYE, joint::L_EYE),
    (joint::R_EAR, joint::L_EAR),
];

/// Joints whose displacement defines leg speed: both knees and both ankles.
pub const LEG_JOINTS: [usize; 4] = [
    joint::R_KNEE,
    joint::L_KNEE,
    joint::R_ANKLE,
    joint::L_ANKLE,
];

/// A single 2-D joint estimate with detector confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Joint {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

impl Joint {
    pub fn new(x: f64, y: f64, confidence: f64) -> Self {
        Joint { x, y, confidence }
    }

    fn validate(&self, index: usize) -> Result<(), SkelError> {
        if !(self.x.is_finite() && self.y.is_finite()) {
            return Err(SkelError::NonFiniteJoint {
                joint: index,
                x: self.x,
                y: self.y,
            });
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(SkelError::ConfidenceRange {
                joint: index,
                confidence: self.confidence,
            });
        }
        Ok(())
    }
}

/// An 18-joint pose. Coordinates are finite, confidences lie in [0, 1];
/// both are enforced at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    joints: [Joint; NUM_JOINTS],
}

impl Skeleton {
    pub fn new(joints: [Joint; NUM_JOINTS]) -> Result<Self, SkelError> {
        for (i, j) in joints.iter().enumerate() {
            j.validate(i)?;
        }
        Ok(Skeleton { joints })
    }

    /// Builds a skeleton without re-validating. For internal use by
    /// transforms that cannot break the invariants.
    pub(crate) fn from_joints_unchecked(joints: [Joint; NUM_JOINTS]) -> Self {
        Skeleton { joints }
    }

    pub fn joints(&self) -> &[Joint; NUM_JOINTS] {
        &self.joints
    }

    pub fn joint(&self, index: usize) -> &Joint {
        &self.joints[index]
    }

    /// Mean confidence over all 18 joints.
    pub fn mean_confidence(&self) -> f64 {
        self.joints.iter().map(|j| j.confidence).sum::<f64>() / NUM_JOINTS as f64
    }

    /// Mean confidence over the two ankle joints.
    pub fn feet_confidence(&self) -> f64 {
        (self.joints[joint::R_ANKLE].confidence + self.joints[joint::L_ANKLE].confidence) / 2.0
    }

    /// Flattens to `[x0, y0, c0, x1, y1, c1, ...]` in joint order.
    pub fn flatten(&self) -> [f64; FLAT_LEN] {
        let mut out = [0.0; FLAT_LEN];
        for (i, j) in self.joints.iter().enumerate() {
            out[3 * i] = j.x;
            out[3 * i + 1] = j.y;
            out[3 * i + 2] = j.confidence;
        }
        out
    }

    /// Inverse of [`Skeleton::flatten`]. Validates length and joint invariants.
    pub fn unflatten(values: &[f64]) -> Result<Self, SkelError> {
        if values.len() != FLAT_LEN {
            return Err(SkelError::BadFlatLength {
                expected: FLAT_LEN,
                got: values.len(),
            });
        }
        let mut joints = [Joint::new(0.0, 0.0, 0.0); NUM_JOINTS];
        for (i, chunk) in values.chunks_exact(3).enumerate() {
            joints[i] = Joint::new(chunk[0], chunk[1], chunk[2]);
        }
        Skeleton::new(joints)
    }

    /// Mirrors the pose horizontally: negates every x and swaps each
    /// left/right joint pair. Applying it twice restores the input.
    pub fn mirrored(&self) -> Skeleton {
        let mut joints = self.joints;
        for &(r, l) in FLIP_PAIRS.iter() {
            joints.swap(r, l);
        }
        for j in joints.iter_mut() {
            j.x = -j.x;
        }
        Skeleton { joints }
    }
}
