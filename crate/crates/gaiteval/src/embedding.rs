use std::fmt;

use crate::error::EvalError;

/// Walking condition tag: normal, clothing change, or carrying a bag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    Nm,
    Cl,
    Bg,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::Nm, Condition::Cl, Condition::Bg];

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NM" => Some(Condition::Nm),
            "CL" => Some(Condition::Cl),
            "BG" => Some(Condition::Bg),
            _ => None,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Nm => "NM",
            Condition::Cl => "CL",
            Condition::Bg => "BG",
        })
    }
}

/// A unit-norm embedding with its identity and optional protocol tags.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEmbedding {
    vector: Vec<f64>,
    pub identity: u64,
    pub viewpoint: Option<u16>,
    pub condition: Option<Condition>,
    pub gender: Option<bool>,
}

impl LabeledEmbedding {
    /// Builds an embedding, rejecting vectors whose norm strays from 1 by
    /// more than 1e-6.
    pub fn new(vector: Vec<f64>, identity: u64) -> Result<Self, EvalError> {
        if vector.is_empty() {
            return Err(EvalError::EmptyInput { what: "embedding vector" });
        }
        let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(EvalError::NotUnitNorm { norm });
        }
        Ok(LabeledEmbedding {
            vector,
            identity,
            viewpoint: None,
            condition: None,
            gender: None,
        })
    }

    pub fn with_viewpoint(mut self, degrees: u16) -> Self {
        self.viewpoint = Some(degrees);
        self
    }

    pub fn with_condition(mut self, condition: Condition) -> Self {
        self.condition = Some(condition);
        self
    }

    pub fn with_gender(mut self, gender: bool) -> Self {
        self.gender = Some(gender);
        self
    }

    pub fn vector(&self) -> &[f64] {
        &self.vector
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
