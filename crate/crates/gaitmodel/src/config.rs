use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// The three standard encoder depths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelSize {
    Sm,
    Md,
    Xl,
}

impl ModelSize {
    pub const ALL: [ModelSize; 3] = [ModelSize::Sm, ModelSize::Md, ModelSize::Xl];

    pub fn num_layers(&self) -> usize {
        match self {
            ModelSize::Sm => 4,
            ModelSize::Md => 8,
            ModelSize::Xl => 12,
        }
    }

    pub fn parse(s: &str) -> Result<Self, ModelError> {
        match s.to_ascii_lowercase().as_str() {
            "sm" => Ok(ModelSize::Sm),
            "md" => Ok(ModelSize::Md),
            "xl" => Ok(ModelSize::Xl),
            other => Err(ModelError::BadConfig(format!("unknown model size {other:?}"))),
        }
    }
}

impl fmt::Display for ModelSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelSize::Sm => "SM",
            ModelSize::Md => "MD",
            ModelSize::Xl => "XL",
        })
    }
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub num_layers: usize,
    pub d_model: usize,
    pub num_heads: usize,
    pub d_ff: usize,
    pub d_proj: usize,
    pub n_attributes: usize,
    pub input_dim: usize,
    /// Longest supported sequence; also the crop length used by `embed`.
    pub max_t: usize,
    /// Dropout probability inside encoder blocks; 0 disables it.
    pub dropout: f64,
}

impl ModelConfig {
    /// The standard configuration at one of the three published depths.
    pub fn sized(size: ModelSize) -> Self {
        ModelConfig {
            num_layers: size.num_layers(),
            d_model: 256,
            num_heads: 8,
            d_ff: 256,
            d_proj: 128,
            n_attributes: 42,
            input_dim: 54,
            max_t: 48,
            dropout: 0.0,
        }
    }

    /// A two-layer, width-32 configuration small enough for exhaustive
    /// gradient checking.
    pub fn tiny() -> Self {
        ModelConfig {
            num_layers: 2,
            d_model: 32,
            num_heads: 4,
            d_ff: 32,
            d_proj: 16,
            n_attributes: 42,
            input_dim: 54,
            max_t: 8,
            dropout: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.d_model == 0 || self.num_heads == 0 || self.d_model % self.num_heads != 0 {
            return Err(ModelError::BadConfig(format!(
                "d_model {} must be a positive multiple of num_heads {}",
                self.d_model, self.num_heads
            )));
        }
        if self.input_dim != 54 {
            return Err(ModelError::BadConfig(format!(
                "input_dim must be 54 (18 joints x 3 values), got {}",
                self.input_dim
            )));
        }
        for (name, v) in [
            ("num_layers", self.num_layers),
            ("d_ff", self.d_ff),
            ("d_proj", self.d_proj),
            ("n_attributes", self.n_attributes),
            ("max_t", self.max_t),
        ] {
            if v == 0 {
                return Err(ModelError::BadConfig(format!("{name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::BadConfig(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.num_heads
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sized_configs_are_valid_and_deepen() {
        let mut prev = 0;
        for size in ModelSize::ALL {
            let cfg = ModelConfig::sized(size);
            cfg.validate().unwrap();
            assert!(cfg.num_layers > prev);
            prev = cfg.num_layers;
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = ModelConfig::tiny();
        cfg.num_heads = 5;
        assert!(cfg.validate().is_err());
        let mut cfg = ModelConfig::tiny();
        cfg.input_dim = 36;
        assert!(cfg.validate().is_err());
        let mut cfg = ModelConfig::tiny();
        cfg.dropout = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn size_names_round_trip() {
        for size in ModelSize::ALL {
            assert_eq!(ModelSize::parse(&size.to_string()).unwrap(), size);
        }
    }
}
