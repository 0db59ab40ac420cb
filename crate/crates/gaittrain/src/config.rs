use serde::{Deserialize, Serialize};

use crate::error::TrainError;

/// Loss, schedule, and loop settings.
///
/// Defaults are desk-scale (batch 64, 200 epochs); full-scale values
/// (batch 1024, 400 epochs) belong in run configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// SupCon temperature.
    pub tau: f64,
    /// Appearance-loss weight in the combined loss.
    pub lambda: f64,
    pub lr_min: f64,
    pub lr_max: f64,
    /// Length of one triangular learning-rate cycle, in epochs.
    pub cycle_epochs: usize,
    pub total_epochs: usize,
    /// Fine-tuning starts here and decays linearly to zero.
    pub finetune_lr0: f64,
    pub finetune_epochs: usize,
    /// Per-layer factor for layer-wise learning-rate decay.
    pub llrd_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            tau: 0.001,
            lambda: 0.5,
            lr_min: 0.0001,
            lr_max: 0.001,
            cycle_epochs: 20,
            total_epochs: 200,
            finetune_lr0: 0.0001,
            finetune_epochs: 200,
            llrd_decay: 0.9,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.tau <= 0.0 || !self.tau.is_finite() {
            return Err(TrainError::BadTemperature(self.tau));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(TrainError::BadConfig(format!(
                "lambda {} must be finite and non-negative",
                self.lambda
            )));
        }
        if !(self.lr_min.is_finite() && self.lr_max.is_finite() && 0.0 < self.lr_min) {
            return Err(TrainError::BadConfig(format!(
                "learning-rate range [{}, {}] must be positive and finite",
                self.lr_min, self.lr_max
            )));
        }
        if self.lr_min > self.lr_max {
            return Err(TrainError::BadConfig(format!(
                "lr_min {} exceeds lr_max {}",
                self.lr_min, self.lr_max
            )));
        }
        if !(self.finetune_lr0.is_finite() && self.finetune_lr0 > 0.0) {
            return Err(TrainError::BadConfig(format!(
                "finetune_lr0 {} must be positive",
                self.finetune_lr0
            )));
        }
        if !(0.0 < self.llrd_decay && self.llrd_decay <= 1.0) {
            return Err(TrainError::BadConfig(format!(
                "llrd_decay {} outside (0, 1]",
                self.llrd_decay
            )));
        }
        for (name, v) in [
            ("batch_size", self.batch_size),
            ("cycle_epochs", self.cycle_epochs),
            ("total_epochs", self.total_epochs),
            ("finetune_epochs", self.finetune_epochs),
        ] {
            if v == 0 {
                return Err(TrainError::BadConfig(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn bad_values_are_rejected() {
        let mut c = TrainConfig::default();
        c.tau = 0.0;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::default();
        c.lr_min = 0.01;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::default();
        c.lambda = -0.5;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::default();
        c.llrd_decay = 0.0;
        assert!(c.validate().is_err());
    }
}
