use std::path::Path;

use gaitmodel::{ModelConfig, ModelSize};
use gaitpipe::PipelineConfig;
use gaittrain::TrainConfig;
use serde::{Deserialize, Serialize};
use skelcore::AugmentationParams;

use crate::error::CliError;

/// Everything a run needs, loadable from one TOML file. Omitted sections
/// take their defaults; unknown keys anywhere are rejected. Each run
/// directory stores the resolved config as `config.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Model initialization seed (training draws its own from `train.seed`).
    pub seed: u64,
    pub model: Option<ModelConfig>,
    pub train: TrainConfig,
    pub augment: AugmentationParams,
    pub pipeline: PipelineConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        if !path.exists() {
            return Err(CliError::MissingInput(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// The encoder configuration: explicit `[model]` section if present,
    /// else the named preset (default SM).
    pub fn model_config(&self, size: Option<ModelSize>) -> Result<ModelConfig, CliError> {
        let config = match (size, &self.model) {
            (Some(size), _) => ModelConfig::sized(size),
            (None, Some(model)) => model.clone(),
            (None, None) => ModelConfig::sized(ModelSize::Sm),
        };
        config.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.train.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.augment.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.pipeline.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.train.batch_size, 64);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("banana = 1").unwrap_err();
        assert!(err.to_string().contains("banana"));
        let err = toml::from_str::<RunConfig>("[train]\nbatch_sise = 8").unwrap_err();
        assert!(err.to_string().contains("batch_sise"));
    }

    #[test]
    fn sections_merge_with_defaults() {
        let cfg: RunConfig =
            toml::from_str("seed = 9\n[train]\nbatch_size = 8\n[augment]\ncrop_length = 16\n")
                .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.train.batch_size, 8);
        assert_eq!(cfg.train.tau, 0.001);
        assert_eq!(cfg.augment.crop_length, 16);
        let round: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn model_section_and_presets() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.model_config(None).unwrap().num_layers, 4);
        assert_eq!(
            cfg.model_config(Some(ModelSize::Xl)).unwrap().num_layers,
            12
        );
        let with_model: RunConfig = toml::from_str(
            "[model]\nnum_layers = 2\nd_model = 32\nnum_heads = 4\nd_ff = 32\nd_proj = 16\nn_attributes = 42\ninput_dim = 54\nmax_t = 8\ndropout = 0.0\n",
        )
        .unwrap();
        assert_eq!(with_model.model_config(None).unwrap().num_layers, 2);
        assert_eq!(
            with_model.model_config(Some(ModelSize::Sm)).unwrap().num_layers,
            4
        );
    }
}
