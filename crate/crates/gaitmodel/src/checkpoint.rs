use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tensorad::{load_archive, save_archive, Tensor};

use crate::config::ModelConfig;
use crate::error::ModelError;
use crate::model::GaitModel;

/// Sidecar metadata written next to every tensor archive: the full
/// configuration plus free-form provenance (dataset, regime, epochs, …).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCard {
    pub config: ModelConfig,
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
}

/// Where [`save_checkpoint`] put the two files.
#[derive(Debug, Clone)]
pub struct CheckpointPaths {
    pub archive: PathBuf,
    pub card: PathBuf,
}

/// Writes `<name>.gta` (parameters) and `<name>.toml` (model card) under
/// `dir`, creating the directory if needed.
pub fn save_checkpoint(
    model: &GaitModel,
    dir: &Path,
    name: &str,
    provenance: &BTreeMap<String, String>,
) -> Result<CheckpointPaths, ModelError> {
    if name.is_empty() || name.contains(['/', '\\', '.']) {
        return Err(ModelError::BadCheckpoint(format!(
            "invalid checkpoint name {name:?}"
        )));
    }
    fs::create_dir_all(dir)?;
    let paths = CheckpointPaths {
        archive: dir.join(format!("{name}.gta")),
        card: dir.join(format!("{name}.toml")),
    };
    let entries: Vec<(&str, &Tensor)> = model
        .params()
        .iter()
        .map(|(n, t)| (n.as_str(), t))
        .collect();
    save_archive(&paths.archive, &entries)?;
    let card = ModelCard {
        config: model.config().clone(),
        provenance: provenance.clone(),
    };
    let text = toml::to_string_pretty(&card).map_err(|e| ModelError::BadCard(e.to_string()))?;
    fs::write(&paths.card, text)?;
    Ok(paths)
}

/// Loads a checkpoint saved by [`save_checkpoint`], validating every
/// tensor shape against the card's configuration.
pub fn load_checkpoint(dir: &Path, name: &str) -> Result<(GaitModel, ModelCard), ModelError> {
    let card_path = dir.join(format!("{name}.toml"));
    let text = fs::read_to_string(&card_path)?;
    let card: ModelCard = toml::from_str(&text)
        .map_err(|e| ModelError::BadCard(format!("{}: {e}", card_path.display())))?;
    let tensors = load_archive(&dir.join(format!("{name}.gta")))?;
    let model = GaitModel::from_params(card.config.clone(), tensors)?;
    Ok((model, card))
}
