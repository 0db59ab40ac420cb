use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::CliError;

/// Environment variable naming the directory run directories live under.
pub const RUNS_DIR_ENV: &str = "GAIT_RUNS_DIR";

/// Root for run directories: `$GAIT_RUNS_DIR`, or `./runs`.
pub fn runs_root() -> PathBuf {
    std::env::var_os(RUNS_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Creates the run directory `<root>/<name>` and stores the resolved
/// config snapshot inside. Refuses to reuse an existing directory.
pub fn create_run_dir(name: &str, config: &RunConfig) -> Result<PathBuf, CliError> {
    if name.is_empty() || name.contains(['/', '\\']) {
        return Err(CliError::Usage(format!(
            "run name {name:?} must be a plain directory name"
        )));
    }
    let dir = runs_root().join(name);
    if dir.exists() {
        return Err(CliError::RunDirExists(dir));
    }
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("config.toml"), config.to_toml())?;
    Ok(dir)
}

pub fn require_input(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingInput(path.to_path_buf()))
    }
}
