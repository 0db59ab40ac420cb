use std::path::PathBuf;

use thiserror::Error;

/// Errors split by exit code: usage and configuration problems exit 1,
/// failures during a valid run exit 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("input file {0} does not exist")]
    MissingInput(PathBuf),

    #[error("run directory {0} already exists; pick another --run-name or remove it")]
    RunDirExists(PathBuf),

    #[error("configuration: {0}")]
    Config(String),

    #[error("gradient check failed: max relative error {max_rel_err:.3e} (tolerance {tolerance:.0e})")]
    GradCheckFailed { max_rel_err: f64, tolerance: f64 },

    #[error(transparent)]
    Skeleton(#[from] skelcore::SkelError),

    #[error(transparent)]
    Pipe(#[from] gaitpipe::PipeError),

    #[error(transparent)]
    Model(#[from] gaitmodel::ModelError),

    #[error(transparent)]
    Train(#[from] gaittrain::TrainError),

    #[error(transparent)]
    Eval(#[from] gaiteval::EvalError),

    #[error(transparent)]
    Tensor(#[from] tensorad::TensorError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for usage/config errors, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_)
            | CliError::MissingInput(_)
            | CliError::RunDirExists(_)
            | CliError::Config(_) => 1,
            _ => 2,
        }
    }
}
