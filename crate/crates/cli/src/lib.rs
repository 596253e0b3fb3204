//! Config-driven experiment runner for `scarlab-core`.

pub mod config;
pub mod output;
pub mod run;

pub use config::{load, Experiment, ExperimentConfig};
pub use run::{run, Command, RunOptions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("tolerance failure: {0}")]
    Tolerance(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Tolerance(_) => 2,
        }
    }
}

impl From<scarlab_core::Error> for CliError {
    fn from(e: scarlab_core::Error) -> Self {
        use scarlab_core::Error as E;
        match e {
            E::Dimension(_) | E::Validation(_) | E::Precondition(_) | E::CostCap(_) | E::Overflow(_) | E::ParityObstruction { .. } => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Tolerance(e.to_string()),
        }
    }
}
