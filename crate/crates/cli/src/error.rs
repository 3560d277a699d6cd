use std::path::PathBuf;

use thiserror::Error;

use crate::config::ConfigErrors;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigErrors),

    #[error("{0}")]
    Core(#[from] meanflow_core::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("verification failed: {0} check(s) did not pass")]
    Verification(usize),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 0 ok, 1 other failures, 2 configuration, 3 blow-up, 4 verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if is_blow_up(e) => 3,
            CliError::Verification(_) => 4,
            _ => 1,
        }
    }
}

fn is_blow_up(e: &meanflow_core::Error) -> bool {
    match e {
        meanflow_core::Error::BlowUp(_) => true,
        meanflow_core::Error::Realization { source, .. } => is_blow_up(source),
        _ => false,
    }
}
