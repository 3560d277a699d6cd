//! Configuration, orchestration and artifact handling for the `meanflow`
//! command-line tool.

pub mod config;
pub mod error;
pub mod experiment;
pub mod verify;

pub use config::{parse_config, ConfigErrors, ExperimentConfig, Violation};
pub use error::CliError;
pub use experiment::{run_ensemble, run_experiment, RunReport};
pub use verify::{verify, VerifySummary};
