//! Experiment harness around the `lazydual` simulator: TOML configs, trace
//! files and run summaries.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod reports;

pub use config::{ExperimentConfig, Format, Overrides};
pub use error::{CliError, Result};
pub use experiment::{run_all, write_outputs, Setup};
