//! Experiment runner for the chaosbayes dual-model framework: configuration,
//! orchestration of the Lorenz–Lorenz and Lorenz–Rössler experiments, and
//! CSV/SVG artifact emission.

pub mod config;
mod error;
pub mod experiments;
pub mod output;
pub mod plot;

pub use config::{Experiment, ExperimentConfig, RawConfig};
pub use error::{CliError, Result};
pub use experiments::{run, RunReport};

/// Environment variable naming the output root, honored only when `--out` is absent.
pub const OUT_ENV: &str = "CHAOSBAYES_OUT";
