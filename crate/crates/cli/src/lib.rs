//! Configuration and experiment runners behind the `cra` binary.

pub mod commands;
pub mod config;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind, PolicyName};
