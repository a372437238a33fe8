//! Experiment harness: extraction, training, evaluation, attribution and
//! reporting driven by one TOML configuration.

pub mod cli;
pub mod config;
pub mod error;
pub mod extract;
pub mod pipeline;
pub mod report;
pub mod store;

pub use config::{ExperimentConfig, Overrides, DEFAULT_CONFIG};
pub use error::{HarnessError, Result, Stage};
pub use pipeline::{run_until, RunManifest};
pub use report::report;
