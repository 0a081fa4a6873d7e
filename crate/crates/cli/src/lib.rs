//! Experiment harness: configuration files, seeded parallel runs, CSV and
//! binary outputs, and run manifests.

pub mod config;
pub mod io;
pub mod manifest;
pub mod run;
pub mod seeds;

pub use config::{ConfigError, ExperimentConfig};
pub use run::{run_experiment, Mode, RunOutcome};
