//! Configuration, window selection and orchestration of the experiments.

pub mod config;
pub mod delta;
pub mod experiments;
pub mod output;

pub use config::{ExperimentConfig, ExperimentKind, LawConfig, ValidatedConfig};
pub use delta::{choose_delta, DeltaChoice};
pub use output::run_experiment;
