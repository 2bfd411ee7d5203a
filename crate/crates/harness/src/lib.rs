//! Config-driven experiment harness over the resampled off-policy
//! prediction library: learning curves, sensitivity sweeps, update-variance
//! studies, multi-seed aggregation, and the estimator property suite.

pub mod config;
pub mod learner;
pub mod output;
pub mod runner;
pub mod theory;
pub mod variance_study;

pub use config::{ConfigError, EnvName, ExperimentConfig};
pub use runner::{RunPoint, RunRecord};
