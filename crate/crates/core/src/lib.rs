//! Off-policy value prediction with resampled replay.
//!
//! Experience generated by one behavior policy is stored in a sliding-window
//! buffer and consumed by update estimators that correct for a different
//! target policy, either by reweighting updates with importance ratios or by
//! resampling the buffer proportionally to those ratios and applying plain
//! on-policy updates. The crate bundles the microworld environments, buffer,
//! estimators, linear function approximation, and the ground-truth oracles
//! used to verify the estimators' bias and variance behavior.

pub mod buffer;
pub mod envs;
pub mod error;
pub mod estimators;
pub mod gvf;
pub mod linear;
pub mod oracle;

pub use error::{Error, Result};
