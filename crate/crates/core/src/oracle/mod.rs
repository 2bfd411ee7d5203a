//! Ground-truth oracles and theorem-level checks: dynamic-programming and
//! rollout value computation, error metrics, closed-form update variances,
//! resampling-distribution distances, and the bias-decay study.

pub mod bias;
pub mod dp;
pub mod resampling;
pub mod rollout;
pub mod variance;

pub use bias::{bias_decay_study, spearman, BiasEstimate};
pub use dp::{
    bellman_residual, dp_true_values, exact_target_transition_dist, expected_update,
    stationary_distribution, IidSampler, TinyMdp, TINY_GAMMA,
};
pub use resampling::{
    buffer_resampling_dist, resampling_distribution_check, TransitionKey,
};
pub use rollout::{behavior_probe_set, rollout_horizon, rollout_true_values, ProbeValues};
pub use variance::{
    buffer_closed_form_variances, closed_form_variances, constant_norm_variance_identity,
    empirical_update_variance, resampled_variance, tree_resampled_expectation,
    variance_gap_under_premise, ClosedFormVariances, EmpiricalVariance, UpdateParts,
};

use crate::linear::ValueFn;

/// Per-state ground-truth values for a tabular environment, indexed by
/// dense value-state index.
#[derive(Debug, Clone)]
pub struct TrueValues {
    pub values: Vec<f64>,
}

/// Mean absolute value error of a learned value function against ground
/// truth over an evaluation set.
pub fn ave<S>(values: &dyn ValueFn<S>, states: &[S], truth: &[f64]) -> f64 {
    assert_eq!(states.len(), truth.len(), "truth must cover the evaluation set");
    if states.is_empty() {
        return 0.0;
    }
    states
        .iter()
        .zip(truth)
        .map(|(s, v)| (values.value(s) - v).abs())
        .sum::<f64>()
        / states.len() as f64
}
