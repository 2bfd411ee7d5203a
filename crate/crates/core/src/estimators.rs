//! Update-direction estimators over replay mini-batches.
//!
//! For a transition `i` the on-policy update is `Delta_i = delta_i *
//! grad V(s_i)`, the TD error times the (linear) value gradient. The
//! estimators differ in how they correct for the behavior/target mismatch:
//!
//! - resampled mean (`mean_update`): plain average of `Delta` over a batch
//!   drawn proportionally to the stored ratios; the distribution is
//!   corrected, the update is not.
//! - bias-corrected resampling (`bias_corrected_update`): the same average
//!   pre-multiplied by the buffer mean ratio.
//! - importance sampling (`is_update`): ratio-weighted average over a
//!   uniform batch, optionally with clipped ratios (`vtrace_update`).
//! - weighted importance sampling: self-normalized variants dividing by the
//!   batch ratio sum (`wis_minibatch_update`), the buffer ratio sum
//!   (`wis_buffer_update`), or using the whole buffer
//!   (`wis_optimal_update`).
//!
//! All estimators return unscaled directions; learning-rate and optimizer
//! scaling happen downstream. Estimators are pure functions of their inputs
//! and the RNG draws that produced the batch.

use serde::{Deserialize, Serialize};

use crate::buffer::{MiniBatch, ReplayBuffer};
use crate::error::{Error, Result};
use crate::gvf::{Action, Policy, Transition};
use crate::linear::{Featurizer, LinearValueFn, SparseVec, TabularFeaturizer, UpdateEstimate, ValueFn};

/// Estimator selection, as named in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum EstimatorKind {
    Onpolicy,
    Is,
    Ir,
    Bcir,
    WisMinibatch,
    WisBuffer,
    WisOptimal,
    Vtrace { clip: f64 },
    Sarsa0,
    WisTd0 { u0: f64 },
    IrWisTd0 { u0: f64 },
}

impl EstimatorKind {
    /// Stable config name.
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Onpolicy => "onpolicy",
            EstimatorKind::Is => "is",
            EstimatorKind::Ir => "ir",
            EstimatorKind::Bcir => "bcir",
            EstimatorKind::WisMinibatch => "wis_minibatch",
            EstimatorKind::WisBuffer => "wis_buffer",
            EstimatorKind::WisOptimal => "wis_optimal",
            EstimatorKind::Vtrace { .. } => "vtrace",
            EstimatorKind::Sarsa0 => "sarsa0",
            EstimatorKind::WisTd0 { .. } => "wis_td0",
            EstimatorKind::IrWisTd0 { .. } => "ir_wis_td0",
        }
    }
}

fn delta_and_phi<F: Featurizer>(
    vf: &LinearValueFn<F>,
    t: &Transition<F::State>,
) -> (f64, SparseVec) {
    let phi = vf.features(&t.s);
    let bootstrap = if t.gamma_next == 0.0 {
        0.0
    } else {
        t.gamma_next * vf.value(&t.s_next)
    };
    let delta = t.cumulant + bootstrap - phi.dot(vf.weights());
    (delta, phi)
}

/// `delta_t * grad V(s_t)` for one transition: the TD error scaled into the
/// feature vector of the start state.
pub fn per_transition_delta<F: Featurizer>(
    vf: &LinearValueFn<F>,
    t: &Transition<F::State>,
) -> SparseVec {
    let (delta, mut phi) = delta_and_phi(vf, t);
    for v in &mut phi.values {
        *v *= delta;
    }
    phi
}

/// Unweighted batch mean of per-transition updates. This is the resampled
/// update (on a proportional batch) and the on-policy / uniform-replay
/// update (on a uniform batch); no ratio appears in the update itself.
pub fn mean_update<F: Featurizer>(
    batch: &MiniBatch<F::State>,
    vf: &LinearValueFn<F>,
) -> UpdateEstimate {
    let mut u = UpdateEstimate::zeros(vf.dim());
    for t in &batch.transitions {
        let (delta, phi) = delta_and_phi(vf, t);
        u.add_scaled(&phi, delta);
    }
    if !batch.is_empty() {
        u.scale(1.0 / batch.len() as f64);
    }
    u
}

/// Resampled mean pre-multiplied by the buffer mean ratio, which removes
/// the bias introduced when the buffer's average ratio deviates from 1.
pub fn bias_corrected_update<F: Featurizer>(
    batch: &MiniBatch<F::State>,
    rho_bar: f64,
    vf: &LinearValueFn<F>,
) -> UpdateEstimate {
    let mut u = mean_update(batch, vf);
    u.scale(rho_bar);
    u
}

/// Ratio-weighted mean over a uniform batch.
pub fn is_update<F: Featurizer>(
    batch: &MiniBatch<F::State>,
    vf: &LinearValueFn<F>,
) -> UpdateEstimate {
    let mut u = UpdateEstimate::zeros(vf.dim());
    for t in &batch.transitions {
        let (delta, phi) = delta_and_phi(vf, t);
        u.add_scaled(&phi, t.rho * delta);
    }
    if !batch.is_empty() {
        u.scale(1.0 / batch.len() as f64);
    }
    u
}

/// Importance sampling with ratios clipped at `clip`.
pub fn vtrace_update<F: Featurizer>(
    batch: &MiniBatch<F::State>,
    clip: f64,
    vf: &LinearValueFn<F>,
) -> UpdateEstimate {
    assert!(clip > 0.0, "clip threshold must be positive");
    let mut u = UpdateEstimate::zeros(vf.dim());
    for t in &batch.transitions {
        let (delta, phi) = delta_and_phi(vf, t);
        u.add_scaled(&phi, t.rho.min(clip) * delta);
    }
    if !batch.is_empty() {
        u.scale(1.0 / batch.len() as f64);
    }
    u
}

/// Self-normalized over the mini-batch: `sum rho_i Delta_i / sum rho_j`.
pub fn wis_minibatch_update<F: Featurizer>(
    batch: &MiniBatch<F::State>,
    vf: &LinearValueFn<F>,
) -> Result<UpdateEstimate> {
    let rho_total: f64 = batch.transitions.iter().map(|t| t.rho).sum();
    if rho_total <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    let mut u = UpdateEstimate::zeros(vf.dim());
    for t in &batch.transitions {
        let (delta, phi) = delta_and_phi(vf, t);
        u.add_scaled(&phi, t.rho * delta);
    }
    u.scale(1.0 / rho_total);
    Ok(u)
}

/// Mini-batch ratio-weighted sum normalized by the buffer:
/// `(n / k) * sum_batch rho_i Delta_i / sum_buffer rho_j`.
pub fn wis_buffer_update<F: Featurizer>(
    batch: &MiniBatch<F::State>,
    buffer_rho_sum: f64,
    buffer_len: usize,
    vf: &LinearValueFn<F>,
) -> Result<UpdateEstimate> {
    if buffer_rho_sum <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    let mut u = UpdateEstimate::zeros(vf.dim());
    for t in &batch.transitions {
        let (delta, phi) = delta_and_phi(vf, t);
        u.add_scaled(&phi, t.rho * delta);
    }
    if !batch.is_empty() {
        u.scale(buffer_len as f64 / (batch.len() as f64 * buffer_rho_sum));
    }
    Ok(u)
}

/// Whole-buffer self-normalized update: `sum_i (rho_i / sum_j rho_j) Delta_i`.
///
/// This equals the exact conditional expectation of the resampled mean
/// given the buffer, so it doubles as the closed-form route in the
/// expectation identity checks.
pub fn wis_optimal_update<F: Featurizer>(
    buf: &ReplayBuffer<F::State>,
    vf: &LinearValueFn<F>,
) -> Result<UpdateEstimate>
where
    F::State: Clone,
{
    let mut u = UpdateEstimate::zeros(vf.dim());
    let mut rho_total = 0.0;
    for t in buf.iter() {
        rho_total += t.rho;
        let (delta, phi) = delta_and_phi(vf, t);
        u.add_scaled(&phi, t.rho * delta);
    }
    if rho_total <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    u.scale(1.0 / rho_total);
    Ok(u)
}

/// Tabular action-value learner fed by consecutive stream transitions
/// `(s, a, s', a')`; needs no importance ratios. The derived state value is
/// `V(s) = sum_a pi(a|s) Q(s, a)`.
#[derive(Debug, Clone)]
pub struct SarsaLearner {
    q: Vec<f64>,
    feat: TabularFeaturizer,
    n_actions: usize,
}

impl SarsaLearner {
    pub fn new(feat: TabularFeaturizer, n_actions: usize) -> Self {
        Self { q: vec![0.0; feat.dim() * n_actions], feat, n_actions }
    }

    fn q_slot(&self, s: usize, a: Action) -> usize {
        let dense = self
            .feat
            .weight_index(s)
            .unwrap_or_else(|| panic!("state {s} has no action-value slot"));
        dense * self.n_actions + a.0
    }

    pub fn q(&self, s: usize, a: Action) -> f64 {
        self.q[self.q_slot(s, a)]
    }

    pub fn q_weights_mut(&mut self) -> &mut [f64] {
        &mut self.q
    }

    pub fn q_dim(&self) -> usize {
        self.q.len()
    }

    /// One-step TD update direction over the Q weights, using the behavior's
    /// actual next action.
    pub fn update_estimate(&self, t: &Transition<usize>, a_next: Action) -> UpdateEstimate {
        let bootstrap = if t.gamma_next == 0.0 {
            0.0
        } else {
            t.gamma_next * self.q(t.s_next, a_next)
        };
        let delta = t.cumulant + bootstrap - self.q(t.s, t.a);
        let mut u = UpdateEstimate::zeros(self.q.len());
        u.add_scaled(&SparseVec::unit(self.q_slot(t.s, t.a)), delta);
        u
    }

    /// `V(s) = sum_a pi(a|s) Q(s, a)` view for error measurement.
    pub fn derived_values<'a>(&'a self, target: &'a dyn Policy<usize>) -> SarsaValues<'a> {
        SarsaValues { learner: self, target }
    }
}

pub struct SarsaValues<'a> {
    learner: &'a SarsaLearner,
    target: &'a dyn Policy<usize>,
}

impl ValueFn<usize> for SarsaValues<'_> {
    fn value(&self, s: &usize) -> f64 {
        (0..self.learner.n_actions)
            .map(|a| self.target.prob(s, Action(a)) * self.learner.q(*s, Action(a)))
            .sum()
    }
}

/// Incremental weighted-importance-sampling TD(0) with per-weight usage
/// normalization. Follows the recursions
///
/// ```text
/// u_{i+1}     = (1 - eta phi o phi) o u_i + rho_i phi o phi
/// alpha_{i+1} = 1 (/) u_{i+1}
/// dbar_i      = C_i + gamma_i theta_i . phi'_i - theta_{i-1} . phi_i
/// theta_{i+1} = theta_i + alpha_{i+1} o rho_i (theta_{i-1} . phi_i
///               - theta_i . phi_i) phi_i + rho_i dbar_i alpha_{i+1} o phi_i
/// ```
///
/// with `o` the element-wise product, `(/)` element-wise division. Note the
/// asymmetry taken literally from the definition: the bootstrap term uses
/// the current weights, the subtracted term the previous ones.
#[derive(Debug, Clone)]
pub struct WisTd0State {
    theta: Vec<f64>,
    u: Vec<f64>,
    eta: f64,
    /// Values `theta_{i-1}` held at the indices the previous step changed
    /// (everywhere else `theta_{i-1} == theta_i`).
    prev_overrides: Vec<(usize, f64)>,
}

impl WisTd0State {
    /// `eta` is the stepsize-tuning ratio `mu / u0`.
    pub fn new(dim: usize, u0: f64, eta: f64) -> Self {
        assert!(u0 > 0.0, "initial usage must be positive");
        Self {
            theta: vec![0.0; dim],
            u: vec![u0; dim],
            eta,
            prev_overrides: Vec::new(),
        }
    }

    /// Test/diagnostic constructor with explicit weight history.
    pub fn from_parts(theta: Vec<f64>, theta_prev: Vec<f64>, u: Vec<f64>, eta: f64) -> Self {
        assert_eq!(theta.len(), theta_prev.len());
        assert_eq!(theta.len(), u.len());
        let prev_overrides = theta_prev
            .iter()
            .enumerate()
            .filter(|(i, p)| **p != theta[*i])
            .map(|(i, p)| (i, *p))
            .collect();
        Self { theta, u, eta, prev_overrides }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn usage(&self) -> &[f64] {
        &self.u
    }

    fn theta_prev_at(&self, i: usize) -> f64 {
        self.prev_overrides
            .iter()
            .find(|(j, _)| *j == i)
            .map(|(_, v)| *v)
            .unwrap_or(self.theta[i])
    }

    /// One update with the transition's own ratio in both recursions.
    pub fn step<F: Featurizer>(&mut self, feat: &F, t: &Transition<F::State>) {
        self.step_with(feat, t, t.rho, t.rho);
    }

    /// One update on a resampled transition: the ratio stays in the usage
    /// recursion but is replaced by 1 in the weight recursion, since the
    /// sampling already corrected the distribution.
    pub fn step_resampled<F: Featurizer>(&mut self, feat: &F, t: &Transition<F::State>) {
        self.step_with(feat, t, t.rho, 1.0);
    }

    fn step_with<F: Featurizer>(
        &mut self,
        feat: &F,
        t: &Transition<F::State>,
        rho_usage: f64,
        rho_update: f64,
    ) {
        let phi = feat.features(&t.s);
        let theta_phi: f64 = phi
            .indices
            .iter()
            .zip(&phi.values)
            .map(|(&i, &v)| self.theta[i] * v)
            .sum();
        let theta_prev_phi: f64 = phi
            .indices
            .iter()
            .zip(&phi.values)
            .map(|(&i, &v)| self.theta_prev_at(i) * v)
            .sum();
        let bootstrap = if t.gamma_next == 0.0 {
            0.0
        } else {
            t.gamma_next * feat.features(&t.s_next).dot(&self.theta)
        };
        let delta_bar = t.cumulant + bootstrap - theta_prev_phi;
        let correction = rho_update * (theta_prev_phi - theta_phi);

        let mut overrides = Vec::with_capacity(phi.indices.len());
        for (&i, &v) in phi.indices.iter().zip(&phi.values) {
            self.u[i] = (1.0 - self.eta * v * v) * self.u[i] + rho_usage * v * v;
            let alpha = 1.0 / self.u[i];
            overrides.push((i, self.theta[i]));
            self.theta[i] += alpha * (correction + rho_update * delta_bar) * v;
        }
        self.prev_overrides = overrides;
    }
}
