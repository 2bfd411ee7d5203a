//! Closed-form conditional variances of the mini-batch estimators given a
//! fixed buffer, their Monte Carlo counterparts, and the variance-ordering
//! checks built on them.
//!
//! For a buffer with entries `(rho_j, Delta_j)` and mini-batch size `k`,
//! with `mu_B = (1/n) sum_j rho_j Delta_j`:
//!
//! ```text
//! V(X_IS | B) = (1/k) ( (1/n)       sum_j rho_j^2 ||Delta_j||^2 - mu_B . mu_B )
//! V(X_BC | B) = (1/k) ( (rhobar/n)  sum_j rho_j   ||Delta_j||^2 - mu_B . mu_B )
//! ```
//!
//! Both estimators are unbiased for `mu_B` given the buffer, so their gap is
//! `(1/(n k)) sum_j ||Delta_j||^2 (rho_j^2 - rhobar rho_j)`.

use rand::Rng;

use crate::buffer::ReplayBuffer;
use crate::error::{Error, Result};
use crate::estimators::{
    bias_corrected_update, is_update, mean_update, per_transition_delta, vtrace_update,
    wis_buffer_update, wis_minibatch_update, wis_optimal_update, EstimatorKind,
};
use crate::linear::{Featurizer, LinearValueFn, SparseVec, UpdateEstimate};

/// Per-transition `(rho, Delta)` pairs extracted from a buffer under fixed
/// weights, the inputs every closed-form variance expression needs.
pub struct UpdateParts {
    dim: usize,
    entries: Vec<(f64, SparseVec)>,
}

impl UpdateParts {
    pub fn from_buffer<F>(buf: &ReplayBuffer<F::State>, vf: &LinearValueFn<F>) -> Self
    where
        F: Featurizer,
        F::State: Clone,
    {
        let entries = buf
            .iter()
            .map(|t| (t.rho, per_transition_delta(vf, t)))
            .collect();
        Self { dim: vf.dim(), entries }
    }

    /// Synthetic buffers for constructed variance families; `entries` are
    /// `(rho, Delta)` pairs.
    pub fn from_raw(dim: usize, entries: Vec<(f64, SparseVec)>) -> Self {
        Self { dim, entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(f64, SparseVec)] {
        &self.entries
    }

    pub fn rho_sum(&self) -> f64 {
        self.entries.iter().map(|(rho, _)| rho).sum()
    }

    pub fn rho_bar(&self) -> f64 {
        self.rho_sum() / self.len() as f64
    }

    /// `mu_B = (1/n) sum_j rho_j Delta_j`, the common conditional mean of
    /// the IS and bias-corrected estimators.
    pub fn mean_update_vec(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut out = vec![0.0; self.dim];
        for (rho, delta) in &self.entries {
            for (&i, &v) in delta.indices.iter().zip(&delta.values) {
                out[i] += rho * v / n;
            }
        }
        out
    }

    /// `sum_j (rho_j / sum rho) Delta_j`: the whole-buffer self-normalized
    /// update, equal to the exact conditional expectation of the resampled
    /// mean.
    pub fn wis_expectation(&self) -> Result<Vec<f64>> {
        let total = self.rho_sum();
        if total <= 0.0 {
            return Err(Error::DegenerateWeights);
        }
        let mut out = vec![0.0; self.dim];
        for (rho, delta) in &self.entries {
            for (&i, &v) in delta.indices.iter().zip(&delta.values) {
                out[i] += rho * v / total;
            }
        }
        Ok(out)
    }
}

/// Closed-form conditional variances for one buffer and batch size.
#[derive(Debug, Clone)]
pub struct ClosedFormVariances {
    pub v_is: f64,
    pub v_bc: f64,
    pub mu_b: Vec<f64>,
}

pub fn closed_form_variances(parts: &UpdateParts, k: usize) -> ClosedFormVariances {
    assert!(k >= 1, "batch size must be positive");
    let n = parts.len() as f64;
    let rho_bar = parts.rho_bar();
    let mu_b = parts.mean_update_vec();
    let mu_sq: f64 = mu_b.iter().map(|m| m * m).sum();
    let mut second_is = 0.0;
    let mut second_bc = 0.0;
    for (rho, delta) in parts.entries() {
        let norm_sq = delta.norm_sq();
        second_is += rho * rho * norm_sq / n;
        second_bc += rho_bar * rho * norm_sq / n;
    }
    ClosedFormVariances {
        v_is: (second_is - mu_sq) / k as f64,
        v_bc: (second_bc - mu_sq) / k as f64,
        mu_b,
    }
}

/// Closed-form conditional variance of the uncorrected resampled mean.
pub fn resampled_variance(parts: &UpdateParts, k: usize) -> Result<f64> {
    let total = parts.rho_sum();
    if total <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    let mean = parts.wis_expectation()?;
    let mean_sq: f64 = mean.iter().map(|m| m * m).sum();
    let mut second = 0.0;
    for (rho, delta) in parts.entries() {
        second += rho / total * delta.norm_sq();
    }
    Ok((second - mean_sq) / k as f64)
}

/// An empirical variance estimate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalVariance {
    pub variance: f64,
    pub std_err: f64,
}

/// Simulates `n_draws` independent update estimates from a fixed buffer and
/// weight vector and returns the trace of their sample covariance.
///
/// Degenerate weighted batches (an all-zero-ratio mini-batch under the
/// self-normalized estimators) contribute the zero update, matching the
/// skip-and-count behavior of the learner.
pub fn empirical_update_variance<F, R>(
    buf: &ReplayBuffer<F::State>,
    vf: &LinearValueFn<F>,
    k: usize,
    kind: &EstimatorKind,
    n_draws: usize,
    rng: &mut R,
) -> Result<EmpiricalVariance>
where
    F: Featurizer,
    F::State: Clone,
    R: Rng + Clone,
{
    if n_draws == 0 {
        return Err(Error::EmptySample);
    }
    if matches!(kind, EstimatorKind::WisOptimal) {
        // Deterministic given the buffer.
        return Ok(EmpiricalVariance { variance: 0.0, std_err: 0.0 });
    }
    let dim = vf.dim();
    let draw_once = |rng: &mut R| -> Result<UpdateEstimate> {
        Ok(match kind {
            EstimatorKind::Ir | EstimatorKind::Onpolicy => {
                let batch = if matches!(kind, EstimatorKind::Ir) {
                    buf.sample_proportional(k, rng)?
                } else {
                    buf.sample_uniform(k, rng)?
                };
                mean_update(&batch, vf)
            }
            EstimatorKind::Bcir => {
                let rho_bar = buf.mean_ratio()?;
                let batch = buf.sample_proportional(k, rng)?;
                bias_corrected_update(&batch, rho_bar, vf)
            }
            EstimatorKind::Is => is_update(&buf.sample_uniform(k, rng)?, vf),
            EstimatorKind::Vtrace { clip } => {
                vtrace_update(&buf.sample_uniform(k, rng)?, *clip, vf)
            }
            EstimatorKind::WisMinibatch => {
                match wis_minibatch_update(&buf.sample_uniform(k, rng)?, vf) {
                    Ok(u) => u,
                    Err(Error::DegenerateWeights) => UpdateEstimate::zeros(dim),
                    Err(e) => return Err(e),
                }
            }
            EstimatorKind::WisBuffer => wis_buffer_update(
                &buf.sample_uniform(k, rng)?,
                buf.rho_sum(),
                buf.len(),
                vf,
            )?,
            EstimatorKind::WisOptimal => unreachable!("handled above"),
            other => panic!("no mini-batch sampling distribution for {}", other.name()),
        })
    };

    // Two passes over the same RNG stream: mean first, then squared
    // deviations (avoids storing all draws).
    let mut mean_rng = rng.clone();
    let mut mean = vec![0.0; dim];
    for _ in 0..n_draws {
        let u = draw_once(&mut mean_rng)?;
        for &i in u.support() {
            mean[i] += u.get(i) / n_draws as f64;
        }
    }
    let mean_sq: f64 = mean.iter().map(|m| m * m).sum();
    let mut dev_sum = 0.0;
    let mut dev_sq_sum = 0.0;
    for _ in 0..n_draws {
        let u = draw_once(rng)?;
        // ||u - mean||^2 expanded so only the support needs touching.
        let mut d = mean_sq;
        for &i in u.support() {
            let x = u.get(i);
            d += x * x - 2.0 * x * mean[i];
        }
        dev_sum += d;
        dev_sq_sum += d * d;
    }
    let m = n_draws as f64;
    let variance = dev_sum / (m - 1.0);
    let dev_var = (dev_sq_sum - dev_sum * dev_sum / m).max(0.0) / (m - 1.0);
    Ok(EmpiricalVariance { variance, std_err: (dev_var / m).sqrt() })
}

/// Exact conditional expectation of the resampled mean, routed through the
/// sampling tree's own selection probabilities rather than the algebraic
/// `rho / sum rho` form, so the two can be compared as independent routes.
pub fn tree_resampled_expectation<F>(
    buf: &ReplayBuffer<F::State>,
    vf: &LinearValueFn<F>,
) -> Vec<f64>
where
    F: Featurizer,
    F::State: Clone,
{
    let mut out = vec![0.0; vf.dim()];
    for (slot, p) in buf.selection_probabilities() {
        if p == 0.0 {
            continue;
        }
        let delta = per_transition_delta(vf, buf.get(slot).expect("live slot"));
        for (&i, &v) in delta.indices.iter().zip(&delta.values) {
            out[i] += p * v;
        }
    }
    out
}

/// Variance gap `V(X_IS|B) - V(X_BC|B)` for a buffer satisfying the
/// norm-vs-ratio premise: `||Delta_j||^2 >= c / rho_j` wherever
/// `rho_j >= rhobar` and `||Delta_j||^2 <= c / rho_j` wherever
/// `rho_j < rhobar`. Under the premise the gap is nonnegative, strictly
/// positive off the boundary family `||Delta_j||^2 = c / rho_j`.
pub fn variance_gap_under_premise(parts: &UpdateParts, k: usize, c: f64) -> Result<f64> {
    const TOL: f64 = 1e-9;
    let rho_bar = parts.rho_bar();
    for (j, (rho, delta)) in parts.entries().iter().enumerate() {
        if *rho <= 0.0 {
            return Err(Error::PremiseViolated {
                reason: format!("entry {j} has nonpositive ratio {rho}"),
            });
        }
        let norm_sq = delta.norm_sq();
        let bound = c / rho;
        if *rho >= rho_bar && norm_sq < bound - TOL {
            return Err(Error::PremiseViolated {
                reason: format!(
                    "entry {j}: rho {rho} >= mean {rho_bar} but ||Delta||^2 {norm_sq} < {bound}"
                ),
            });
        }
        if *rho < rho_bar && norm_sq > bound + TOL {
            return Err(Error::PremiseViolated {
                reason: format!(
                    "entry {j}: rho {rho} < mean {rho_bar} but ||Delta||^2 {norm_sq} > {bound}"
                ),
            });
        }
    }
    let cf = closed_form_variances(parts, k);
    Ok(cf.v_is - cf.v_bc)
}

/// For a buffer whose update norms are all equal to some `c`, the gap
/// collapses to `(c / k)` times the (uncentered) sample variance of the
/// ratios. Returns `(gap, predicted_gap)`; the two agree to floating-point
/// accuracy.
pub fn constant_norm_variance_identity(parts: &UpdateParts, k: usize) -> Result<(f64, f64)> {
    let first = parts
        .entries()
        .first()
        .ok_or(Error::EmptyBuffer)?
        .1
        .norm_sq();
    for (_, delta) in parts.entries() {
        if (delta.norm_sq() - first).abs() > 1e-9 * first.max(1.0) {
            return Err(Error::PremiseViolated {
                reason: "update norms are not constant across the buffer".into(),
            });
        }
    }
    let n = parts.len() as f64;
    let rho_bar = parts.rho_bar();
    let rho_second_moment: f64 =
        parts.entries().iter().map(|(rho, _)| rho * rho).sum::<f64>() / n;
    let predicted = first / k as f64 * (rho_second_moment - rho_bar * rho_bar);
    let cf = closed_form_variances(parts, k);
    Ok((cf.v_is - cf.v_bc, predicted))
}

/// Convenience wrapper: closed forms straight from a buffer + weights.
pub fn buffer_closed_form_variances<F>(
    buf: &ReplayBuffer<F::State>,
    vf: &LinearValueFn<F>,
    k: usize,
) -> ClosedFormVariances
where
    F: Featurizer,
    F::State: Clone,
{
    closed_form_variances(&UpdateParts::from_buffer(buf, vf), k)
}

/// Checks `wis_optimal_update` against the algebraic expectation; exposed
/// for the identity suite.
pub fn wis_optimal_vec<F>(buf: &ReplayBuffer<F::State>, vf: &LinearValueFn<F>) -> Result<Vec<f64>>
where
    F: Featurizer,
    F::State: Clone,
{
    Ok(wis_optimal_update(buf, vf)?.as_slice().to_vec())
}
