//! Distribution-level check of proportional resampling: the empirical
//! distribution of resampled transitions against a reference distribution
//! over `(state, action)` keys, in total-variation distance.
//!
//! With the buffer's own ratio-weighted empirical distribution as the
//! reference, the distance shrinks like `1 / sqrt(n_draws)`. Against the
//! exact target-corrected transition distribution `q(s, a) = d_mu(s)
//! pi(a|s)`, it also shrinks as the buffer grows, which is the
//! convergence-in-distribution property the resampler rests on.

use std::collections::HashMap;

use rand::RngCore;

use crate::buffer::ReplayBuffer;
use crate::error::{Error, Result};
use crate::gvf::StateId;

pub type TransitionKey = (usize, usize);

/// Ratio-weighted distribution of the buffer contents over `(s, a)` keys:
/// `q_hat(x)` proportional to `rho(x) * count(x)`.
pub fn buffer_resampling_dist(buf: &ReplayBuffer<StateId>) -> Result<HashMap<TransitionKey, f64>> {
    let mut weights: HashMap<TransitionKey, f64> = HashMap::new();
    let mut total = 0.0;
    for t in buf.iter() {
        *weights.entry((t.s, t.a.0)).or_insert(0.0) += t.rho;
        total += t.rho;
    }
    if total <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    for w in weights.values_mut() {
        *w /= total;
    }
    Ok(weights)
}

fn total_variation(
    a: &HashMap<TransitionKey, f64>,
    b: &HashMap<TransitionKey, f64>,
) -> f64 {
    let mut keys: Vec<TransitionKey> = a.keys().chain(b.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    0.5 * keys
        .iter()
        .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

/// Draws `n_draws` proportional samples and returns the total-variation
/// distance between their empirical distribution and `reference` (the
/// buffer's own resampling distribution when `None`).
pub fn resampling_distribution_check(
    buf: &ReplayBuffer<StateId>,
    n_draws: usize,
    rng: &mut dyn RngCore,
    reference: Option<&HashMap<TransitionKey, f64>>,
) -> Result<f64> {
    if n_draws == 0 {
        return Err(Error::EmptySample);
    }
    let own = buffer_resampling_dist(buf)?;
    let reference = reference.unwrap_or(&own);
    let batch = buf.sample_proportional(n_draws, rng)?;
    let mut empirical: HashMap<TransitionKey, f64> = HashMap::new();
    for t in &batch.transitions {
        *empirical.entry((t.s, t.a.0)).or_insert(0.0) += 1.0 / n_draws as f64;
    }
    Ok(total_variation(&empirical, reference))
}
