//! Monte Carlo ground truth for the continuous world, where values cannot
//! be enumerated: per-probe averages of truncated returns under the target
//! policy.

use rand::RngCore;

use crate::envs::{ContFourRoomsEnv, Environment};
use crate::gvf::{ContinuousState, Policy};

/// Rollout-estimated values at a fixed probe set, with per-probe standard
/// errors.
#[derive(Debug, Clone)]
pub struct ProbeValues {
    pub probes: Vec<ContinuousState>,
    pub values: Vec<f64>,
    pub std_errs: Vec<f64>,
}

/// Horizon at which the discount product drops below `cutoff`; truncation
/// error is below `cutoff` times the cumulant scale.
pub fn rollout_horizon(gamma: f64, cutoff: f64) -> usize {
    assert!(gamma > 0.0 && gamma < 1.0);
    (cutoff.ln() / gamma.ln()).ceil() as usize
}

/// Average `n_rollouts` truncated returns from each probe, following the
/// target policy.
pub fn rollout_true_values(
    env: &ContFourRoomsEnv,
    target: &dyn Policy<ContinuousState>,
    probes: &[ContinuousState],
    n_rollouts: usize,
    horizon: usize,
    rng: &mut dyn RngCore,
) -> ProbeValues {
    let mut values = Vec::with_capacity(probes.len());
    let mut std_errs = Vec::with_capacity(probes.len());
    for probe in probes {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n_rollouts {
            let mut rollout_env = env.clone();
            rollout_env
                .set_agent(*probe)
                .expect("probe must be collision-free");
            let mut ret = 0.0;
            let mut discount = 1.0;
            for _ in 0..horizon {
                let a = target.sample(&rollout_env.state(), rng);
                let step = rollout_env.step(a, rng);
                ret += discount * step.cumulant;
                discount *= step.gamma_next;
                if discount == 0.0 {
                    break;
                }
            }
            sum += ret;
            sum_sq += ret * ret;
        }
        let mean = sum / n_rollouts as f64;
        let var = (sum_sq / n_rollouts as f64 - mean * mean).max(0.0);
        values.push(mean);
        std_errs.push((var / n_rollouts as f64).sqrt());
    }
    ProbeValues { probes: probes.to_vec(), values, std_errs }
}

/// Probe states collected by running the behavior policy, the same way the
/// experiments sample their evaluation sets.
pub fn behavior_probe_set(
    env: &mut ContFourRoomsEnv,
    behavior: &dyn Policy<ContinuousState>,
    n_probes: usize,
    stride: usize,
    rng: &mut dyn RngCore,
) -> Vec<ContinuousState> {
    let mut probes = Vec::with_capacity(n_probes);
    while probes.len() < n_probes {
        for _ in 0..stride.max(1) {
            let a = behavior.sample(&env.state(), rng);
            env.step(a, rng);
        }
        probes.push(env.state());
    }
    probes
}
