//! Ground-truth computation for tabular environments: policy evaluation by
//! dynamic programming, stationary distributions by power iteration, and the
//! exact expected update used as the reference point for bias checks.

use rand::Rng;
use rand::RngCore;

use crate::envs::TabularModel;
use crate::error::{Error, Result};
use crate::gvf::{is_ratio, Action, Policy, Transition};
use crate::linear::{Featurizer, LinearValueFn, ValueFn};

use super::TrueValues;

const DP_SWEEP_CAP: u64 = 10_000_000;

/// Policy evaluation: iterate `V <- T_pi V` until the max-norm change drops
/// below `threshold`.
pub fn dp_true_values(
    model: &dyn TabularModel,
    target: &dyn Policy<usize>,
    threshold: f64,
) -> Result<TrueValues> {
    let n = model.n_states();
    let mut values = vec![0.0; n];
    for _ in 0..DP_SWEEP_CAP {
        let mut next = vec![0.0; n];
        let mut change: f64 = 0.0;
        for s in 0..n {
            let native = model.native_id(s);
            let mut v = 0.0;
            for a in 0..model.n_actions() {
                let p = target.prob(&native, Action(a));
                if p == 0.0 {
                    continue;
                }
                let step = model.transition(s, Action(a));
                let bootstrap = match step.next_dense {
                    Some(next_s) if step.gamma_next != 0.0 => {
                        step.gamma_next * values[next_s]
                    }
                    _ => 0.0,
                };
                v += p * (step.cumulant + bootstrap);
            }
            change = change.max((v - values[s]).abs());
            next[s] = v;
        }
        values = next;
        if change < threshold {
            return Ok(TrueValues { values });
        }
    }
    Err(Error::NonConvergence { iterations: DP_SWEEP_CAP })
}

/// Max-norm Bellman residual `||V - T_pi V||_inf` of a value table.
pub fn bellman_residual(
    model: &dyn TabularModel,
    target: &dyn Policy<usize>,
    values: &[f64],
) -> f64 {
    let mut residual: f64 = 0.0;
    for s in 0..model.n_states() {
        let native = model.native_id(s);
        let mut v = 0.0;
        for a in 0..model.n_actions() {
            let p = target.prob(&native, Action(a));
            if p == 0.0 {
                continue;
            }
            let step = model.transition(s, Action(a));
            let bootstrap = match step.next_dense {
                Some(next_s) if step.gamma_next != 0.0 => step.gamma_next * values[next_s],
                _ => 0.0,
            };
            v += p * (step.cumulant + bootstrap);
        }
        residual = residual.max((v - values[s]).abs());
    }
    residual
}

const POWER_ITER_CAP: u64 = 1_000_000;

/// Stationary state distribution of the behavior stream (including the
/// restart rule on termination), by power iteration to an L1 tolerance.
pub fn stationary_distribution(
    model: &dyn TabularModel,
    behavior: &dyn Policy<usize>,
    tol: f64,
) -> Result<Vec<f64>> {
    let n = model.n_states();
    let restart = model.restart_weights();
    // Row-stochastic kernel of the dense state process.
    let mut kernel = vec![vec![0.0; n]; n];
    for s in 0..n {
        let native = model.native_id(s);
        for a in 0..model.n_actions() {
            let p = behavior.prob(&native, Action(a));
            if p == 0.0 {
                continue;
            }
            match model.transition(s, Action(a)).next_dense {
                Some(next) => kernel[s][next] += p,
                None => {
                    for (j, w) in restart.iter().enumerate() {
                        kernel[s][j] += p * w;
                    }
                }
            }
        }
    }
    let mut dist = vec![1.0 / n as f64; n];
    for _ in 0..POWER_ITER_CAP {
        let mut next = vec![0.0; n];
        for s in 0..n {
            if dist[s] == 0.0 {
                continue;
            }
            for (j, p) in kernel[s].iter().enumerate() {
                next[j] += dist[s] * p;
            }
        }
        let change: f64 = dist.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        dist = next;
        if change < tol {
            // Normalize away accumulated rounding.
            let total: f64 = dist.iter().sum();
            for d in &mut dist {
                *d /= total;
            }
            return Ok(dist);
        }
    }
    Err(Error::NonConvergence { iterations: POWER_ITER_CAP })
}

/// Exact expected update `E_pi[Delta]` under the stationary state
/// distribution: states from `d_mu`, actions from the target policy.
pub fn expected_update<F>(
    model: &dyn TabularModel,
    d_mu: &[f64],
    target: &dyn Policy<usize>,
    vf: &LinearValueFn<F>,
) -> Vec<f64>
where
    F: Featurizer<State = usize>,
{
    let mut out = vec![0.0; vf.dim()];
    for s in 0..model.n_states() {
        if d_mu[s] == 0.0 {
            continue;
        }
        let native = model.native_id(s);
        let phi = vf.features(&native);
        for a in 0..model.n_actions() {
            let p = target.prob(&native, Action(a));
            if p == 0.0 {
                continue;
            }
            let step = model.transition(s, Action(a));
            let bootstrap = if step.gamma_next == 0.0 {
                0.0
            } else {
                step.gamma_next * vf.value(&step.next_native)
            };
            let delta = step.cumulant + bootstrap - phi.dot(vf.weights());
            let w = d_mu[s] * p * delta;
            for (&i, &v) in phi.indices.iter().zip(&phi.values) {
                out[i] += w * v;
            }
        }
    }
    out
}

/// Exact transition distribution `q(s, a) = d_mu(s) pi(a|s)` over native
/// `(state, action)` keys, the target-corrected analogue of the stream's
/// own `d_mu(s) mu(a|s)`.
pub fn exact_target_transition_dist(
    model: &dyn TabularModel,
    d_mu: &[f64],
    target: &dyn Policy<usize>,
) -> std::collections::HashMap<(usize, usize), f64> {
    let mut q = std::collections::HashMap::new();
    for s in 0..model.n_states() {
        let native = model.native_id(s);
        for a in 0..model.n_actions() {
            let p = d_mu[s] * target.prob(&native, Action(a));
            if p > 0.0 {
                q.insert((native, a), p);
            }
        }
    }
    q
}

/// Draws transitions i.i.d. from `d_mu(s) mu(a|s) P(s'|s,a)`, with the
/// importance ratio attached at generation time.
pub struct IidSampler<'a> {
    model: &'a dyn TabularModel,
    behavior: &'a dyn Policy<usize>,
    d_cdf: Vec<f64>,
    rho: Vec<Vec<f64>>,
}

impl<'a> IidSampler<'a> {
    pub fn new(
        model: &'a dyn TabularModel,
        behavior: &'a dyn Policy<usize>,
        target: &dyn Policy<usize>,
        d_mu: &[f64],
    ) -> Result<Self> {
        let mut d_cdf = Vec::with_capacity(d_mu.len());
        let mut acc = 0.0;
        for &d in d_mu {
            acc += d;
            d_cdf.push(acc);
        }
        let mut rho = Vec::with_capacity(model.n_states());
        for s in 0..model.n_states() {
            let native = model.native_id(s);
            let mut row = Vec::with_capacity(model.n_actions());
            for a in 0..model.n_actions() {
                let ratio = if behavior.prob(&native, Action(a)) == 0.0 {
                    // Never drawn; keep the table total.
                    0.0
                } else {
                    is_ratio(target, behavior, &native, Action(a))?
                };
                row.push(ratio);
            }
            rho.push(row);
        }
        Ok(Self { model, behavior, d_cdf, rho })
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Transition<usize> {
        let u: f64 = rng.gen();
        let s = self
            .d_cdf
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.d_cdf.len() - 1);
        let native = self.model.native_id(s);
        let a = self.behavior.sample(&native, rng);
        let step = self.model.transition(s, a);
        Transition {
            s: native,
            a,
            s_next: step.next_native,
            cumulant: step.cumulant,
            gamma_next: step.gamma_next,
            rho: self.rho[s][a.0],
        }
    }
}

/// A tiny three-state continuing MDP with enumerable transitions, used by
/// the unbiasedness and bias-decay checks. Action 0 advances around the
/// ring (cumulant 1 when leaving state 2), action 1 stays put.
pub struct TinyMdp;

pub const TINY_GAMMA: f64 = 0.9;

impl TabularModel for TinyMdp {
    fn n_states(&self) -> usize {
        3
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn native_id(&self, dense: usize) -> usize {
        dense
    }

    fn transition(&self, dense: usize, a: Action) -> crate::envs::ModelStep {
        let (next, cumulant) = match a {
            Action(0) => ((dense + 1) % 3, if dense == 2 { 1.0 } else { 0.0 }),
            Action(1) => (dense, 0.0),
            _ => panic!("tiny mdp has two actions"),
        };
        crate::envs::ModelStep {
            next_dense: Some(next),
            next_native: next,
            cumulant,
            gamma_next: TINY_GAMMA,
        }
    }

    fn restart_weights(&self) -> Vec<f64> {
        vec![1.0 / 3.0; 3]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{ChainEnv, Environment, FourRoomsEnv, RoomsLayout};
    use crate::envs::policies;
    use crate::gvf::{FixedActionDist, Policy};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn deterministic_right_chain_absorbs_with_value_one() {
        let pi = FixedActionDist::deterministic(Action(1), 2);
        let truth = dp_true_values(&ChainEnv::model(), &pi, 1e-15).unwrap();
        for s in 0..8 {
            assert_abs_diff_eq!(truth.values[s], 1.0, epsilon = 1e-12);
        }
    }

    /// Independent oracle: solve the symmetric-walk fixed point
    /// `V(i) = (V(i-1) + V(i+1)) / 2` with boundary 0 and 1 by Gaussian
    /// elimination on the 8x8 tridiagonal system.
    fn symmetric_walk_linear_solve() -> Vec<f64> {
        let n = 8;
        let mut a = vec![vec![0.0; n + 1]; n];
        for i in 0..n {
            a[i][i] = 1.0;
            if i > 0 {
                a[i][i - 1] = -0.5;
            }
            if i + 1 < n {
                a[i][i + 1] = -0.5;
            }
        }
        a[n - 1][n] = 0.5; // V(9) = 1 boundary feeds the last equation.
        for col in 0..n {
            let pivot = a[col][col];
            for row in col + 1..n {
                let f = a[row][col] / pivot;
                for k in col..=n {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
        let mut v = vec![0.0; n];
        for row in (0..n).rev() {
            let mut rhs = a[row][n];
            for k in row + 1..n {
                rhs -= a[row][k] * v[k];
            }
            v[row] = rhs / a[row][row];
        }
        v
    }

    #[test]
    fn symmetric_walk_values_are_linear_in_position() {
        let pi = FixedActionDist::new(vec![0.5, 0.5]).unwrap();
        let truth = dp_true_values(&ChainEnv::model(), &pi, 1e-15).unwrap();
        let solved = symmetric_walk_linear_solve();
        for i in 0..8 {
            assert_abs_diff_eq!(truth.values[i], (i + 1) as f64 / 9.0, epsilon = 1e-12);
            assert_abs_diff_eq!(truth.values[i], solved[i], epsilon = 1e-12);
        }
        let residual = bellman_residual(&ChainEnv::model(), &pi, &truth.values);
        assert!(residual < 10.0 * 1e-15, "residual {residual}");
    }

    #[test]
    fn persistent_down_values_are_powers_of_the_discount() {
        let layout = Arc::new(RoomsLayout::standard());
        let model = FourRoomsEnv::model(layout.clone());
        let pi = policies::persistent_down();
        let truth = dp_true_values(&model, &pi, 1e-15).unwrap();
        for (dense, &cell) in layout.open_cells().iter().enumerate() {
            // Independent route: count free downward moves to the wall.
            let (mut r, c) = (cell / RoomsLayout::SIZE, cell % RoomsLayout::SIZE);
            let mut free_moves = 0;
            while !layout.blocks(r as i64 + 1, c as i64) {
                r += 1;
                free_moves += 1;
            }
            let expected = 0.9f64.powi(free_moves);
            assert_abs_diff_eq!(truth.values[dense], expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn stationary_distribution_matches_long_run_frequencies() {
        let mu = FixedActionDist::new(vec![0.5, 0.5]).unwrap();
        let model = ChainEnv::model();
        let d = stationary_distribution(&model, &mu, 1e-12).unwrap();
        assert_abs_diff_eq!(d.iter().sum::<f64>(), 1.0, epsilon = 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut env = ChainEnv::new(&mut rng);
        let mut counts = vec![0usize; 8];
        let steps = 2_000_000;
        for _ in 0..steps {
            counts[env.state() - 1] += 1;
            let a = mu.sample(&env.state(), &mut rng);
            env.step(a, &mut rng);
        }
        for s in 0..8 {
            let freq = counts[s] as f64 / steps as f64;
            assert!(
                (freq - d[s]).abs() < 3e-3,
                "state {s}: empirical {freq} vs stationary {}",
                d[s]
            );
        }
    }

    #[test]
    fn iid_sampler_attaches_the_right_ratios() {
        let mu = FixedActionDist::new(vec![0.9, 0.1]).unwrap();
        let pi = FixedActionDist::new(vec![0.1, 0.9]).unwrap();
        let model = ChainEnv::model();
        let d = stationary_distribution(&model, &mu, 1e-12).unwrap();
        let sampler = IidSampler::new(&model, &mu, &pi, &d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut mean_rho = 0.0;
        let draws = 200_000;
        for _ in 0..draws {
            let t = sampler.sample(&mut rng);
            let expected = if t.a == Action(0) { 0.1 / 0.9 } else { 0.9 / 0.1 };
            assert_abs_diff_eq!(t.rho, expected, epsilon = 1e-14);
            mean_rho += t.rho;
        }
        // E[rho] = 1 under the stationary behavior distribution.
        mean_rho /= draws as f64;
        assert!((mean_rho - 1.0).abs() < 0.02, "mean ratio {mean_rho}");
    }

    #[test]
    fn expected_update_reduces_to_direct_enumeration_on_the_tiny_mdp() {
        let mu = FixedActionDist::new(vec![0.5, 0.5]).unwrap();
        let pi = FixedActionDist::new(vec![0.8, 0.2]).unwrap();
        let model = TinyMdp;
        let d = stationary_distribution(&model, &mu, 1e-12).unwrap();
        let mut vf = LinearValueFn::zeros(crate::linear::TabularFeaturizer::identity(3));
        vf.weights_mut().copy_from_slice(&[0.3, -0.1, 0.5]);
        let expected = expected_update(&model, &d, &pi, &vf);

        // Direct enumeration with explicit loops.
        let mut direct = vec![0.0; 3];
        for s in 0..3 {
            for (a, pa) in [(0usize, 0.8), (1usize, 0.2)] {
                let step = model.transition(s, Action(a));
                let delta = step.cumulant
                    + step.gamma_next * vf.weights()[step.next_native]
                    - vf.weights()[s];
                direct[s] += d[s] * pa * delta;
            }
        }
        for i in 0..3 {
            assert_abs_diff_eq!(expected[i], direct[i], epsilon = 1e-14);
        }
    }
}
