//! Core domain types for off-policy value prediction: states, actions,
//! policies, transitions, and the prediction spec (target policy, cumulant,
//! continuation).
//!
//! A prediction is always defined against a *target* policy while data is
//! generated by a *behavior* policy; the importance-sampling ratio
//! `rho = pi(a|s) / mu(a|s)` reweights between the two and is computed once,
//! when a transition is generated, and stored on the transition.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::linear::ValueFn;

/// Index of a discrete environment state.
pub type StateId = usize;

/// A point in a two-dimensional continuous environment, in environment units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousState {
    pub x: f64,
    pub y: f64,
}

impl ContinuousState {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// A discrete action, indexed from zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Action(pub usize);

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A stochastic mapping from states to action distributions.
pub trait Policy<S>: Send + Sync {
    fn n_actions(&self) -> usize;

    /// Probability of taking `a` in `s`. Always in `[0, 1]`.
    fn prob(&self, s: &S, a: Action) -> f64;

    /// Draw an action from the distribution at `s`.
    fn sample(&self, s: &S, rng: &mut dyn RngCore) -> Action {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let last = self.n_actions() - 1;
        for a in 0..last {
            acc += self.prob(s, Action(a));
            if u < acc {
                return Action(a);
            }
        }
        Action(last)
    }
}

fn validate_dist(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidPolicy("empty action distribution".into()));
    }
    if probs.iter().any(|p| *p < 0.0 || !p.is_finite()) {
        return Err(Error::InvalidPolicy("negative or non-finite probability".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidPolicy(format!(
            "probabilities sum to {total}, expected 1"
        )));
    }
    Ok(())
}

/// A state-independent action distribution.
///
/// Covers the two-action chain policies and the deterministic / skewed
/// targets in the room worlds, for any state representation.
#[derive(Debug, Clone)]
pub struct FixedActionDist {
    probs: Vec<f64>,
}

impl FixedActionDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_dist(&probs)?;
        Ok(Self { probs })
    }

    /// Puts all mass on one action.
    pub fn deterministic(a: Action, n_actions: usize) -> Self {
        let mut probs = vec![0.0; n_actions];
        probs[a.0] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

impl<S> Policy<S> for FixedActionDist {
    fn n_actions(&self) -> usize {
        self.probs.len()
    }

    fn prob(&self, _s: &S, a: Action) -> f64 {
        self.probs[a.0]
    }
}

/// A per-state probability table over discrete states.
#[derive(Debug, Clone)]
pub struct TabularPolicy {
    rows: Vec<Vec<f64>>,
    n_actions: usize,
}

impl TabularPolicy {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_actions = rows.first().map(|r| r.len()).unwrap_or(0);
        for row in &rows {
            if row.len() != n_actions {
                return Err(Error::InvalidPolicy("ragged probability table".into()));
            }
            validate_dist(row)?;
        }
        Ok(Self { rows, n_actions })
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }
}

impl Policy<StateId> for TabularPolicy {
    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn prob(&self, s: &StateId, a: Action) -> f64 {
        self.rows[*s][a.0]
    }
}

/// One stored interaction: `(s, a, s', cumulant, gamma_next, rho)`.
///
/// `gamma_next == 0` marks (pseudo-)termination; the value function is never
/// evaluated at `s_next` on such transitions, so `s_next` may be a sentinel.
#[derive(Debug, Clone)]
pub struct Transition<S> {
    pub s: S,
    pub a: Action,
    pub s_next: S,
    pub cumulant: f64,
    pub gamma_next: f64,
    pub rho: f64,
}

/// Per-transition signal function `(s, a, s') -> value`.
pub type SignalFn<S> = Arc<dyn Fn(&S, Action, &S) -> f64 + Send + Sync>;

/// A general value function prediction spec: what to predict (cumulant),
/// how far (continuation), and under which action-selection (target policy).
#[derive(Clone)]
pub struct GvfSpec<S> {
    pub target: Arc<dyn Policy<S>>,
    pub cumulant: SignalFn<S>,
    pub continuation: SignalFn<S>,
}

impl<S> GvfSpec<S> {
    pub fn new(target: Arc<dyn Policy<S>>, cumulant: SignalFn<S>, continuation: SignalFn<S>) -> Self {
        Self { target, cumulant, continuation }
    }
}

/// Importance-sampling ratio `pi(a|s) / mu(a|s)`.
///
/// Returns 0 whenever the target never takes `a`, regardless of `mu`.
/// Fails if the behavior violates coverage (`pi > 0` where `mu = 0`).
pub fn is_ratio<S: fmt::Debug>(
    pi: &dyn Policy<S>,
    mu: &dyn Policy<S>,
    s: &S,
    a: Action,
) -> Result<f64> {
    let p = pi.prob(s, a);
    if p == 0.0 {
        return Ok(0.0);
    }
    let m = mu.prob(s, a);
    if m == 0.0 {
        return Err(Error::CoverageViolation {
            state: format!("{s:?}"),
            action: a.0,
            pi: p,
        });
    }
    Ok(p / m)
}

/// One-step TD error `C + gamma' V(s') - V(s)`.
///
/// The bootstrap term is exactly zero when `gamma_next == 0`, so terminal
/// sentinels are never evaluated.
pub fn td_delta<S, V: ValueFn<S> + ?Sized>(values: &V, t: &Transition<S>) -> f64 {
    let bootstrap = if t.gamma_next == 0.0 {
        0.0
    } else {
        t.gamma_next * values.value(&t.s_next)
    };
    t.cumulant + bootstrap - values.value(&t.s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{Featurizer, LinearValueFn, TabularFeaturizer};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain_pair() -> (FixedActionDist, FixedActionDist) {
        let mu = FixedActionDist::new(vec![0.9, 0.1]).unwrap();
        let pi = FixedActionDist::new(vec![0.1, 0.9]).unwrap();
        (mu, pi)
    }

    #[test]
    fn ratio_of_skewed_chain_policies() {
        let (mu, pi) = chain_pair();
        let s = 3usize;
        let right = is_ratio(&pi, &mu, &s, Action(1)).unwrap();
        let left = is_ratio(&pi, &mu, &s, Action(0)).unwrap();
        assert_abs_diff_eq!(right, 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(left, 1.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn ratio_is_one_when_policies_match() {
        let (mu, _) = chain_pair();
        let s = 0usize;
        for a in 0..2 {
            assert_abs_diff_eq!(
                is_ratio(&mu, &mu, &s, Action(a)).unwrap(),
                1.0,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn zero_target_probability_gives_zero_ratio() {
        let pi = FixedActionDist::deterministic(Action(1), 2);
        let mu = FixedActionDist::deterministic(Action(0), 2);
        // pi(left) = 0, so the ratio is 0 even though mu(left) = 1.
        assert_eq!(is_ratio(&pi, &mu, &0usize, Action(0)).unwrap(), 0.0);
    }

    #[test]
    fn coverage_violation_is_an_error() {
        let pi = FixedActionDist::new(vec![0.5, 0.5]).unwrap();
        let mu = FixedActionDist::deterministic(Action(0), 2);
        let err = is_ratio(&pi, &mu, &0usize, Action(1)).unwrap_err();
        assert!(matches!(err, Error::CoverageViolation { .. }));
    }

    #[test]
    fn invalid_distributions_are_rejected() {
        assert!(FixedActionDist::new(vec![0.5, 0.6]).is_err());
        assert!(FixedActionDist::new(vec![-0.1, 1.1]).is_err());
        assert!(FixedActionDist::new(vec![]).is_err());
        assert!(TabularPolicy::new(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
    }

    fn transition(c: f64, gamma: f64, s: usize, s_next: usize) -> Transition<usize> {
        Transition { s, a: Action(0), s_next, cumulant: c, gamma_next: gamma, rho: 1.0 }
    }

    #[test]
    fn td_error_examples() {
        let feat = TabularFeaturizer::identity(3);
        let mut vf = LinearValueFn::zeros(feat);

        // V = 0 everywhere, terminal transition with cumulant 1.
        assert_abs_diff_eq!(td_delta(&vf, &transition(1.0, 0.0, 0, 2)), 1.0);

        // Pure bootstrap: C = 0, gamma = 0.9, V(s') = 1, V(s) = 0.
        vf.weights_mut()[2] = 1.0;
        assert_abs_diff_eq!(td_delta(&vf, &transition(0.0, 0.9, 0, 2)), 0.9);

        // Fixed point: V(s') = V(s) = v under gamma = 1, C = 0.
        vf.weights_mut()[0] = 1.0;
        vf.weights_mut()[2] = 1.0;
        assert_abs_diff_eq!(td_delta(&vf, &transition(0.0, 1.0, 0, 2)), 0.0);
    }

    #[test]
    fn terminal_bootstrap_never_touches_the_sentinel() {
        // Featurizer only covers states 0..3; state 9 is a sentinel that
        // would panic if evaluated.
        struct Partial;
        impl Featurizer for Partial {
            type State = usize;
            fn dim(&self) -> usize {
                3
            }
            fn features(&self, s: &usize) -> crate::linear::SparseVec {
                assert!(*s < 3, "sentinel state evaluated");
                crate::linear::SparseVec::unit(*s)
            }
        }
        let vf = LinearValueFn::zeros(Partial);
        assert_abs_diff_eq!(td_delta(&vf, &transition(1.0, 0.0, 1, 9)), 1.0);
    }

    proptest! {
        /// Behavior-expected ratio is exactly 1 for every state: the sum
        /// over actions of mu(a|s) * rho(s, a) telescopes to sum of pi.
        #[test]
        fn behavior_expectation_of_ratio_is_one(rows in proptest::collection::vec(
            proptest::collection::vec(0.05f64..1.0, 4),
            1..6,
        )) {
            let normalized: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| {
                    let s: f64 = r.iter().sum();
                    r.iter().map(|p| p / s).collect()
                })
                .collect();
            let mu = TabularPolicy::new(normalized.clone()).unwrap_or_else(|_| {
                // Renormalize exactly if the division left residue > 1e-12.
                TabularPolicy::new(
                    normalized
                        .iter()
                        .map(|r| {
                            let s: f64 = r.iter().sum();
                            r.iter().map(|p| p / s).collect()
                        })
                        .collect(),
                )
                .unwrap()
            });
            let pi = FixedActionDist::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
            for s in 0..mu.n_states() {
                let mut expectation = 0.0;
                for a in 0..4 {
                    let rho = is_ratio(&pi, &mu, &s, Action(a)).unwrap();
                    expectation += mu.prob(&s, Action(a)) * rho;
                }
                prop_assert!((expectation - 1.0).abs() < 1e-12);
            }
        }

        /// Ratios in the two directions multiply to 1 when both are finite
        /// and nonzero.
        #[test]
        fn ratio_is_multiplicatively_consistent(
            p in 0.01f64..0.99,
            q in 0.01f64..0.99,
            a in 0usize..2,
        ) {
            let mu = FixedActionDist::new(vec![p, 1.0 - p]).unwrap();
            let pi = FixedActionDist::new(vec![q, 1.0 - q]).unwrap();
            let s = 0usize;
            let fwd = is_ratio(&pi, &mu, &s, Action(a)).unwrap();
            let bwd = is_ratio(&mu, &pi, &s, Action(a)).unwrap();
            prop_assert!((fwd * bwd - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_follows_the_distribution() {
        let p = FixedActionDist::new(vec![0.2, 0.5, 0.3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0usize; 3];
        let draws = 100_000;
        for _ in 0..draws {
            counts[p.sample(&0usize, &mut rng).0] += 1;
        }
        for (i, expected) in [0.2, 0.5, 0.3].iter().enumerate() {
            let freq = counts[i] as f64 / draws as f64;
            // 5 sigma band for a binomial proportion.
            let sigma = (expected * (1.0 - expected) / draws as f64).sqrt();
            assert!((freq - expected).abs() < 5.0 * sigma, "action {i}: {freq}");
        }
    }
}
