//! Random-walk Markov chain: 8 non-terminating states (ids 1..=8) between
//! two terminals (0 and 9). The cumulant is 1 only on the transition into
//! the right terminal, continuation is 1 until termination, so the true
//! value of a state is the probability of absorbing on the right under the
//! target policy.

use std::sync::Arc;

use rand::Rng;
use rand::RngCore;

use super::{EnvStep, Environment, ModelStep, TabularModel};
use crate::gvf::{Action, GvfSpec, Policy, StateId};
use crate::linear::TabularFeaturizer;

pub const LEFT: Action = Action(0);
pub const RIGHT: Action = Action(1);

#[derive(Debug, Clone)]
pub struct ChainEnv {
    state: StateId,
}

impl ChainEnv {
    pub const N_INTERIOR: usize = 8;
    pub const LEFT_TERMINAL: StateId = 0;
    pub const RIGHT_TERMINAL: StateId = 9;

    /// Starts at a uniformly random interior state.
    pub fn new(rng: &mut dyn RngCore) -> Self {
        Self { state: Self::random_start(rng) }
    }

    pub fn starting_at(state: StateId) -> Self {
        assert!(Self::is_interior(state));
        Self { state }
    }

    fn random_start(rng: &mut dyn RngCore) -> StateId {
        rng.gen_range(1..=Self::N_INTERIOR)
    }

    pub fn is_interior(s: StateId) -> bool {
        (1..=Self::N_INTERIOR).contains(&s)
    }

    pub fn is_terminal(s: StateId) -> bool {
        s == Self::LEFT_TERMINAL || s == Self::RIGHT_TERMINAL
    }

    pub fn cumulant(_s: &StateId, _a: Action, s_next: &StateId) -> f64 {
        if *s_next == Self::RIGHT_TERMINAL {
            1.0
        } else {
            0.0
        }
    }

    pub fn continuation(_s: &StateId, _a: Action, s_next: &StateId) -> f64 {
        if Self::is_terminal(*s_next) {
            0.0
        } else {
            1.0
        }
    }

    pub fn gvf(target: Arc<dyn Policy<StateId>>) -> GvfSpec<StateId> {
        GvfSpec::new(
            target,
            Arc::new(|s: &StateId, a, n: &StateId| Self::cumulant(s, a, n)),
            Arc::new(|s: &StateId, a, n: &StateId| Self::continuation(s, a, n)),
        )
    }

    /// One-hot features over the interior states.
    pub fn featurizer() -> TabularFeaturizer {
        let mut lookup = vec![None; Self::N_INTERIOR + 2];
        for s in 1..=Self::N_INTERIOR {
            lookup[s] = Some(s - 1);
        }
        TabularFeaturizer::with_lookup(lookup, Self::N_INTERIOR)
    }

    pub fn model() -> ChainModel {
        ChainModel
    }
}

impl Environment for ChainEnv {
    type State = StateId;

    fn n_actions(&self) -> usize {
        2
    }

    fn state(&self) -> StateId {
        self.state
    }

    fn step(&mut self, a: Action, rng: &mut dyn RngCore) -> EnvStep<StateId> {
        assert!(Self::is_interior(self.state), "stepped from a terminal");
        let s = self.state;
        let s_next = match a {
            LEFT => s - 1,
            RIGHT => s + 1,
            _ => panic!("chain has two actions"),
        };
        let step = EnvStep {
            s,
            a,
            s_next,
            cumulant: Self::cumulant(&s, a, &s_next),
            gamma_next: Self::continuation(&s, a, &s_next),
        };
        self.state = if Self::is_terminal(s_next) {
            Self::random_start(rng)
        } else {
            s_next
        };
        step
    }
}

/// Enumerable chain dynamics over dense interior indices `0..8`
/// (dense `i` is chain state `i + 1`).
pub struct ChainModel;

impl TabularModel for ChainModel {
    fn n_states(&self) -> usize {
        ChainEnv::N_INTERIOR
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn native_id(&self, dense: usize) -> usize {
        dense + 1
    }

    fn transition(&self, dense: usize, a: Action) -> ModelStep {
        let s = dense + 1;
        let s_next = match a {
            LEFT => s - 1,
            RIGHT => s + 1,
            _ => panic!("chain has two actions"),
        };
        ModelStep {
            next_dense: if ChainEnv::is_terminal(s_next) { None } else { Some(s_next - 1) },
            next_native: s_next,
            cumulant: ChainEnv::cumulant(&s, a, &s_next),
            gamma_next: ChainEnv::continuation(&s, a, &s_next),
        }
    }

    fn restart_weights(&self) -> Vec<f64> {
        vec![1.0 / ChainEnv::N_INTERIOR as f64; ChainEnv::N_INTERIOR]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gvf::FixedActionDist;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn right_terminal_carries_the_cumulant() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut env = ChainEnv::starting_at(8);
        let step = env.step(RIGHT, &mut rng);
        assert_eq!(step.s_next, ChainEnv::RIGHT_TERMINAL);
        assert_eq!(step.cumulant, 1.0);
        assert_eq!(step.gamma_next, 0.0);
        assert!(ChainEnv::is_interior(env.state()));
    }

    #[test]
    fn left_terminal_is_silent() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut env = ChainEnv::starting_at(1);
        let step = env.step(LEFT, &mut rng);
        assert_eq!(step.s_next, ChainEnv::LEFT_TERMINAL);
        assert_eq!(step.cumulant, 0.0);
        assert_eq!(step.gamma_next, 0.0);
    }

    #[test]
    fn interior_moves_continue() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut env = ChainEnv::starting_at(4);
        let step = env.step(RIGHT, &mut rng);
        assert_eq!(step.s_next, 5);
        assert_eq!(step.cumulant, 0.0);
        assert_eq!(step.gamma_next, 1.0);
        assert_eq!(env.state(), 5);
    }

    #[test]
    fn episodes_terminate_under_the_symmetric_walk() {
        let mu = FixedActionDist::new(vec![0.5, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10_000 {
            let mut env = ChainEnv::new(&mut rng);
            let mut steps = 0u64;
            loop {
                let a = mu.sample(&env.state(), &mut rng);
                let step = env.step(a, &mut rng);
                steps += 1;
                if step.gamma_next == 0.0 {
                    break;
                }
                assert!(steps < 10_000, "episode failed to terminate");
            }
        }
    }

    #[test]
    fn same_seed_gives_identical_trajectories() {
        let mu = FixedActionDist::new(vec![0.5, 0.5]).unwrap();
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut env = ChainEnv::new(&mut rng);
            (0..200)
                .map(|_| {
                    let a = mu.sample(&env.state(), &mut rng);
                    let st = env.step(a, &mut rng);
                    (st.s, st.a.0, st.s_next)
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn model_agrees_with_environment() {
        let model = ChainEnv::model();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for dense in 0..model.n_states() {
            for a in [LEFT, RIGHT] {
                let m = model.transition(dense, a);
                let mut env = ChainEnv::starting_at(model.native_id(dense));
                let step = env.step(a, &mut rng);
                assert_eq!(m.next_native, step.s_next);
                assert_eq!(m.cumulant, step.cumulant);
                assert_eq!(m.gamma_next, step.gamma_next);
            }
        }
    }
}
