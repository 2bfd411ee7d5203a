//! Microworld environments and their policy menus.
//!
//! Each environment is a deterministic function of (state, action, rng
//! stream): replaying the same seed reproduces the same trajectory. On
//! (pseudo-)termination the environment restarts itself, so a behavior
//! stream never has to handle terminal states explicitly.

pub mod chain;
pub mod cont;
pub mod fourrooms;
pub mod policies;

pub use chain::ChainEnv;
pub use cont::ContFourRoomsEnv;
pub use fourrooms::{FourRoomsEnv, RoomsLayout};

use rand::RngCore;

use crate::gvf::{Action, Transition};

/// One environment interaction, before the importance ratio is attached.
#[derive(Debug, Clone)]
pub struct EnvStep<S> {
    pub s: S,
    pub a: Action,
    pub s_next: S,
    pub cumulant: f64,
    pub gamma_next: f64,
}

impl<S> EnvStep<S> {
    /// Attach the importance ratio computed at generation time.
    pub fn with_rho(self, rho: f64) -> Transition<S> {
        Transition {
            s: self.s,
            a: self.a,
            s_next: self.s_next,
            cumulant: self.cumulant,
            gamma_next: self.gamma_next,
            rho,
        }
    }
}

/// A stepping microworld owned by a single run.
pub trait Environment: Send {
    type State: Clone + std::fmt::Debug;

    fn n_actions(&self) -> usize;

    /// Current (non-terminal) state.
    fn state(&self) -> Self::State;

    /// Take one action. On termination the returned step carries
    /// `gamma_next == 0` and the environment restarts internally.
    fn step(&mut self, a: Action, rng: &mut dyn RngCore) -> EnvStep<Self::State>;
}

/// Result of one enumerated model transition, in dense value-state indices.
#[derive(Debug, Clone, Copy)]
pub struct ModelStep {
    /// Dense index of the successor, `None` on termination.
    pub next_dense: Option<usize>,
    /// Native id of the successor (sentinel for terminals).
    pub next_native: usize,
    pub cumulant: f64,
    pub gamma_next: f64,
}

/// Enumerable dynamics of a tabular environment, used by the dynamic
/// programming and exact-expectation oracles. Value states are indexed
/// densely `0..n_states`; `native_id` maps back to the environment's own
/// state ids (the ones policies and featurizers see).
pub trait TabularModel {
    fn n_states(&self) -> usize;

    fn n_actions(&self) -> usize;

    fn native_id(&self, dense: usize) -> usize;

    fn transition(&self, dense: usize, a: Action) -> ModelStep;

    /// Distribution over dense states after a termination, matching the
    /// environment's restart rule.
    fn restart_weights(&self) -> Vec<f64>;
}
