//! Continuous Four Rooms: an 11x11 continuous world with the tabular wall
//! layout, where the agent is a circle of radius 0.1.
//!
//! A step moves `0.5 + U(-0.1, 0.1)` along the chosen cardinal axis with
//! orthogonal drift drawn from a zero-mean normal with variance 0.01. Motion
//! resolves in 10 equal substeps; the first substep whose circle overlaps a
//! wall stops the move at the last free position, emits cumulant 1 with
//! `gamma_next = 0`, and restarts the agent at a random collision-free
//! point. Collision-free steps emit cumulant 0 and continuation 0.9.

use std::sync::Arc;

use rand::Rng;
use rand::RngCore;
use rand_distr::{Distribution, Normal};

use super::fourrooms::{RoomsLayout, ROOMS_GAMMA};
use super::{EnvStep, Environment};
use crate::error::{Error, Result};
use crate::gvf::{Action, ContinuousState};

pub use super::fourrooms::{DOWN, LEFT, RIGHT, UP};

pub const AGENT_RADIUS: f64 = 0.1;
pub const SUBSTEPS: usize = 10;
pub const STEP_LENGTH: f64 = 0.5;
pub const STEP_JITTER: f64 = 0.1;
/// Standard deviation of the orthogonal drift (variance 0.01).
pub const DRIFT_STD: f64 = 0.1;

pub const WORLD_SIZE: f64 = 11.0;

#[derive(Clone)]
pub struct ContFourRoomsEnv {
    walls: Arc<Vec<(f64, f64, f64, f64)>>,
    pos: ContinuousState,
    gamma: f64,
    drift: Normal<f64>,
}

impl ContFourRoomsEnv {
    pub fn new(layout: &RoomsLayout, rng: &mut dyn RngCore) -> Self {
        let mut env = Self {
            walls: Arc::new(layout.wall_rects()),
            pos: ContinuousState::new(0.0, 0.0),
            gamma: ROOMS_GAMMA,
            drift: Normal::new(0.0, DRIFT_STD).expect("valid drift distribution"),
        };
        env.pos = env.random_free(rng);
        env
    }

    /// Variant with a different (possibly zero) continuation on free steps.
    pub fn with_continuation(layout: &RoomsLayout, gamma: f64, rng: &mut dyn RngCore) -> Self {
        let mut env = Self::new(layout, rng);
        env.gamma = gamma;
        env
    }

    pub fn agent(&self) -> ContinuousState {
        self.pos
    }

    /// Place the agent at a known collision-free point (probes, rollouts).
    pub fn set_agent(&mut self, p: ContinuousState) -> Result<()> {
        if self.collides(p) {
            return Err(Error::InvalidState);
        }
        self.pos = p;
        Ok(())
    }

    pub fn collides(&self, p: ContinuousState) -> bool {
        self.distance_to_walls(p) < AGENT_RADIUS
    }

    /// Distance from a point to the nearest wall surface (interior wall
    /// squares and the world boundary).
    pub fn distance_to_walls(&self, p: ContinuousState) -> f64 {
        let mut d = p
            .x
            .min(WORLD_SIZE - p.x)
            .min(p.y)
            .min(WORLD_SIZE - p.y);
        for &(x0, y0, x1, y1) in self.walls.iter() {
            let dx = (x0 - p.x).max(0.0).max(p.x - x1);
            let dy = (y0 - p.y).max(0.0).max(p.y - y1);
            d = d.min((dx * dx + dy * dy).sqrt());
        }
        d
    }

    pub fn random_free(&self, rng: &mut dyn RngCore) -> ContinuousState {
        for _ in 0..100_000 {
            let p = ContinuousState::new(
                rng.gen_range(0.0..WORLD_SIZE),
                rng.gen_range(0.0..WORLD_SIZE),
            );
            if !self.collides(p) {
                return p;
            }
        }
        unreachable!("free space occupies most of the world");
    }
}

impl Environment for ContFourRoomsEnv {
    type State = ContinuousState;

    fn n_actions(&self) -> usize {
        4
    }

    fn state(&self) -> ContinuousState {
        self.pos
    }

    fn step(&mut self, a: Action, rng: &mut dyn RngCore) -> EnvStep<ContinuousState> {
        let main = STEP_LENGTH + rng.gen_range(-STEP_JITTER..STEP_JITTER);
        let drift = self.drift.sample(rng);
        let (dx, dy) = match a {
            UP => (drift, -main),
            DOWN => (drift, main),
            LEFT => (-main, drift),
            RIGHT => (main, drift),
            _ => panic!("continuous rooms have four actions"),
        };
        let start = self.pos;
        let mut last_free = start;
        for i in 1..=SUBSTEPS {
            let f = i as f64 / SUBSTEPS as f64;
            let p = ContinuousState::new(start.x + f * dx, start.y + f * dy);
            if self.collides(p) {
                let step = EnvStep {
                    s: start,
                    a,
                    s_next: last_free,
                    cumulant: 1.0,
                    gamma_next: 0.0,
                };
                self.pos = self.random_free(rng);
                return step;
            }
            last_free = p;
        }
        self.pos = last_free;
        EnvStep {
            s: start,
            a,
            s_next: last_free,
            cumulant: 0.0,
            gamma_next: self.gamma,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn env(seed: u64) -> (ContFourRoomsEnv, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = RoomsLayout::standard();
        let e = ContFourRoomsEnv::new(&layout, &mut rng);
        (e, rng)
    }

    #[test]
    fn free_steps_move_within_the_jitter_band() {
        let (mut e, mut rng) = env(3);
        for _ in 0..2000 {
            e.set_agent(ContinuousState::new(2.5, 2.5)).unwrap();
            let step = e.step(RIGHT, &mut rng);
            assert_eq!(step.cumulant, 0.0);
            let along = step.s_next.x - step.s.x;
            assert!((0.4..=0.6).contains(&along), "axis displacement {along}");
        }
    }

    #[test]
    fn facing_a_wall_up_close_collides_on_the_first_substep() {
        let (mut e, mut rng) = env(4);
        // Wall square spans x in [5, 6] at row 0; 0.13 of clearance leaves
        // the circle overlapping after the very first substep.
        let start = ContinuousState::new(5.0 - AGENT_RADIUS - 0.03, 0.5);
        for _ in 0..200 {
            e.set_agent(start).unwrap();
            let step = e.step(RIGHT, &mut rng);
            assert_eq!(step.cumulant, 1.0);
            assert_eq!(step.gamma_next, 0.0);
            // Stopped at contact: the recorded end is the last free point,
            // here the start itself.
            assert_eq!(step.s_next.x, start.x);
        }
    }

    #[test]
    fn orthogonal_drift_has_the_stated_moments() {
        let (mut e, mut rng) = env(5);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            e.set_agent(ContinuousState::new(2.5, 2.0)).unwrap();
            let step = e.step(DOWN, &mut rng);
            assert_eq!(step.cumulant, 0.0, "unexpected collision in open space");
            let drift = step.s_next.x - step.s.x;
            sum += drift;
            sum_sq += drift * drift;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        let sigma_mean = DRIFT_STD / (n as f64).sqrt();
        assert!(mean.abs() < 3.0 * sigma_mean, "drift mean {mean}");
        assert!((var - 0.01).abs() < 0.05 * 0.01, "drift variance {var}");
    }

    #[test]
    fn agent_never_ends_a_step_inside_a_wall() {
        let (mut e, mut rng) = env(6);
        for _ in 0..20_000 {
            let a = Action(rng.gen_range(0..4));
            let step = e.step(a, &mut rng);
            assert!(e.distance_to_walls(step.s_next) >= AGENT_RADIUS - 1e-9);
            assert!(e.distance_to_walls(e.agent()) >= AGENT_RADIUS - 1e-9);
        }
    }

    #[test]
    fn trajectories_replay_under_the_same_seed() {
        let run = |seed| {
            let (mut e, mut rng) = env(seed);
            (0..500)
                .map(|_| {
                    let a = Action(rng.gen_range(0..4));
                    let st = e.step(a, &mut rng);
                    (st.s_next.x, st.s_next.y, st.cumulant)
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
    }

    #[test]
    fn zero_continuation_variant_terminates_every_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let layout = RoomsLayout::standard();
        let mut e = ContFourRoomsEnv::with_continuation(&layout, 0.0, &mut rng);
        e.set_agent(ContinuousState::new(2.5, 2.5)).unwrap();
        let step = e.step(RIGHT, &mut rng);
        assert_eq!(step.gamma_next, 0.0);
        assert_eq!(step.cumulant, 0.0);
    }

    #[test]
    fn rejects_placing_the_agent_in_a_wall() {
        let (mut e, _) = env(9);
        assert!(e.set_agent(ContinuousState::new(5.5, 0.5)).is_err());
        assert!(e.set_agent(ContinuousState::new(0.05, 0.05)).is_err());
    }
}
