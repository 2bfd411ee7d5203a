//! Named policy menu for the microworlds.
//!
//! Experiment configs refer to policies by these names; the special-state
//! draws are keyed by a seed recorded in the config, so a policy is fixed
//! per experiment rather than per run.

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fourrooms::{RoomsLayout, DOWN};
use crate::error::{Error, Result};
use crate::gvf::{Action, ContinuousState, FixedActionDist, Policy, StateId, TabularPolicy};

/// Number of special cells in the skewed behaviors.
pub const N_SPECIAL_CELLS: usize = 25;
/// Down-probability inside the special cells of the tabular skewed behavior.
pub const SPECIAL_DOWN_PROB: f64 = 0.05;

/// Two-action chain policies, `[left, right]`.
pub fn chain_policy(name: &str) -> Result<FixedActionDist> {
    let probs = match name {
        "p90_10" => vec![0.9, 0.1],
        "p10_90" => vec![0.1, 0.9],
        "p50_50" => vec![0.5, 0.5],
        "p99_01" => vec![0.99, 0.01],
        "p01_99" => vec![0.01, 0.99],
        other => {
            return Err(Error::InvalidPolicy(format!(
                "unknown chain policy {other:?}"
            )))
        }
    };
    FixedActionDist::new(probs)
}

/// Draws `n` distinct open cells from a named seed.
pub fn pick_special_cells(layout: &RoomsLayout, seed: u64, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells = layout.open_cells().to_vec();
    cells.shuffle(&mut rng);
    cells.truncate(n);
    cells.sort_unstable();
    cells
}

/// Uniform over the four directions except in 25 seed-drawn cells, which
/// take down with probability 0.05 and split the rest evenly.
pub fn down_averse_behavior(layout: &RoomsLayout, seed: u64) -> Result<TabularPolicy> {
    let special = pick_special_cells(layout, seed, N_SPECIAL_CELLS);
    let uniform = vec![0.25; 4];
    let rest = (1.0 - SPECIAL_DOWN_PROB) / 3.0;
    let mut skew = vec![rest; 4];
    skew[DOWN.0] = SPECIAL_DOWN_PROB;
    let rows: Vec<Vec<f64>> = (0..RoomsLayout::SIZE * RoomsLayout::SIZE)
        .map(|cell| {
            if special.binary_search(&cell).is_ok() {
                skew.clone()
            } else {
                uniform.clone()
            }
        })
        .collect();
    TabularPolicy::new(rows)
}

pub fn persistent_down() -> FixedActionDist {
    FixedActionDist::deterministic(DOWN, 4)
}

pub fn favored_down() -> FixedActionDist {
    let rest = 0.1 / 3.0;
    let mut probs = vec![rest; 4];
    probs[DOWN.0] = 0.9;
    FixedActionDist::new(probs).expect("valid favored-down distribution")
}

/// State-dependent continuous policy: a base distribution with per-cell
/// overrides on 1x1 grid cells.
#[derive(Debug, Clone)]
pub struct RegionPolicy {
    base: [f64; 4],
    overrides: HashMap<usize, [f64; 4]>,
}

impl RegionPolicy {
    fn cell_of(s: &ContinuousState) -> usize {
        let col = (s.x.floor() as usize).min(RoomsLayout::SIZE - 1);
        let row = (s.y.floor() as usize).min(RoomsLayout::SIZE - 1);
        row * RoomsLayout::SIZE + col
    }

    pub fn override_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.overrides.keys().copied()
    }
}

impl Policy<ContinuousState> for RegionPolicy {
    fn n_actions(&self) -> usize {
        4
    }

    fn prob(&self, s: &ContinuousState, a: Action) -> f64 {
        let dist = self
            .overrides
            .get(&Self::cell_of(s))
            .unwrap_or(&self.base);
        dist[a.0]
    }
}

/// Uniform except in 25 seed-drawn cells where down has probability 0.1.
pub fn state_variant_behavior(layout: &RoomsLayout, seed: u64) -> RegionPolicy {
    let rest = 0.9 / 3.0;
    let mut skew = [rest; 4];
    skew[DOWN.0] = 0.1;
    let overrides = pick_special_cells(layout, seed, N_SPECIAL_CELLS)
        .into_iter()
        .map(|cell| (cell, skew))
        .collect();
    RegionPolicy { base: [0.25; 4], overrides }
}

/// Uniform except in 25 seed-drawn cells with randomly drawn distributions.
pub fn state_weight_variant_behavior(layout: &RoomsLayout, seed: u64) -> RegionPolicy {
    let cells = pick_special_cells(layout, seed, N_SPECIAL_CELLS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let overrides = cells
        .into_iter()
        .map(|cell| {
            let raw: [f64; 4] = [
                rng.gen::<f64>() + 1e-3,
                rng.gen::<f64>() + 1e-3,
                rng.gen::<f64>() + 1e-3,
                rng.gen::<f64>() + 1e-3,
            ];
            let total: f64 = raw.iter().sum();
            (cell, [raw[0] / total, raw[1] / total, raw[2] / total, raw[3] / total])
        })
        .collect();
    RegionPolicy { base: [0.25; 4], overrides }
}

/// Resolve a tabular Four Rooms policy by config name.
pub fn rooms_policy(
    name: &str,
    layout: &RoomsLayout,
    seed: u64,
) -> Result<Arc<dyn Policy<StateId>>> {
    match name {
        "uniform" => Ok(Arc::new(FixedActionDist::new(vec![0.25; 4])?)),
        "down_averse_25" => Ok(Arc::new(down_averse_behavior(layout, seed)?)),
        "persistent_down" => Ok(Arc::new(persistent_down())),
        other => Err(Error::InvalidPolicy(format!(
            "unknown four-rooms policy {other:?}"
        ))),
    }
}

/// Resolve a continuous Four Rooms policy by config name.
pub fn cont_policy(
    name: &str,
    layout: &RoomsLayout,
    seed: u64,
) -> Result<Arc<dyn Policy<ContinuousState>>> {
    match name {
        "uniform" => Ok(Arc::new(FixedActionDist::new(vec![0.25; 4])?)),
        "state_variant" => Ok(Arc::new(state_variant_behavior(layout, seed))),
        "state_weight_variant" => Ok(Arc::new(state_weight_variant_behavior(layout, seed))),
        "persistent_down" => Ok(Arc::new(persistent_down())),
        "favored_down" => Ok(Arc::new(favored_down())),
        other => Err(Error::InvalidPolicy(format!(
            "unknown continuous-rooms policy {other:?}"
        ))),
    }
}
