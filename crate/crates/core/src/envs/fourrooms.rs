//! Tabular Four Rooms: an 11x11 grid split into four rooms, each adjacent
//! pair connected by a single hallway cell.
//!
//! The prediction cumulant is 1 when the agent walks into a wall and 0
//! otherwise; walking into a wall pseudo-terminates (`gamma_next = 0`, the
//! agent stays put for the recorded transition) and the episode restarts at
//! a uniformly random open cell. Otherwise continuation is 0.9, so the value
//! under a downward target policy is `0.9 ^ (free moves to the bottom wall)`.
//!
//! The layout is loaded from an ASCII map: `#` wall, `.` open, `H` hallway
//! (hallways are open cells). The standard map is committed next to this
//! module.

use std::sync::Arc;

use rand::Rng;
use rand::RngCore;

use super::{EnvStep, Environment, ModelStep, TabularModel};
use crate::error::{Error, Result};
use crate::gvf::{Action, GvfSpec, Policy};
use crate::linear::TabularFeaturizer;

pub const UP: Action = Action(0);
pub const DOWN: Action = Action(1);
pub const LEFT: Action = Action(2);
pub const RIGHT: Action = Action(3);

pub const ROOMS_GAMMA: f64 = 0.9;

const STANDARD_MAP: &str = include_str!("fourrooms_layout.txt");

/// Parsed wall map. Cells are addressed row-major, `cell = row * 11 + col`.
#[derive(Debug, Clone)]
pub struct RoomsLayout {
    walls: Vec<bool>,
    open_cells: Vec<usize>,
    open_index: Vec<Option<usize>>,
    hallways: Vec<usize>,
}

impl RoomsLayout {
    pub const SIZE: usize = 11;

    pub fn standard() -> Self {
        Self::parse(STANDARD_MAP).expect("committed layout is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let size = Self::SIZE;
        let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if rows.len() != size {
            return Err(Error::InvalidPolicy(format!(
                "layout must have {size} rows, found {}",
                rows.len()
            )));
        }
        let mut walls = vec![false; size * size];
        let mut hallways = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            let chars: Vec<char> = row.trim_end().chars().collect();
            if chars.len() != size {
                return Err(Error::InvalidPolicy(format!(
                    "layout row {r} must have {size} cells, found {}",
                    chars.len()
                )));
            }
            for (c, ch) in chars.iter().enumerate() {
                match ch {
                    '#' => walls[r * size + c] = true,
                    '.' => {}
                    'H' => hallways.push(r * size + c),
                    other => {
                        return Err(Error::InvalidPolicy(format!(
                            "unexpected layout character {other:?}"
                        )))
                    }
                }
            }
        }
        let open_cells: Vec<usize> = (0..size * size).filter(|c| !walls[*c]).collect();
        let mut open_index = vec![None; size * size];
        for (dense, &cell) in open_cells.iter().enumerate() {
            open_index[cell] = Some(dense);
        }
        let layout = Self { walls, open_cells, open_index, hallways };
        layout.check_connected()?;
        Ok(layout)
    }

    fn check_connected(&self) -> Result<()> {
        let Some(&start) = self.open_cells.first() else {
            return Err(Error::InvalidPolicy("layout has no open cells".into()));
        };
        let mut seen = vec![false; Self::SIZE * Self::SIZE];
        let mut stack = vec![start];
        seen[start] = true;
        let mut reached = 0usize;
        while let Some(cell) = stack.pop() {
            reached += 1;
            let (r, c) = (cell / Self::SIZE, cell % Self::SIZE);
            for (dr, dc) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr < 0 || nc < 0 || nr >= Self::SIZE as i64 || nc >= Self::SIZE as i64 {
                    continue;
                }
                let n = nr as usize * Self::SIZE + nc as usize;
                if !self.walls[n] && !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        if reached != self.open_cells.len() {
            return Err(Error::InvalidPolicy(
                "layout open cells are not mutually reachable".into(),
            ));
        }
        Ok(())
    }

    pub fn cell(row: usize, col: usize) -> usize {
        row * Self::SIZE + col
    }

    /// Out-of-grid coordinates count as walls.
    pub fn blocks(&self, row: i64, col: i64) -> bool {
        if row < 0 || col < 0 || row >= Self::SIZE as i64 || col >= Self::SIZE as i64 {
            return true;
        }
        self.walls[row as usize * Self::SIZE + col as usize]
    }

    pub fn is_open(&self, cell: usize) -> bool {
        !self.walls[cell]
    }

    pub fn open_cells(&self) -> &[usize] {
        &self.open_cells
    }

    pub fn hallways(&self) -> &[usize] {
        &self.hallways
    }

    pub fn open_index(&self, cell: usize) -> Option<usize> {
        self.open_index.get(cell).copied().flatten()
    }

    /// One-hot features over the open cells.
    pub fn featurizer(&self) -> TabularFeaturizer {
        TabularFeaturizer::with_lookup(self.open_index.clone(), self.open_cells.len())
    }

    /// Wall cells as unit squares `(x0, y0, x1, y1)` in continuous
    /// coordinates (x along columns, y along rows).
    pub fn wall_rects(&self) -> Vec<(f64, f64, f64, f64)> {
        (0..Self::SIZE * Self::SIZE)
            .filter(|&cell| self.walls[cell])
            .map(|cell| {
                let (r, c) = (cell / Self::SIZE, cell % Self::SIZE);
                (c as f64, r as f64, c as f64 + 1.0, r as f64 + 1.0)
            })
            .collect()
    }
}

fn action_delta(a: Action) -> (i64, i64) {
    match a {
        UP => (-1, 0),
        DOWN => (1, 0),
        LEFT => (0, -1),
        RIGHT => (0, 1),
        _ => panic!("rooms have four actions"),
    }
}

#[derive(Clone)]
pub struct FourRoomsEnv {
    layout: Arc<RoomsLayout>,
    cell: usize,
}

impl FourRoomsEnv {
    pub fn new(layout: Arc<RoomsLayout>, rng: &mut dyn RngCore) -> Self {
        let cell = Self::random_open(&layout, rng);
        Self { layout, cell }
    }

    pub fn starting_at(layout: Arc<RoomsLayout>, cell: usize) -> Self {
        assert!(layout.is_open(cell));
        Self { layout, cell }
    }

    fn random_open(layout: &RoomsLayout, rng: &mut dyn RngCore) -> usize {
        layout.open_cells()[rng.gen_range(0..layout.open_cells().len())]
    }

    pub fn layout(&self) -> &Arc<RoomsLayout> {
        &self.layout
    }

    pub fn gvf(layout: Arc<RoomsLayout>, target: Arc<dyn Policy<usize>>) -> GvfSpec<usize> {
        let walls = layout.clone();
        let cumulant = move |s: &usize, a: Action, s_next: &usize| {
            // A wall hit records s_next == s with the move blocked.
            let (dr, dc) = action_delta(a);
            let (r, c) = ((*s / RoomsLayout::SIZE) as i64, (*s % RoomsLayout::SIZE) as i64);
            if walls.blocks(r + dr, c + dc) && s_next == s {
                1.0
            } else {
                0.0
            }
        };
        let cumulant = Arc::new(cumulant);
        let cont_cumulant = cumulant.clone();
        GvfSpec::new(
            target,
            cumulant.clone(),
            Arc::new(move |s: &usize, a, n: &usize| {
                if cont_cumulant(s, a, n) == 1.0 {
                    0.0
                } else {
                    ROOMS_GAMMA
                }
            }),
        )
    }

    pub fn model(layout: Arc<RoomsLayout>) -> RoomsModel {
        RoomsModel { layout }
    }
}

impl Environment for FourRoomsEnv {
    type State = usize;

    fn n_actions(&self) -> usize {
        4
    }

    fn state(&self) -> usize {
        self.cell
    }

    fn step(&mut self, a: Action, rng: &mut dyn RngCore) -> EnvStep<usize> {
        let s = self.cell;
        let (r, c) = ((s / RoomsLayout::SIZE) as i64, (s % RoomsLayout::SIZE) as i64);
        let (dr, dc) = action_delta(a);
        let (nr, nc) = (r + dr, c + dc);
        if self.layout.blocks(nr, nc) {
            let step = EnvStep { s, a, s_next: s, cumulant: 1.0, gamma_next: 0.0 };
            self.cell = Self::random_open(&self.layout, rng);
            step
        } else {
            let next = nr as usize * RoomsLayout::SIZE + nc as usize;
            self.cell = next;
            EnvStep { s, a, s_next: next, cumulant: 0.0, gamma_next: ROOMS_GAMMA }
        }
    }
}

/// Enumerable Four Rooms dynamics over dense open-cell indices.
pub struct RoomsModel {
    layout: Arc<RoomsLayout>,
}

impl TabularModel for RoomsModel {
    fn n_states(&self) -> usize {
        self.layout.open_cells().len()
    }

    fn n_actions(&self) -> usize {
        4
    }

    fn native_id(&self, dense: usize) -> usize {
        self.layout.open_cells()[dense]
    }

    fn transition(&self, dense: usize, a: Action) -> ModelStep {
        let cell = self.native_id(dense);
        let (r, c) = ((cell / RoomsLayout::SIZE) as i64, (cell % RoomsLayout::SIZE) as i64);
        let (dr, dc) = action_delta(a);
        let (nr, nc) = (r + dr, c + dc);
        if self.layout.blocks(nr, nc) {
            ModelStep { next_dense: None, next_native: cell, cumulant: 1.0, gamma_next: 0.0 }
        } else {
            let next = nr as usize * RoomsLayout::SIZE + nc as usize;
            ModelStep {
                next_dense: self.layout.open_index(next),
                next_native: next,
                cumulant: 0.0,
                gamma_next: ROOMS_GAMMA,
            }
        }
    }

    fn restart_weights(&self) -> Vec<f64> {
        let n = self.n_states();
        vec![1.0 / n as f64; n]
    }
}
