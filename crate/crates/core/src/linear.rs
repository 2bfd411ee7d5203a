//! Linear value-function machinery: sparse features, tabular and tile-coded
//! featurizers, and the optimizers that turn update directions into weight
//! changes.
//!
//! Everything here is linear in the weights: `V(s) = theta . phi(s)`, with
//! tabular prediction as the one-hot special case. Gradients of `V` are then
//! the feature vectors themselves, which keeps per-transition updates sparse.

use crate::error::{Error, Result};
use crate::gvf::ContinuousState;

/// A sparse vector as parallel index/value arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVec {
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(indices.len(), values.len());
        Self { indices, values }
    }

    /// One-hot vector with a single 1 at `index`.
    pub fn unit(index: usize) -> Self {
        Self { indices: vec![index], values: vec![1.0] }
    }

    /// Binary vector with a 1 at every listed index.
    pub fn binary(indices: Vec<usize>) -> Self {
        let values = vec![1.0; indices.len()];
        Self { indices, values }
    }

    pub fn n_active(&self) -> usize {
        self.indices.len()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| dense[i] * v)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// A weight-space direction produced by an update estimator, before any
/// learning-rate scaling. Dense storage with an explicit support list so
/// optimizers touch only the entries the estimate actually set.
#[derive(Debug, Clone)]
pub struct UpdateEstimate {
    dense: Vec<f64>,
    support: Vec<usize>,
    touched: Vec<bool>,
}

impl UpdateEstimate {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dense: vec![0.0; dim],
            support: Vec::new(),
            touched: vec![false; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dense.len()
    }

    /// Accumulate `c * phi` into the estimate.
    pub fn add_scaled(&mut self, phi: &SparseVec, c: f64) {
        for (&i, &v) in phi.indices.iter().zip(&phi.values) {
            if !self.touched[i] {
                self.touched[i] = true;
                self.support.push(i);
            }
            self.dense[i] += c * v;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for &i in &self.support {
            self.dense[i] *= c;
        }
    }

    /// Indices written during accumulation, in first-touch order.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.dense
    }

    pub fn get(&self, i: usize) -> f64 {
        self.dense[i]
    }

    pub fn is_finite(&self) -> bool {
        self.support.iter().all(|&i| self.dense[i].is_finite())
    }

    pub fn norm_sq(&self) -> f64 {
        self.support.iter().map(|&i| self.dense[i] * self.dense[i]).sum()
    }
}

/// Maps a state to its sparse feature vector.
pub trait Featurizer: Send + Sync {
    type State;

    fn dim(&self) -> usize;

    fn features(&self, s: &Self::State) -> SparseVec;
}

/// Read-only state-value view, implemented by every learner that can report
/// `V(s)`.
pub trait ValueFn<S> {
    fn value(&self, s: &S) -> f64;
}

/// One-hot features over discrete states, with an optional remapping from
/// native state ids to dense weight indices (environments whose value states
/// are a strict subset of their state ids, e.g. interior chain states).
#[derive(Debug, Clone)]
pub struct TabularFeaturizer {
    lookup: Vec<Option<usize>>,
    dim: usize,
}

impl TabularFeaturizer {
    /// States `0..n` map to weight indices `0..n` unchanged.
    pub fn identity(n: usize) -> Self {
        Self { lookup: (0..n).map(Some).collect(), dim: n }
    }

    /// Explicit native-id to weight-index table; `None` marks states with no
    /// value (terminals / walls), which must never be featurized.
    pub fn with_lookup(lookup: Vec<Option<usize>>, dim: usize) -> Self {
        Self { lookup, dim }
    }

    pub fn weight_index(&self, s: usize) -> Option<usize> {
        self.lookup.get(s).copied().flatten()
    }
}

impl Featurizer for TabularFeaturizer {
    type State = usize;

    fn dim(&self) -> usize {
        self.dim
    }

    fn features(&self, s: &usize) -> SparseVec {
        let idx = self
            .weight_index(*s)
            .unwrap_or_else(|| panic!("state {s} has no value-function slot"));
        SparseVec::unit(idx)
    }
}

/// Tile coding over a 2-D box, without hashing.
///
/// Each of the `tilings` grids is offset by `(i / tilings) * tile_width` in
/// both dimensions, and every in-bounds point activates exactly one tile per
/// tiling. Cells at the upper edge are clamped into the last tile, keeping
/// the dense layout at `tilings * tiles * tiles` weights.
#[derive(Debug, Clone)]
pub struct TileCoder {
    tilings: usize,
    tiles: usize,
    low: (f64, f64),
    high: (f64, f64),
}

impl TileCoder {
    pub fn new(tilings: usize, tiles: usize, low: (f64, f64), high: (f64, f64)) -> Self {
        assert!(tilings > 0 && tiles > 0);
        assert!(high.0 > low.0 && high.1 > low.1);
        Self { tilings, tiles, low, high }
    }

    pub fn try_features(&self, s: &ContinuousState) -> Result<SparseVec> {
        if s.x < self.low.0 || s.x > self.high.0 || s.y < self.low.1 || s.y > self.high.1 {
            return Err(Error::OutOfBounds { x: s.x, y: s.y });
        }
        let wx = (self.high.0 - self.low.0) / self.tiles as f64;
        let wy = (self.high.1 - self.low.1) / self.tiles as f64;
        let per_tiling = self.tiles * self.tiles;
        let mut indices = Vec::with_capacity(self.tilings);
        for tiling in 0..self.tilings {
            let off = tiling as f64 / self.tilings as f64;
            let cx = (((s.x - self.low.0) / wx + off).floor() as isize).clamp(0, self.tiles as isize - 1);
            let cy = (((s.y - self.low.1) / wy + off).floor() as isize).clamp(0, self.tiles as isize - 1);
            indices.push(tiling * per_tiling + cy as usize * self.tiles + cx as usize);
        }
        Ok(SparseVec::binary(indices))
    }
}

impl Featurizer for TileCoder {
    type State = ContinuousState;

    fn dim(&self) -> usize {
        self.tilings * self.tiles * self.tiles
    }

    fn features(&self, s: &ContinuousState) -> SparseVec {
        self.try_features(s).expect("state out of tile-coder bounds")
    }
}

/// Linear value function `V(s) = theta . phi(s)`.
#[derive(Debug, Clone)]
pub struct LinearValueFn<F: Featurizer> {
    weights: Vec<f64>,
    feat: F,
}

impl<F: Featurizer> LinearValueFn<F> {
    pub fn zeros(feat: F) -> Self {
        Self { weights: vec![0.0; feat.dim()], feat }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn featurizer(&self) -> &F {
        &self.feat
    }

    pub fn features(&self, s: &F::State) -> SparseVec {
        self.feat.features(s)
    }
}

impl<F: Featurizer> ValueFn<F::State> for LinearValueFn<F> {
    fn value(&self, s: &F::State) -> f64 {
        self.feat.features(s).dot(&self.weights)
    }
}

pub const RMSPROP_DECAY: f64 = 0.99;
pub const RMSPROP_EPSILON: f64 = 1e-8;

/// Turns an update direction into a weight change.
#[derive(Debug, Clone)]
pub enum Optimizer {
    /// `theta += alpha * u`.
    Constant { alpha: f64 },
    /// Per-weight accumulator `acc = decay * acc + (1 - decay) * u^2`,
    /// `theta += alpha * u / sqrt(acc + epsilon)`, updated only on the
    /// support of the estimate.
    RmsProp {
        alpha: f64,
        decay: f64,
        epsilon: f64,
        acc: Vec<f64>,
    },
}

impl Optimizer {
    pub fn constant(alpha: f64) -> Self {
        Optimizer::Constant { alpha }
    }

    pub fn rmsprop(alpha: f64, dim: usize) -> Self {
        Optimizer::RmsProp {
            alpha,
            decay: RMSPROP_DECAY,
            epsilon: RMSPROP_EPSILON,
            acc: vec![0.0; dim],
        }
    }

    /// Applies `u` to `weights`; rejects non-finite directions untouched.
    pub fn apply(&mut self, weights: &mut [f64], u: &UpdateEstimate) -> Result<()> {
        if !u.is_finite() {
            return Err(Error::NonFiniteUpdate);
        }
        match self {
            Optimizer::Constant { alpha } => {
                for &i in u.support() {
                    weights[i] += *alpha * u.get(i);
                }
            }
            Optimizer::RmsProp { alpha, decay, epsilon, acc } => {
                for &i in u.support() {
                    let g = u.get(i);
                    acc[i] = *decay * acc[i] + (1.0 - *decay) * g * g;
                    weights[i] += *alpha * g / (acc[i] + *epsilon).sqrt();
                }
            }
        }
        Ok(())
    }
}
