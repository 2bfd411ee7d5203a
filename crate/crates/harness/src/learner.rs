//! Learner dispatch: wires an estimator kind to its sampling rule, its
//! update formula, and the optimizer that applies the result.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use resample_core::buffer::ReplayBuffer;
use resample_core::envs::cont::WORLD_SIZE;
use resample_core::error::Error;
use resample_core::estimators::{
    bias_corrected_update, is_update, mean_update, vtrace_update, wis_buffer_update,
    wis_minibatch_update, wis_optimal_update, EstimatorKind, SarsaLearner, WisTd0State,
};
use resample_core::gvf::{Action, ContinuousState, Policy, StateId, Transition};
use resample_core::linear::{
    Featurizer, LinearValueFn, Optimizer, TabularFeaturizer, TileCoder, ValueFn,
};

use crate::config::{ConfigError, ExperimentConfig, OptimizerSpec};

pub const TILINGS: usize = 64;
pub const TILES: usize = 8;

/// One learning agent inside a run: consumes stream observations and
/// scheduled buffer updates, exposes values for error measurement.
pub trait Learner<S>: Send {
    /// Stream hook for learners needing consecutive `(s, a, s', a')` pairs.
    fn observe(&mut self, _t: &Transition<S>, _a_next: Action) {}

    /// One scheduled update. `Ok(true)` means the update was skipped
    /// (degenerate weighted batch); errors abort the run.
    fn update(&mut self, buf: &ReplayBuffer<S>, k: usize, rng: &mut ChaCha8Rng) -> Result<bool, Error>;

    fn value_of(&self, s: &S) -> f64;
}

struct LinearLearner<F: Featurizer> {
    kind: EstimatorKind,
    vf: LinearValueFn<F>,
    opt: Optimizer,
}

impl<F: Featurizer + Send> Learner<F::State> for LinearLearner<F>
where
    F::State: Clone,
{
    fn update(
        &mut self,
        buf: &ReplayBuffer<F::State>,
        k: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<bool, Error> {
        let update = match &self.kind {
            EstimatorKind::Onpolicy => mean_update(&buf.sample_uniform(k, rng)?, &self.vf),
            EstimatorKind::Ir => mean_update(&buf.sample_proportional(k, rng)?, &self.vf),
            EstimatorKind::Bcir => {
                let rho_bar = buf.mean_ratio()?;
                bias_corrected_update(&buf.sample_proportional(k, rng)?, rho_bar, &self.vf)
            }
            EstimatorKind::Is => is_update(&buf.sample_uniform(k, rng)?, &self.vf),
            EstimatorKind::Vtrace { clip } => {
                vtrace_update(&buf.sample_uniform(k, rng)?, *clip, &self.vf)
            }
            EstimatorKind::WisMinibatch => {
                match wis_minibatch_update(&buf.sample_uniform(k, rng)?, &self.vf) {
                    Ok(u) => u,
                    Err(Error::DegenerateWeights) => return Ok(true),
                    Err(e) => return Err(e),
                }
            }
            EstimatorKind::WisBuffer => {
                match wis_buffer_update(
                    &buf.sample_uniform(k, rng)?,
                    buf.rho_sum(),
                    buf.len(),
                    &self.vf,
                ) {
                    Ok(u) => u,
                    Err(Error::DegenerateWeights) => return Ok(true),
                    Err(e) => return Err(e),
                }
            }
            EstimatorKind::WisOptimal => wis_optimal_update(buf, &self.vf)?,
            other => panic!("{} is not a linear mini-batch estimator", other.name()),
        };
        self.opt.apply(self.vf.weights_mut(), &update)?;
        Ok(false)
    }

    fn value_of(&self, s: &F::State) -> f64 {
        self.vf.value(s)
    }
}

struct SarsaStreamLearner {
    learner: SarsaLearner,
    opt: Optimizer,
    target: Arc<dyn Policy<StateId>>,
    pending: Option<(Transition<StateId>, Action)>,
}

impl Learner<StateId> for SarsaStreamLearner {
    fn observe(&mut self, t: &Transition<StateId>, a_next: Action) {
        self.pending = Some((t.clone(), a_next));
    }

    fn update(
        &mut self,
        _buf: &ReplayBuffer<StateId>,
        _k: usize,
        _rng: &mut ChaCha8Rng,
    ) -> Result<bool, Error> {
        // Reads the consecutive stream pair, not buffer samples: the next
        // action must be the behavior's actual choice at s'.
        let Some((t, a_next)) = self.pending.take() else {
            return Ok(true);
        };
        let update = self.learner.update_estimate(&t, a_next);
        self.opt.apply(self.learner.q_weights_mut(), &update)?;
        Ok(false)
    }

    fn value_of(&self, s: &StateId) -> f64 {
        self.learner.derived_values(self.target.as_ref()).value(s)
    }
}

struct WisTd0Learner<F: Featurizer> {
    state: WisTd0State,
    feat: F,
    resampled: bool,
}

impl<F: Featurizer + Send> Learner<F::State> for WisTd0Learner<F>
where
    F::State: Clone,
{
    fn update(
        &mut self,
        buf: &ReplayBuffer<F::State>,
        k: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<bool, Error> {
        // Incremental regime: each sampled transition updates individually.
        if self.resampled {
            let batch = buf.sample_proportional(k, rng)?;
            for t in &batch.transitions {
                self.state.step_resampled(&self.feat, t);
            }
        } else {
            let batch = buf.sample_uniform(k, rng)?;
            for t in &batch.transitions {
                self.state.step(&self.feat, t);
            }
        }
        if self.state.theta().iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFiniteUpdate);
        }
        Ok(false)
    }

    fn value_of(&self, s: &F::State) -> f64 {
        self.feat.features(s).dot(self.state.theta())
    }
}

fn make_optimizer(spec: &OptimizerSpec, alpha: f64, dim: usize) -> Optimizer {
    match spec {
        OptimizerSpec::Constant => Optimizer::constant(alpha),
        OptimizerSpec::Rmsprop => Optimizer::rmsprop(alpha, dim),
    }
}

/// Standard tile coder over the continuous world.
pub fn world_tile_coder() -> TileCoder {
    TileCoder::new(TILINGS, TILES, (0.0, 0.0), (WORLD_SIZE, WORLD_SIZE))
}

/// Build a learner over one-hot features for the tabular environments.
/// `alpha` is the learning rate, or the `mu` stepsize-tuning value for the
/// usage-normalized incremental estimators.
pub fn build_tabular_learner(
    cfg: &ExperimentConfig,
    alpha: f64,
    feat: TabularFeaturizer,
    n_actions: usize,
    target: Arc<dyn Policy<StateId>>,
) -> Result<Box<dyn Learner<StateId>>, ConfigError> {
    let dim = feat.dim();
    Ok(match &cfg.estimator {
        EstimatorKind::Sarsa0 => Box::new(SarsaStreamLearner {
            learner: SarsaLearner::new(feat, n_actions),
            opt: make_optimizer(&cfg.optimizer, alpha, dim * n_actions),
            target,
            pending: None,
        }),
        EstimatorKind::WisTd0 { u0 } => Box::new(WisTd0Learner {
            state: WisTd0State::new(dim, *u0, alpha / u0),
            feat,
            resampled: false,
        }),
        EstimatorKind::IrWisTd0 { u0 } => Box::new(WisTd0Learner {
            state: WisTd0State::new(dim, *u0, alpha / u0),
            feat,
            resampled: true,
        }),
        kind => Box::new(LinearLearner {
            kind: kind.clone(),
            vf: LinearValueFn::zeros(feat),
            opt: make_optimizer(&cfg.optimizer, alpha, dim),
        }),
    })
}

/// Build a learner over tile-coded features for the continuous world.
pub fn build_cont_learner(
    cfg: &ExperimentConfig,
    alpha: f64,
) -> Result<Box<dyn Learner<ContinuousState>>, ConfigError> {
    let coder = world_tile_coder();
    let dim = coder.dim();
    Ok(match &cfg.estimator {
        EstimatorKind::Sarsa0 => {
            return Err(ConfigError("sarsa0 needs a tabular environment".into()))
        }
        EstimatorKind::WisTd0 { u0 } => Box::new(WisTd0Learner {
            state: WisTd0State::new(dim, *u0, alpha / u0),
            feat: coder,
            resampled: false,
        }),
        EstimatorKind::IrWisTd0 { u0 } => Box::new(WisTd0Learner {
            state: WisTd0State::new(dim, *u0, alpha / u0),
            feat: coder,
            resampled: true,
        }),
        kind => Box::new(LinearLearner {
            kind: kind.clone(),
            vf: LinearValueFn::zeros(coder),
            opt: make_optimizer(&cfg.optimizer, alpha, dim),
        }),
    })
}
