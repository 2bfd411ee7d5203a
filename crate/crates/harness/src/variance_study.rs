//! Update-variance study: run the whole-buffer self-normalized learner to
//! produce a sequence of weight checkpoints, then at each checkpoint freeze
//! (weights, buffer) and measure every estimator's update variance, both in
//! closed form and by simulating the possible updates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use resample_core::buffer::ReplayBuffer;
use resample_core::envs::{ChainEnv, Environment, FourRoomsEnv};
use resample_core::estimators::{wis_optimal_update, EstimatorKind};
use resample_core::gvf::{is_ratio, StateId};
use resample_core::linear::{LinearValueFn, Optimizer, TabularFeaturizer};
use resample_core::oracle::{
    empirical_update_variance, resampled_variance, UpdateParts,
};

use crate::config::{ConfigError, EnvName, ExperimentConfig, OptimizerSpec};

#[derive(Debug, Clone)]
pub struct VarianceRow {
    pub checkpoint: usize,
    pub update_index: usize,
    pub step: usize,
    pub estimator: String,
    pub closed_form: Option<f64>,
    pub empirical: f64,
    pub empirical_se: f64,
    pub ess: f64,
}

/// Run the study on a tabular environment.
pub fn run_variance_study(cfg: &ExperimentConfig) -> Result<Vec<VarianceRow>, ConfigError> {
    if !cfg.env.is_tabular() {
        return Err(ConfigError(
            "variance study needs a tabular environment".into(),
        ));
    }
    let alpha = cfg.alpha_grid[0];
    let mut rng = crate::runner::run_rng(cfg.master_seed, 0);
    let (behavior, target, featurizer, mut env): (_, _, TabularFeaturizer, Box<dyn Environment<State = StateId>>) =
        match cfg.env {
            EnvName::Chain => (
                cfg.chain_policy(&cfg.behavior)?,
                cfg.chain_policy(&cfg.target)?,
                ChainEnv::featurizer(),
                Box::new(ChainEnv::new(&mut rng)),
            ),
            EnvName::Fourrooms => {
                let layout = cfg.layout()?;
                (
                    cfg.rooms_policy(&cfg.behavior, &layout)?,
                    cfg.rooms_policy(&cfg.target, &layout)?,
                    layout.featurizer(),
                    Box::new(FourRoomsEnv::new(layout.clone(), &mut rng)),
                )
            }
            EnvName::ContFourrooms => unreachable!("checked above"),
        };

    let mut vf = LinearValueFn::zeros(featurizer);
    let mut opt = match cfg.optimizer {
        OptimizerSpec::Constant => Optimizer::constant(alpha),
        OptimizerSpec::Rmsprop => Optimizer::rmsprop(alpha, vf.dim()),
    };
    let mut buf = ReplayBuffer::new(cfg.buffer_capacity);
    let warmup = cfg.warmup();

    let total_updates = cfg.total_interactions / cfg.steps_between_updates;
    let n_checkpoints = cfg.variance_checkpoints.max(2);
    // Update indices at which to freeze (weights, buffer), starting from
    // the very first scheduled update (initial weights).
    let checkpoint_updates: Vec<usize> = (0..n_checkpoints)
        .map(|i| i * total_updates.saturating_sub(1) / (n_checkpoints - 1))
        .collect();

    let mut rows = Vec::new();
    let mut update_index = 0usize;
    let mut checkpoint = 0usize;
    for step in 1..=cfg.total_interactions {
        let s = env.state();
        let a = behavior.sample(&s, &mut rng);
        let rho = is_ratio(target.as_ref(), behavior.as_ref(), &s, a)
            .map_err(|e| ConfigError(e.to_string()))?;
        let t = env.step(a, &mut rng).with_rho(rho);
        buf.push(t);
        if step % cfg.steps_between_updates == 0 && buf.len() >= warmup {
            if checkpoint_updates.contains(&update_index) {
                rows.extend(measure_checkpoint(
                    cfg,
                    checkpoint,
                    update_index,
                    step,
                    &buf,
                    &vf,
                )?);
                checkpoint += 1;
            }
            let update = wis_optimal_update(&buf, &vf).map_err(|e| ConfigError(e.to_string()))?;
            opt.apply(vf.weights_mut(), &update)
                .map_err(|e| ConfigError(e.to_string()))?;
            update_index += 1;
        }
    }
    Ok(rows)
}

fn measure_checkpoint(
    cfg: &ExperimentConfig,
    checkpoint: usize,
    update_index: usize,
    step: usize,
    buf: &ReplayBuffer<StateId>,
    vf: &LinearValueFn<TabularFeaturizer>,
) -> Result<Vec<VarianceRow>, ConfigError> {
    let parts = UpdateParts::from_buffer(buf, vf);
    let closed = resample_core::oracle::closed_form_variances(&parts, cfg.minibatch);
    let ess = buf.effective_sample_size().unwrap_or(f64::NAN);
    let mut rows = Vec::new();
    for (i, kind) in cfg.variance_kinds().iter().enumerate() {
        // Deterministic draw stream per (checkpoint, estimator).
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
        rng.set_stream(1_000_000 + (checkpoint * 64 + i) as u64);
        let emp = empirical_update_variance(
            buf,
            vf,
            cfg.minibatch,
            kind,
            cfg.variance_draws,
            &mut rng,
        )
        .map_err(|e| ConfigError(e.to_string()))?;
        let closed_form = match kind {
            EstimatorKind::Is => Some(closed.v_is),
            EstimatorKind::Bcir => Some(closed.v_bc),
            EstimatorKind::Ir => {
                Some(resampled_variance(&parts, cfg.minibatch).map_err(|e| ConfigError(e.to_string()))?)
            }
            EstimatorKind::WisOptimal => Some(0.0),
            _ => None,
        };
        rows.push(VarianceRow {
            checkpoint,
            update_index,
            step,
            estimator: kind.name().to_string(),
            closed_form,
            empirical: emp.variance,
            empirical_se: emp.std_err,
            ess,
        });
    }
    Ok(rows)
}
