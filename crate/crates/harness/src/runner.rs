//! The experiment loop: stream behavior transitions into the buffer, apply
//! scheduled estimator updates, measure value error against ground truth,
//! and aggregate across runs and grid points.
//!
//! Every run owns its environment, buffer, learner, and RNG stream; streams
//! are derived from `(master_seed, run_index)` so results are independent
//! of worker scheduling and run execution order.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use resample_core::envs::{ChainEnv, ContFourRoomsEnv, Environment, FourRoomsEnv, TabularModel};
use resample_core::gvf::{is_ratio, ContinuousState, Policy, StateId};
use resample_core::oracle;

use crate::config::{ConfigError, EnvName, ExperimentConfig};
use crate::learner::{build_cont_learner, build_tabular_learner, Learner};

/// One measurement row inside a run.
#[derive(Debug, Clone)]
pub struct RunPoint {
    pub step: usize,
    pub ave: f64,
    pub ess: f64,
}

/// One run's full trace plus its update accounting.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub estimator: String,
    pub alpha: f64,
    pub interval: usize,
    pub run_index: usize,
    pub points: Vec<RunPoint>,
    pub updates_applied: usize,
    pub updates_skipped: usize,
    pub aborted: Option<String>,
    pub abort_step: Option<usize>,
}

impl RunRecord {
    /// Mean AVE over all recorded interactions; infinite when the run
    /// aborted on a numeric failure (divergence dominates any average).
    pub fn mave(&self) -> f64 {
        if self.aborted.is_some() {
            return f64::INFINITY;
        }
        if self.points.is_empty() {
            return f64::NAN;
        }
        self.points.iter().map(|p| p.ave).sum::<f64>() / self.points.len() as f64
    }

    pub fn mean_ess(&self) -> f64 {
        let finite: Vec<f64> = self
            .points
            .iter()
            .map(|p| p.ess)
            .filter(|e| e.is_finite())
            .collect();
        if finite.is_empty() {
            f64::NAN
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        }
    }
}

/// Everything a generic run needs for one environment type.
pub struct Setup<S: Clone + std::fmt::Debug> {
    pub make_env: Box<dyn Fn(&mut ChaCha8Rng) -> Box<dyn Environment<State = S>> + Send + Sync>,
    pub behavior: Arc<dyn Policy<S>>,
    pub target: Arc<dyn Policy<S>>,
    pub make_learner:
        Box<dyn Fn(f64) -> Result<Box<dyn Learner<S>>, ConfigError> + Send + Sync>,
    pub eval_states: Vec<S>,
    pub eval_truth: Vec<f64>,
}

fn measure_ave<S>(learner: &dyn Learner<S>, states: &[S], truth: &[f64]) -> f64 {
    if states.is_empty() {
        return f64::NAN;
    }
    states
        .iter()
        .zip(truth)
        .map(|(s, v)| (learner.value_of(s) - v).abs())
        .sum::<f64>()
        / states.len() as f64
}

/// RNG stream ids: 0 is reserved for experiment-level draws (probe sets),
/// runs use `1 + run_index`.
pub fn run_rng(master_seed: u64, run_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(1 + run_index as u64);
    rng
}

pub fn experiment_rng(master_seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(0);
    rng
}

/// One run: stream `total_interactions` behavior transitions, update every
/// `interval` interactions once the buffer holds `warmup` transitions,
/// measure AVE at the metric cadence.
pub fn single_run<S: Clone + std::fmt::Debug>(
    setup: &Setup<S>,
    cfg: &ExperimentConfig,
    alpha: f64,
    interval: usize,
    run_index: usize,
) -> RunRecord {
    let mut record = RunRecord {
        estimator: cfg.estimator.name().to_string(),
        alpha,
        interval,
        run_index,
        points: Vec::new(),
        updates_applied: 0,
        updates_skipped: 0,
        aborted: None,
        abort_step: None,
    };
    let mut learner = match (setup.make_learner)(alpha) {
        Ok(l) => l,
        Err(e) => {
            record.aborted = Some(e.to_string());
            return record;
        }
    };
    let mut rng = run_rng(cfg.master_seed, run_index);
    let mut env = (setup.make_env)(&mut rng);
    let mut buf = resample_core::buffer::ReplayBuffer::new(cfg.buffer_capacity);
    let warmup = cfg.warmup();

    for step in 1..=cfg.total_interactions {
        let s = env.state();
        let a = setup.behavior.sample(&s, &mut rng);
        let rho = match is_ratio(setup.target.as_ref(), setup.behavior.as_ref(), &s, a) {
            Ok(r) => r,
            Err(e) => {
                record.aborted = Some(e.to_string());
                record.abort_step = Some(step);
                break;
            }
        };
        let t = env.step(a, &mut rng).with_rho(rho);
        learner.observe(&t, a); // consumed next step by stream learners
        buf.push(t);

        if step % interval == 0 && buf.len() >= warmup {
            match learner.update(&buf, cfg.minibatch, &mut rng) {
                Ok(true) => record.updates_skipped += 1,
                Ok(false) => record.updates_applied += 1,
                Err(e) => {
                    record.aborted = Some(e.to_string());
                    record.abort_step = Some(step);
                    break;
                }
            }
        }
        if step % cfg.metric_cadence == 0 {
            let ave = measure_ave(learner.as_ref(), &setup.eval_states, &setup.eval_truth);
            let ess = buf.effective_sample_size().unwrap_or(f64::NAN);
            record.points.push(RunPoint { step, ave, ess });
        }
    }
    record
}

/// All `(alpha, run)` learning curves at the configured update interval.
pub fn run_learning_curves<S: Clone + std::fmt::Debug + Send + Sync>(
    setup: &Setup<S>,
    cfg: &ExperimentConfig,
) -> Vec<RunRecord> {
    let tasks: Vec<(f64, usize)> = cfg
        .alpha_grid
        .iter()
        .flat_map(|&alpha| (0..cfg.runs).map(move |r| (alpha, r)))
        .collect();
    tasks
        .par_iter()
        .map(|&(alpha, run)| single_run(setup, cfg, alpha, cfg.steps_between_updates, run))
        .collect()
}

/// Cross-product sweep over the alpha grid and the update-interval grid.
pub fn run_sweep<S: Clone + std::fmt::Debug + Send + Sync>(
    setup: &Setup<S>,
    cfg: &ExperimentConfig,
) -> Vec<RunRecord> {
    let tasks: Vec<(f64, usize, usize)> = cfg
        .alpha_grid
        .iter()
        .flat_map(|&alpha| {
            cfg.intervals()
                .into_iter()
                .flat_map(move |interval| (0..cfg.runs).map(move |r| (alpha, interval, r)))
        })
        .collect();
    tasks
        .par_iter()
        .map(|&(alpha, interval, run)| single_run(setup, cfg, alpha, interval, run))
        .collect()
}

/// Per-step mean and standard error across the runs of one grid point.
#[derive(Debug, Clone)]
pub struct AggregatePoint {
    pub step: usize,
    pub mean_ave: f64,
    pub stderr_ave: f64,
    pub runs: usize,
}

pub fn aggregate_curve(records: &[RunRecord]) -> Vec<AggregatePoint> {
    let mut by_step: Vec<(usize, Vec<f64>)> = Vec::new();
    for record in records {
        for p in &record.points {
            match by_step.binary_search_by_key(&p.step, |(s, _)| *s) {
                Ok(i) => by_step[i].1.push(p.ave),
                Err(i) => by_step.insert(i, (p.step, vec![p.ave])),
            }
        }
    }
    by_step
        .into_iter()
        .map(|(step, aves)| {
            let n = aves.len() as f64;
            let mean = aves.iter().sum::<f64>() / n;
            let var = if aves.len() > 1 {
                aves.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            AggregatePoint {
                step,
                mean_ave: mean,
                stderr_ave: (var / n).sqrt(),
                runs: aves.len(),
            }
        })
        .collect()
}

/// One sensitivity-sweep summary row.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub alpha: f64,
    pub interval: usize,
    pub mave_mean: f64,
    pub mave_stderr: f64,
    pub runs: usize,
    pub aborted_runs: usize,
    pub mean_ess: f64,
}

/// Group records by `(alpha, interval)` in first-appearance order and
/// summarize per-run MAVE with standard errors over runs.
pub fn sweep_summary(records: &[RunRecord]) -> Vec<SweepPoint> {
    let mut keys: Vec<(f64, usize)> = Vec::new();
    for r in records {
        if !keys.iter().any(|(a, i)| *a == r.alpha && *i == r.interval) {
            keys.push((r.alpha, r.interval));
        }
    }
    keys.into_iter()
        .map(|(alpha, interval)| {
            let group: Vec<&RunRecord> = records
                .iter()
                .filter(|r| r.alpha == alpha && r.interval == interval)
                .collect();
            let maves: Vec<f64> = group.iter().map(|r| r.mave()).collect();
            let aborted = group.iter().filter(|r| r.aborted.is_some()).count();
            let n = maves.len() as f64;
            let mean = maves.iter().sum::<f64>() / n;
            let stderr = if maves.iter().all(|m| m.is_finite()) && maves.len() > 1 {
                let var =
                    maves.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            } else {
                f64::NAN
            };
            let ess: Vec<f64> = group
                .iter()
                .map(|r| r.mean_ess())
                .filter(|e| e.is_finite())
                .collect();
            let mean_ess = if ess.is_empty() {
                f64::NAN
            } else {
                ess.iter().sum::<f64>() / ess.len() as f64
            };
            SweepPoint {
                alpha,
                interval,
                mave_mean: mean,
                mave_stderr: stderr,
                runs: group.len(),
                aborted_runs: aborted,
                mean_ess,
            }
        })
        .collect()
}

/// Chain experiment wiring: interior states evaluated against the
/// dynamic-programming values of the target policy.
pub fn chain_setup(cfg: &ExperimentConfig) -> Result<Setup<StateId>, ConfigError> {
    let behavior = cfg.chain_policy(&cfg.behavior)?;
    let target = cfg.chain_policy(&cfg.target)?;
    let truth = oracle::dp_true_values(&ChainEnv::model(), target.as_ref(), cfg.dp_threshold)
        .map_err(|e| ConfigError(format!("ground truth failed: {e}")))?;
    let model = ChainEnv::model();
    let eval_states: Vec<StateId> = (0..model.n_states()).map(|d| model.native_id(d)).collect();
    let learner_cfg = cfg.clone();
    let learner_target = target.clone();
    Ok(Setup {
        make_env: Box::new(|rng| Box::new(ChainEnv::new(rng))),
        behavior,
        target,
        make_learner: Box::new(move |alpha| {
            build_tabular_learner(
                &learner_cfg,
                alpha,
                ChainEnv::featurizer(),
                2,
                learner_target.clone(),
            )
        }),
        eval_states,
        eval_truth: truth.values,
    })
}

/// Tabular Four Rooms wiring: open cells evaluated against DP values.
pub fn rooms_setup(cfg: &ExperimentConfig) -> Result<Setup<StateId>, ConfigError> {
    let layout = cfg.layout()?;
    let behavior = cfg.rooms_policy(&cfg.behavior, &layout)?;
    let target = cfg.rooms_policy(&cfg.target, &layout)?;
    let model = FourRoomsEnv::model(layout.clone());
    let truth = oracle::dp_true_values(&model, target.as_ref(), cfg.dp_threshold)
        .map_err(|e| ConfigError(format!("ground truth failed: {e}")))?;
    let eval_states = layout.open_cells().to_vec();
    let learner_cfg = cfg.clone();
    let learner_target = target.clone();
    let learner_layout = layout.clone();
    let env_layout = layout.clone();
    Ok(Setup {
        make_env: Box::new(move |rng| Box::new(FourRoomsEnv::new(env_layout.clone(), rng))),
        behavior,
        target,
        make_learner: Box::new(move |alpha| {
            build_tabular_learner(
                &learner_cfg,
                alpha,
                learner_layout.featurizer(),
                4,
                learner_target.clone(),
            )
        }),
        eval_states,
        eval_truth: truth.values,
    })
}

/// Continuous Four Rooms wiring: probe states from a behavior run, ground
/// truth from target-policy rollouts (cached across invocations by the
/// caller via `probe_truth`).
pub fn cont_setup(
    cfg: &ExperimentConfig,
    truth: ProbeTruth,
) -> Result<Setup<ContinuousState>, ConfigError> {
    let layout = cfg.layout()?;
    let behavior = cfg.cont_policy(&cfg.behavior, &layout)?;
    let target = cfg.cont_policy(&cfg.target, &layout)?;
    let learner_cfg = cfg.clone();
    let env_layout = layout.clone();
    Ok(Setup {
        make_env: Box::new(move |rng| Box::new(ContFourRoomsEnv::new(&env_layout, rng))),
        behavior,
        target,
        make_learner: Box::new(move |alpha| build_cont_learner(&learner_cfg, alpha)),
        eval_states: truth.probes,
        eval_truth: truth.values,
    })
}

/// Rollout ground truth at behavior-generated probes.
#[derive(Debug, Clone)]
pub struct ProbeTruth {
    pub probes: Vec<ContinuousState>,
    pub values: Vec<f64>,
    pub std_errs: Vec<f64>,
}

/// Compute the probe set and rollout values from experiment-level RNG
/// stream 0; deterministic per `(config, master_seed)`.
pub fn compute_probe_truth(cfg: &ExperimentConfig) -> Result<ProbeTruth, ConfigError> {
    let layout = cfg.layout()?;
    let behavior = cfg.cont_policy(&cfg.behavior, &layout)?;
    let target = cfg.cont_policy(&cfg.target, &layout)?;
    let spec = cfg.rollout.clone().unwrap_or_default();
    let mut rng = experiment_rng(cfg.master_seed);
    let mut env = ContFourRoomsEnv::new(&layout, &mut rng);
    let probes = oracle::behavior_probe_set(&mut env, behavior.as_ref(), spec.n_probes, 5, &mut rng);
    let horizon = oracle::rollout_horizon(
        resample_core::envs::fourrooms::ROOMS_GAMMA,
        spec.horizon_cutoff,
    );
    let out = oracle::rollout_true_values(
        &env,
        target.as_ref(),
        &probes,
        spec.n_rollouts,
        horizon,
        &mut rng,
    );
    Ok(ProbeTruth { probes: out.probes, values: out.values, std_errs: out.std_errs })
}

/// Dispatch a curve run for any environment named in the config.
pub fn run_curves_for(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, ConfigError> {
    match cfg.env {
        EnvName::Chain => Ok(run_learning_curves(&chain_setup(cfg)?, cfg)),
        EnvName::Fourrooms => Ok(run_learning_curves(&rooms_setup(cfg)?, cfg)),
        EnvName::ContFourrooms => {
            let truth = compute_probe_truth(cfg)?;
            Ok(run_learning_curves(&cont_setup(cfg, truth)?, cfg))
        }
    }
}

/// Dispatch a sweep for any environment named in the config.
pub fn run_sweep_for(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, ConfigError> {
    match cfg.env {
        EnvName::Chain => Ok(run_sweep(&chain_setup(cfg)?, cfg)),
        EnvName::Fourrooms => Ok(run_sweep(&rooms_setup(cfg)?, cfg)),
        EnvName::ContFourrooms => {
            let truth = compute_probe_truth(cfg)?;
            Ok(run_sweep(&cont_setup(cfg, truth)?, cfg))
        }
    }
}
