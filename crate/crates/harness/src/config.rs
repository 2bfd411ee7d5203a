//! Experiment configuration: a single JSON document naming the environment,
//! the policy pair, the estimator, buffer and batch sizes, grids, and seeds.
//! Example configs for each experiment family live under `configs/` in the
//! repository root.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use resample_core::envs::policies;
use resample_core::envs::RoomsLayout;
use resample_core::estimators::EstimatorKind;
use resample_core::gvf::{ContinuousState, Policy, StateId};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvName {
    Chain,
    Fourrooms,
    ContFourrooms,
}

impl EnvName {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnvName::Chain => "chain",
            EnvName::Fourrooms => "fourrooms",
            EnvName::ContFourrooms => "cont_fourrooms",
        }
    }

    pub fn is_tabular(&self) -> bool {
        !matches!(self, EnvName::ContFourrooms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum OptimizerSpec {
    Constant,
    Rmsprop,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        OptimizerSpec::Constant
    }
}

/// Rollout ground-truth parameters for the continuous environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutSpec {
    #[serde(default = "default_probes")]
    pub n_probes: usize,
    #[serde(default = "default_rollouts")]
    pub n_rollouts: usize,
    /// Discount-product cutoff defining the truncation horizon.
    #[serde(default = "default_cutoff")]
    pub horizon_cutoff: f64,
}

fn default_probes() -> usize {
    200
}

fn default_rollouts() -> usize {
    200
}

fn default_cutoff() -> f64 {
    1e-3
}

impl Default for RolloutSpec {
    fn default() -> Self {
        Self {
            n_probes: default_probes(),
            n_rollouts: default_rollouts(),
            horizon_cutoff: default_cutoff(),
        }
    }
}

fn default_cadence() -> usize {
    100
}

fn default_interval() -> usize {
    1
}

fn default_policy_seed() -> u64 {
    941
}

fn default_dp_threshold() -> f64 {
    1e-15
}

fn default_checkpoints() -> usize {
    5
}

fn default_variance_draws() -> usize {
    10_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Experiment name; prefixes every output file.
    pub name: String,
    pub env: EnvName,
    /// Optional layout map file overriding the committed standard map.
    #[serde(default)]
    pub layout_file: Option<String>,
    pub behavior: String,
    pub target: String,
    /// Seed for policy-internal draws (special cells), fixed per experiment.
    #[serde(default = "default_policy_seed")]
    pub policy_seed: u64,
    pub estimator: EstimatorKind,
    pub buffer_capacity: usize,
    pub minibatch: usize,
    #[serde(default = "default_interval")]
    pub steps_between_updates: usize,
    pub total_interactions: usize,
    /// Learning-rate grid; for the usage-normalized incremental estimators
    /// these are the `mu` stepsize-tuning values.
    pub alpha_grid: Vec<f64>,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    pub runs: usize,
    #[serde(default = "default_cadence")]
    pub metric_cadence: usize,
    pub master_seed: u64,
    /// Updates begin once the buffer holds at least this many transitions
    /// (defaults to the mini-batch size).
    #[serde(default)]
    pub warmup_transitions: Option<usize>,
    /// Update-interval grid for sweeps; empty means the single
    /// `steps_between_updates` value.
    #[serde(default)]
    pub update_interval_grid: Vec<usize>,
    #[serde(default = "default_dp_threshold")]
    pub dp_threshold: f64,
    /// Estimators compared by the variance study.
    #[serde(default)]
    pub variance_estimators: Vec<EstimatorKind>,
    #[serde(default = "default_checkpoints")]
    pub variance_checkpoints: usize,
    #[serde(default = "default_variance_draws")]
    pub variance_draws: usize,
    #[serde(default)]
    pub rollout: Option<RolloutSpec>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| err(format!("invalid JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| err(format!("invalid JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn layout(&self) -> Result<Arc<RoomsLayout>, ConfigError> {
        match &self.layout_file {
            None => Ok(Arc::new(RoomsLayout::standard())),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| err(format!("cannot read layout {path}: {e}")))?;
                RoomsLayout::parse(&text)
                    .map(Arc::new)
                    .map_err(|e| err(format!("bad layout {path}: {e}")))
            }
        }
    }

    pub fn warmup(&self) -> usize {
        self.warmup_transitions.unwrap_or(self.minibatch).max(1)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(err("name must be a nonempty [alphanumeric_] token"));
        }
        if self.minibatch == 0 {
            return Err(err("minibatch must be at least 1"));
        }
        if self.buffer_capacity < self.minibatch {
            return Err(err(format!(
                "buffer_capacity {} must be at least the mini-batch size {}",
                self.buffer_capacity, self.minibatch
            )));
        }
        if self.alpha_grid.is_empty() {
            return Err(err("alpha_grid must be nonempty"));
        }
        if self.alpha_grid.iter().any(|a| !a.is_finite() || *a <= 0.0) {
            return Err(err("alpha_grid entries must be positive and finite"));
        }
        if self.runs == 0 {
            return Err(err("runs must be at least 1"));
        }
        if self.steps_between_updates == 0 {
            return Err(err("steps_between_updates must be at least 1"));
        }
        if self.metric_cadence == 0 {
            return Err(err("metric_cadence must be at least 1"));
        }
        if self.update_interval_grid.iter().any(|i| *i == 0) {
            return Err(err("update_interval_grid entries must be at least 1"));
        }
        match &self.estimator {
            EstimatorKind::Vtrace { clip } if *clip <= 0.0 => {
                return Err(err("vtrace clip must be positive"));
            }
            EstimatorKind::WisTd0 { u0 } | EstimatorKind::IrWisTd0 { u0 } if *u0 <= 0.0 => {
                return Err(err("wis_td0 u0 must be positive"));
            }
            EstimatorKind::Sarsa0 if !self.env.is_tabular() => {
                return Err(err("sarsa0 needs a tabular environment"));
            }
            _ => {}
        }
        for kind in &self.variance_estimators {
            match kind {
                EstimatorKind::Sarsa0
                | EstimatorKind::WisTd0 { .. }
                | EstimatorKind::IrWisTd0 { .. } => {
                    return Err(err(format!(
                        "variance study has no mini-batch distribution for {}",
                        kind.name()
                    )));
                }
                EstimatorKind::Vtrace { clip } if *clip <= 0.0 => {
                    return Err(err("vtrace clip must be positive"));
                }
                _ => {}
            }
        }
        // Policy names must resolve for the environment.
        let layout = self.layout()?;
        match self.env {
            EnvName::Chain => {
                self.chain_policy(&self.behavior)?;
                self.chain_policy(&self.target)?;
            }
            EnvName::Fourrooms => {
                self.rooms_policy(&self.behavior, &layout)?;
                self.rooms_policy(&self.target, &layout)?;
            }
            EnvName::ContFourrooms => {
                self.cont_policy(&self.behavior, &layout)?;
                self.cont_policy(&self.target, &layout)?;
            }
        }
        Ok(())
    }

    pub fn chain_policy(&self, name: &str) -> Result<Arc<dyn Policy<StateId>>, ConfigError> {
        policies::chain_policy(name)
            .map(|p| Arc::new(p) as Arc<dyn Policy<StateId>>)
            .map_err(|e| err(e.to_string()))
    }

    pub fn rooms_policy(
        &self,
        name: &str,
        layout: &RoomsLayout,
    ) -> Result<Arc<dyn Policy<StateId>>, ConfigError> {
        policies::rooms_policy(name, layout, self.policy_seed).map_err(|e| err(e.to_string()))
    }

    pub fn cont_policy(
        &self,
        name: &str,
        layout: &RoomsLayout,
    ) -> Result<Arc<dyn Policy<ContinuousState>>, ConfigError> {
        policies::cont_policy(name, layout, self.policy_seed).map_err(|e| err(e.to_string()))
    }

    /// Default comparison set for the variance study.
    pub fn variance_kinds(&self) -> Vec<EstimatorKind> {
        if self.variance_estimators.is_empty() {
            vec![
                EstimatorKind::Is,
                EstimatorKind::Ir,
                EstimatorKind::Bcir,
                EstimatorKind::WisMinibatch,
                EstimatorKind::WisOptimal,
            ]
        } else {
            self.variance_estimators.clone()
        }
    }

    /// Update intervals to sweep (the scalar field when no grid is given).
    pub fn intervals(&self) -> Vec<usize> {
        if self.update_interval_grid.is_empty() {
            vec![self.steps_between_updates]
        } else {
            self.update_interval_grid.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn minimal_json(extra: &str) -> String {
        format!(
            r#"{{
                "name": "t",
                "env": "chain",
                "behavior": "p90_10",
                "target": "p10_90",
                "estimator": {{"name": "ir"}},
                "buffer_capacity": 100,
                "minibatch": 16,
                "total_interactions": 1000,
                "alpha_grid": [0.1],
                "runs": 2,
                "master_seed": 7
                {extra}
            }}"#
        )
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(&minimal_json("")).unwrap();
        assert_eq!(cfg.metric_cadence, 100);
        assert_eq!(cfg.steps_between_updates, 1);
        assert_eq!(cfg.warmup(), 16);
        assert_eq!(cfg.optimizer, OptimizerSpec::Constant);
    }

    #[test]
    fn capacity_below_batch_size_is_rejected() {
        let json = minimal_json("").replace("\"buffer_capacity\": 100", "\"buffer_capacity\": 8");
        assert!(ExperimentConfig::from_json(&json).is_err());
    }

    #[test]
    fn unknown_policy_names_are_rejected() {
        let json = minimal_json("").replace("p90_10", "p55_45");
        assert!(ExperimentConfig::from_json(&json).is_err());
    }

    #[test]
    fn empty_grid_is_rejected() {
        let json = minimal_json("").replace("[0.1]", "[]");
        assert!(ExperimentConfig::from_json(&json).is_err());
    }

    #[test]
    fn sarsa_on_continuous_env_is_rejected() {
        let json = minimal_json("")
            .replace("\"env\": \"chain\"", "\"env\": \"cont_fourrooms\"")
            .replace("p90_10", "uniform")
            .replace("p10_90", "persistent_down")
            .replace(r#"{"name": "ir"}"#, r#"{"name": "sarsa0"}"#);
        let e = ExperimentConfig::from_json(&json).unwrap_err();
        assert!(e.to_string().contains("tabular"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let json = minimal_json(", \"typo_field\": 3");
        assert!(ExperimentConfig::from_json(&json).is_err());
    }
}
