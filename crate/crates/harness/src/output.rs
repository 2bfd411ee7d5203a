//! Deterministic output writers. Column order is part of the output
//! contract; floats use Rust's shortest round-trip formatting, so identical
//! runs produce byte-identical files.

use std::collections::hash_map::DefaultHasher;
use std::fs;
use std::hash::{Hash, Hasher};
use std::io;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::runner::{AggregatePoint, RunRecord, SweepPoint};
use crate::variance_study::VarianceRow;

pub fn ensure_dir(dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v}")
    }
}

/// Per-measurement rows for every run:
/// `estimator,alpha,update_interval,run,step,ave,ess`.
pub fn write_runs_csv(path: &Path, records: &[RunRecord]) -> io::Result<()> {
    let mut out = String::from("estimator,alpha,update_interval,run,step,ave,ess\n");
    for r in records {
        for p in &r.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.estimator,
                fmt_f64(r.alpha),
                r.interval,
                r.run_index,
                p.step,
                fmt_f64(p.ave),
                fmt_f64(p.ess)
            ));
        }
    }
    fs::write(path, out)
}

/// Per-step mean and standard error across runs:
/// `estimator,alpha,update_interval,step,mean_ave,stderr_ave,runs`.
pub fn write_aggregate_csv(
    path: &Path,
    estimator: &str,
    alpha: f64,
    interval: usize,
    points: &[AggregatePoint],
) -> io::Result<()> {
    let mut out = String::from("estimator,alpha,update_interval,step,mean_ave,stderr_ave,runs\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            estimator,
            fmt_f64(alpha),
            interval,
            p.step,
            fmt_f64(p.mean_ave),
            fmt_f64(p.stderr_ave),
            p.runs
        ));
    }
    fs::write(path, out)
}

/// Sweep summary:
/// `estimator,alpha,update_interval,mave_mean,mave_stderr,runs,aborted_runs,mean_ess`.
pub fn write_sweep_csv(path: &Path, estimator: &str, points: &[SweepPoint]) -> io::Result<()> {
    let mut out = String::from(
        "estimator,alpha,update_interval,mave_mean,mave_stderr,runs,aborted_runs,mean_ess\n",
    );
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            estimator,
            fmt_f64(p.alpha),
            p.interval,
            fmt_f64(p.mave_mean),
            fmt_f64(p.mave_stderr),
            p.runs,
            p.aborted_runs,
            fmt_f64(p.mean_ess)
        ));
    }
    fs::write(path, out)
}

/// Variance study:
/// `checkpoint,update_index,step,estimator,closed_form,empirical,empirical_se,ess`.
pub fn write_variance_csv(path: &Path, rows: &[VarianceRow]) -> io::Result<()> {
    let mut out =
        String::from("checkpoint,update_index,step,estimator,closed_form,empirical,empirical_se,ess\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.checkpoint,
            r.update_index,
            r.step,
            r.estimator,
            r.closed_form.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.empirical),
            fmt_f64(r.empirical_se),
            fmt_f64(r.ess)
        ));
    }
    fs::write(path, out)
}

/// Ground-truth cache for tabular environments: `state,value,std_err`.
pub fn write_tabular_truth_csv(path: &Path, states: &[usize], values: &[f64]) -> io::Result<()> {
    let mut out = String::from("state,value,std_err\n");
    for (s, v) in states.iter().zip(values) {
        out.push_str(&format!("{},{},0\n", s, fmt_f64(*v)));
    }
    fs::write(path, out)
}

/// Ground-truth cache for the continuous environment:
/// `x,y,value,std_err`.
pub fn write_probe_truth_csv(
    path: &Path,
    probes: &[resample_core::gvf::ContinuousState],
    values: &[f64],
    std_errs: &[f64],
) -> io::Result<()> {
    let mut out = String::from("x,y,value,std_err\n");
    for ((p, v), se) in probes.iter().zip(values).zip(std_errs) {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(p.x),
            fmt_f64(p.y),
            fmt_f64(*v),
            fmt_f64(*se)
        ));
    }
    fs::write(path, out)
}

pub fn read_probe_truth_csv(path: &Path) -> io::Result<crate::runner::ProbeTruth> {
    let text = fs::read_to_string(path)?;
    let mut probes = Vec::new();
    let mut values = Vec::new();
    let mut std_errs = Vec::new();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("bad truth row: {line}"),
            ));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
        };
        probes.push(resample_core::gvf::ContinuousState::new(
            parse(cols[0])?,
            parse(cols[1])?,
        ));
        values.push(parse(cols[2])?);
        std_errs.push(parse(cols[3])?);
    }
    Ok(crate::runner::ProbeTruth { probes, values, std_errs })
}

/// Cache filename for a config's continuous ground truth, keyed by the
/// fields the values depend on.
pub fn probe_truth_cache_path(dir: &Path, cfg: &ExperimentConfig) -> PathBuf {
    let spec = cfg.rollout.clone().unwrap_or_default();
    dir.join(format!(
        "truth_{}_{}_seed{}_master{}_{}x{}.csv",
        cfg.env.as_str(),
        cfg.target,
        cfg.policy_seed,
        cfg.master_seed,
        spec.n_probes,
        spec.n_rollouts
    ))
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    config_hash: String,
    git_revision: String,
    files: Vec<String>,
    total_updates_applied: usize,
    total_updates_skipped: usize,
    aborted_runs: usize,
    planned_updates_per_run: usize,
    update_accounting_ok: bool,
}

fn git_revision() -> String {
    Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".to_string())
}

fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    let mut hasher = DefaultHasher::new();
    canonical.hash(&mut hasher);
    format!("{:016x}", hasher.finish())
}

/// Sidecar metadata: config echo + hash, revision, output files, and the
/// update accounting check (updates = interactions / interval, within one,
/// when the warm-up fits inside one interval).
pub fn write_manifest(
    path: &Path,
    cfg: &ExperimentConfig,
    files: &[String],
    records: &[RunRecord],
) -> io::Result<()> {
    let applied: usize = records.iter().map(|r| r.updates_applied).sum();
    let skipped: usize = records.iter().map(|r| r.updates_skipped).sum();
    let aborted = records.iter().filter(|r| r.aborted.is_some()).count();
    let planned = cfg.total_interactions / cfg.steps_between_updates;
    let accounting_ok = if cfg.warmup() <= cfg.steps_between_updates {
        records.iter().filter(|r| r.aborted.is_none()).all(|r| {
            let total = r.updates_applied + r.updates_skipped;
            let planned_for_interval = cfg.total_interactions / r.interval;
            total + 1 >= planned_for_interval && total <= planned_for_interval + 1
        })
    } else {
        true // warm-up eats a prefix of the schedule; identity not expected
    };
    let manifest = Manifest {
        config: cfg,
        config_hash: config_hash(cfg),
        git_revision: git_revision(),
        files: files.to_vec(),
        total_updates_applied: applied,
        total_updates_skipped: skipped,
        aborted_runs: aborted,
        planned_updates_per_run: planned,
        update_accounting_ok: accounting_ok,
    };
    fs::write(path, serde_json::to_string_pretty(&manifest).expect("manifest serializes"))
}
