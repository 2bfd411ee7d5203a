//! Experiment workbench CLI.
//!
//! Subcommands: `run` (learning curves), `sweep` (learning-rate /
//! update-interval sensitivity), `variance` (update-variance study),
//! `theory` (estimator property suite), `oracle` (build and cache ground
//! truth). Exit codes: 0 success, 1 config error, 2 property-suite failure,
//! 3 numeric abort.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use resample_harness::config::{EnvName, ExperimentConfig};
use resample_harness::output;
use resample_harness::runner::{
    self, aggregate_curve, chain_setup, cont_setup, rooms_setup, run_learning_curves, run_sweep,
    sweep_summary, RunRecord,
};
use resample_harness::theory::{run_theory_suite, SuiteScale};
use resample_harness::variance_study::run_variance_study;

#[derive(Parser)]
#[command(name = "resample", about = "Off-policy prediction experiment workbench")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment config JSON.
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's number of runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Learning curves for every learning rate in the grid.
    Run(CommonArgs),
    /// MAVE sensitivity sweep over the learning-rate and update-interval grids.
    Sweep(CommonArgs),
    /// Update-variance study along a whole-buffer-learner weight sequence.
    Variance(CommonArgs),
    /// Estimator property suite; writes a JSON report.
    Theory {
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Reduced-scale smoke mode (the full gate runs the stated scales).
        #[arg(long)]
        fast: bool,
    },
    /// Build and cache ground-truth values for a config.
    Oracle(CommonArgs),
}

const EXIT_CONFIG: u8 = 1;
const EXIT_THEORY: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Cmd::Run(args) => with_config(args, cmd_run),
        Cmd::Sweep(args) => with_config(args, cmd_sweep),
        Cmd::Variance(args) => with_config(args, cmd_variance),
        Cmd::Oracle(args) => with_config(args, cmd_oracle),
        Cmd::Theory { out_dir, fast } => cmd_theory(&out_dir, fast),
    }
}

fn with_config(
    args: CommonArgs,
    body: fn(&ExperimentConfig, &Path) -> Result<u8, String>,
) -> ExitCode {
    if let Some(workers) = args.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("worker pool: {e}");
        }
    }
    let mut cfg = match ExperimentConfig::from_path(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("{e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    if let Err(e) = output::ensure_dir(&args.out_dir) {
        eprintln!("cannot create {}: {e}", args.out_dir.display());
        return ExitCode::from(EXIT_CONFIG);
    }
    match body(&cfg, &args.out_dir) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn curves_for(cfg: &ExperimentConfig, out_dir: &Path, sweep: bool) -> Result<Vec<RunRecord>, String> {
    match cfg.env {
        EnvName::Chain => {
            let setup = chain_setup(cfg).map_err(|e| e.to_string())?;
            Ok(if sweep { run_sweep(&setup, cfg) } else { run_learning_curves(&setup, cfg) })
        }
        EnvName::Fourrooms => {
            let setup = rooms_setup(cfg).map_err(|e| e.to_string())?;
            Ok(if sweep { run_sweep(&setup, cfg) } else { run_learning_curves(&setup, cfg) })
        }
        EnvName::ContFourrooms => {
            let truth = cached_probe_truth(cfg, out_dir)?;
            let setup = cont_setup(cfg, truth).map_err(|e| e.to_string())?;
            Ok(if sweep { run_sweep(&setup, cfg) } else { run_learning_curves(&setup, cfg) })
        }
    }
}

fn cached_probe_truth(
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<runner::ProbeTruth, String> {
    let cache = output::probe_truth_cache_path(out_dir, cfg);
    if cache.exists() {
        return output::read_probe_truth_csv(&cache)
            .map_err(|e| format!("bad truth cache {}: {e}", cache.display()));
    }
    let truth = runner::compute_probe_truth(cfg).map_err(|e| e.to_string())?;
    output::write_probe_truth_csv(&cache, &truth.probes, &truth.values, &truth.std_errs)
        .map_err(|e| format!("cannot write {}: {e}", cache.display()))?;
    println!("cached ground truth at {}", cache.display());
    Ok(truth)
}

fn cmd_run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<u8, String> {
    let records = curves_for(cfg, out_dir, false)?;
    let estimator = cfg.estimator.name();
    let runs_path = out_dir.join(format!("{}_{}.csv", cfg.name, estimator));
    output::write_runs_csv(&runs_path, &records).map_err(|e| e.to_string())?;
    let mut files = vec![runs_path.display().to_string()];
    for &alpha in &cfg.alpha_grid {
        let group: Vec<RunRecord> = records
            .iter()
            .filter(|r| r.alpha == alpha)
            .cloned()
            .collect();
        let agg = aggregate_curve(&group);
        let path = out_dir.join(format!(
            "{}_{}_alpha{}_aggregate.csv",
            cfg.name, estimator, alpha
        ));
        output::write_aggregate_csv(&path, estimator, alpha, cfg.steps_between_updates, &agg)
            .map_err(|e| e.to_string())?;
        files.push(path.display().to_string());
    }
    let manifest = out_dir.join(format!("{}_manifest.json", cfg.name));
    output::write_manifest(&manifest, cfg, &files, &records).map_err(|e| e.to_string())?;
    let aborted = records.iter().filter(|r| r.aborted.is_some()).count();
    println!(
        "{}: {} runs, {} aborted, wrote {}",
        cfg.name,
        records.len(),
        aborted,
        runs_path.display()
    );
    Ok(if aborted > 0 { EXIT_NUMERIC } else { 0 })
}

fn cmd_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<u8, String> {
    let records = curves_for(cfg, out_dir, true)?;
    let estimator = cfg.estimator.name();
    let runs_path = out_dir.join(format!("{}_{}.csv", cfg.name, estimator));
    output::write_runs_csv(&runs_path, &records).map_err(|e| e.to_string())?;
    let summary = sweep_summary(&records);
    let sweep_path = out_dir.join(format!("{}_{}_sweep.csv", cfg.name, estimator));
    output::write_sweep_csv(&sweep_path, estimator, &summary).map_err(|e| e.to_string())?;
    let files = vec![runs_path.display().to_string(), sweep_path.display().to_string()];
    let manifest = out_dir.join(format!("{}_manifest.json", cfg.name));
    output::write_manifest(&manifest, cfg, &files, &records).map_err(|e| e.to_string())?;
    let all_aborted = records.iter().all(|r| r.aborted.is_some());
    println!(
        "{}: {} grid points, wrote {}",
        cfg.name,
        summary.len(),
        sweep_path.display()
    );
    Ok(if all_aborted && !records.is_empty() { EXIT_NUMERIC } else { 0 })
}

fn cmd_variance(cfg: &ExperimentConfig, out_dir: &Path) -> Result<u8, String> {
    let rows = run_variance_study(cfg).map_err(|e| e.to_string())?;
    let path = out_dir.join(format!("{}_variance.csv", cfg.name));
    output::write_variance_csv(&path, &rows).map_err(|e| e.to_string())?;
    let manifest = out_dir.join(format!("{}_manifest.json", cfg.name));
    output::write_manifest(&manifest, cfg, &[path.display().to_string()], &[])
        .map_err(|e| e.to_string())?;
    println!("{}: {} variance rows, wrote {}", cfg.name, rows.len(), path.display());
    Ok(0)
}

fn cmd_oracle(cfg: &ExperimentConfig, out_dir: &Path) -> Result<u8, String> {
    match cfg.env {
        EnvName::Chain => {
            let setup = chain_setup(cfg).map_err(|e| e.to_string())?;
            let path = out_dir.join(format!(
                "truth_chain_{}_thresh{}.csv",
                cfg.target, cfg.dp_threshold
            ));
            output::write_tabular_truth_csv(&path, &setup.eval_states, &setup.eval_truth)
                .map_err(|e| e.to_string())?;
            println!("wrote {}", path.display());
        }
        EnvName::Fourrooms => {
            let setup = rooms_setup(cfg).map_err(|e| e.to_string())?;
            let path = out_dir.join(format!(
                "truth_fourrooms_{}_seed{}_thresh{}.csv",
                cfg.target, cfg.policy_seed, cfg.dp_threshold
            ));
            output::write_tabular_truth_csv(&path, &setup.eval_states, &setup.eval_truth)
                .map_err(|e| e.to_string())?;
            println!("wrote {}", path.display());
        }
        EnvName::ContFourrooms => {
            let cache = output::probe_truth_cache_path(out_dir, cfg);
            if cache.exists() {
                println!("ground truth already cached at {}", cache.display());
            } else {
                cached_probe_truth(cfg, out_dir)?;
            }
        }
    }
    Ok(0)
}

fn cmd_theory(out_dir: &Path, fast: bool) -> ExitCode {
    if let Err(e) = output::ensure_dir(out_dir) {
        eprintln!("cannot create {}: {e}", out_dir.display());
        return ExitCode::from(EXIT_CONFIG);
    }
    let scale = if fast { SuiteScale::fast() } else { SuiteScale::full() };
    let report = run_theory_suite(&scale);
    report.print();
    let path = out_dir.join("theory_report.json");
    if let Err(e) = std::fs::write(&path, report.to_json()) {
        eprintln!("cannot write {}: {e}", path.display());
        return ExitCode::from(EXIT_CONFIG);
    }
    println!("wrote {}", path.display());
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_THEORY)
    }
}
