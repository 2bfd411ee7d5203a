//! Acceptance gate: every release-blocking property, one test per
//! criterion, each printing a pass/fail line with its measured margin.
//! Statistical checks run on fixed seeds at the stated scales and
//! tolerances.

use resample_harness::config::{EnvName, ExperimentConfig, OptimizerSpec};
use resample_harness::output;
use resample_harness::runner::{
    chain_setup, rooms_setup, run_learning_curves, run_sweep, sweep_summary, RunRecord,
};
use resample_harness::theory;
use resample_harness::variance_study::run_variance_study;

use resample_core::estimators::EstimatorKind;
use resample_core::gvf::{is_ratio, FixedActionDist};

fn report(criterion: &str, check: theory::TheoryCheck) {
    let tag = if check.passed { "PASS" } else { "FAIL" };
    println!("[{tag}] {criterion}: {}", check.details);
    assert!(check.passed, "{criterion}: {}", check.details);
}

#[test]
fn c01_resampled_expectation_matches_whole_buffer_wis() {
    report(
        "criterion 1 (expectation identity)",
        theory::check_resampled_expectation_identity(),
    );
}

#[test]
fn c02_bias_corrected_estimator_is_unbiased() {
    report(
        "criterion 2 (bias-corrected unbiasedness)",
        theory::check_bias_corrected_unbiasedness(&theory::SuiteScale::full()),
    );
}

#[test]
fn c03_closed_form_variances_match_simulation() {
    report(
        "criterion 3 (closed-form variances)",
        theory::check_variance_closed_forms(&theory::SuiteScale::full()),
    );
}

#[test]
fn c04_constant_norm_variance_gap_identity() {
    report(
        "criterion 4 (constant-norm gap identity)",
        theory::check_constant_norm_gap_identity(),
    );
}

#[test]
fn c05_variance_ordering_under_the_premise() {
    report(
        "criterion 5 (variance ordering premise)",
        theory::check_variance_gap_premise(),
    );
}

#[test]
fn c06_sliding_window_running_average_converges() {
    report(
        "criterion 6 (sliding-window consistency)",
        theory::check_sliding_window_consistency(&theory::SuiteScale::full()),
    );
}

#[test]
fn c07_resampling_distribution_approaches_the_target() {
    report(
        "criterion 7 (distribution convergence)",
        theory::check_resampling_convergence(&theory::SuiteScale::full()),
    );
}

#[test]
fn c08_resampled_bias_decays_like_one_over_n() {
    report(
        "criterion 8 (bias decay)",
        theory::check_bias_decay(&theory::SuiteScale::full()),
    );
}

fn chain_fig_config(estimator: EstimatorKind, alpha_grid: Vec<f64>, runs: usize) -> ExperimentConfig {
    ExperimentConfig {
        name: "chain_sensitivity".into(),
        env: EnvName::Chain,
        layout_file: None,
        behavior: "p90_10".into(),
        target: "p10_90".into(),
        policy_seed: 941,
        estimator,
        buffer_capacity: 15_000,
        minibatch: 16,
        steps_between_updates: 16,
        total_interactions: 50_000,
        alpha_grid,
        optimizer: OptimizerSpec::Constant,
        runs,
        metric_cadence: 100,
        master_seed: 20_240_913,
        warmup_transitions: None,
        update_interval_grid: vec![],
        dp_threshold: 1e-15,
        variance_estimators: vec![],
        variance_checkpoints: 6,
        variance_draws: 10_000,
        rollout: None,
    }
}

fn quarter_decade_grid() -> Vec<f64> {
    // 10^-2 to 10^0 in quarter-decade steps.
    (0..9).map(|i| 10f64.powf(-2.0 + 0.25 * i as f64)).collect()
}

fn within_ten_percent_of_best(points: &[(f64, f64)]) -> usize {
    let best = points
        .iter()
        .map(|(_, mave)| *mave)
        .filter(|m| m.is_finite())
        .fold(f64::INFINITY, f64::min);
    points
        .iter()
        .filter(|(_, mave)| mave.is_finite() && *mave <= 1.1 * best)
        .count()
}

#[test]
fn c09_chain_update_variance_and_sensitivity() {
    // (a) Update variance along the whole-buffer learner's weight sequence:
    // resampling beats importance sampling at the first three checkpoints.
    let mut var_cfg = chain_fig_config(EstimatorKind::WisOptimal, vec![0.05], 1);
    var_cfg.name = "chain_variance".into();
    var_cfg.total_interactions = 39_000;
    var_cfg.warmup_transitions = Some(15_000);
    var_cfg.variance_estimators = vec![EstimatorKind::Is, EstimatorKind::Ir];
    let rows = run_variance_study(&var_cfg).expect("variance study runs");
    for checkpoint in 0..3 {
        let get = |name: &str| {
            rows.iter()
                .find(|r| r.checkpoint == checkpoint && r.estimator == name)
                .unwrap_or_else(|| panic!("missing {name} at checkpoint {checkpoint}"))
                .empirical
        };
        let (ir, is) = (get("ir"), get("is"));
        println!(
            "[info] criterion 9a checkpoint {checkpoint}: var(ir) {ir:.4e} vs var(is) {is:.4e}"
        );
        assert!(
            ir < is,
            "checkpoint {checkpoint}: resampled variance {ir} not below {is}"
        );
    }
    println!("[PASS] criterion 9a (early-learning update variance ordering)");

    // (b) Learning-rate sensitivity: the resampler's within-10%-of-best
    // range covers more of the grid than importance sampling's.
    let grid = quarter_decade_grid();
    let ir_cfg = chain_fig_config(EstimatorKind::Ir, grid.clone(), 25);
    let is_cfg = chain_fig_config(EstimatorKind::Is, grid.clone(), 25);
    let ir_summary = sweep_summary(&run_sweep(&chain_setup(&ir_cfg).unwrap(), &ir_cfg));
    let is_summary = sweep_summary(&run_sweep(&chain_setup(&is_cfg).unwrap(), &is_cfg));
    let as_pairs = |s: &[resample_harness::runner::SweepPoint]| -> Vec<(f64, f64)> {
        s.iter().map(|p| (p.alpha, p.mave_mean)).collect()
    };
    let ir_range = within_ten_percent_of_best(&as_pairs(&ir_summary));
    let is_range = within_ten_percent_of_best(&as_pairs(&is_summary));
    println!(
        "[info] criterion 9b: usable-alpha grid points ir {ir_range} vs is {is_range} of {}",
        grid.len()
    );
    assert!(
        ir_range > is_range,
        "resampling range {ir_range} not wider than importance sampling {is_range}"
    );
    println!("[PASS] criterion 9b (wider usable learning-rate range)");

    // (c) Clipping at the maximum possible ratio reproduces importance
    // sampling bitwise under shared draws.
    let mu = FixedActionDist::new(vec![0.9, 0.1]).unwrap();
    let pi = FixedActionDist::new(vec![0.1, 0.9]).unwrap();
    let rho_max = is_ratio(&pi, &mu, &1usize, resample_core::envs::chain::RIGHT).unwrap();
    let mut is_small = chain_fig_config(EstimatorKind::Is, vec![0.1], 5);
    is_small.total_interactions = 20_000;
    let mut vtrace_small =
        chain_fig_config(EstimatorKind::Vtrace { clip: rho_max }, vec![0.1], 5);
    vtrace_small.total_interactions = 20_000;
    let is_records = run_learning_curves(&chain_setup(&is_small).unwrap(), &is_small);
    let vt_records = run_learning_curves(&chain_setup(&vtrace_small).unwrap(), &vtrace_small);
    assert_eq!(is_records.len(), vt_records.len());
    for (a, b) in is_records.iter().zip(&vt_records) {
        assert_eq!(a.points.len(), b.points.len());
        for (pa, pb) in a.points.iter().zip(&b.points) {
            assert_eq!(
                pa.ave.to_bits(),
                pb.ave.to_bits(),
                "run {} step {} diverged",
                a.run_index,
                pa.step
            );
        }
    }
    println!("[PASS] criterion 9c (max-ratio clipping is bitwise importance sampling)");
}

fn rooms_fig_config(estimator: EstimatorKind, alpha_grid: Vec<f64>, interval: usize) -> ExperimentConfig {
    ExperimentConfig {
        name: "fourrooms_curves".into(),
        env: EnvName::Fourrooms,
        layout_file: None,
        behavior: "down_averse_25".into(),
        target: "persistent_down".into(),
        policy_seed: 941,
        estimator,
        buffer_capacity: 2_500,
        minibatch: 16,
        steps_between_updates: interval,
        total_interactions: 40_000,
        alpha_grid,
        optimizer: OptimizerSpec::Constant,
        runs: 10,
        metric_cadence: 100,
        master_seed: 77_003,
        warmup_transitions: None,
        update_interval_grid: vec![],
        dp_threshold: 1e-15,
        variance_estimators: vec![],
        variance_checkpoints: 5,
        variance_draws: 10_000,
        rollout: None,
    }
}

/// Mean AVE curve across runs at one alpha, ordered by step.
fn mean_curve(records: &[RunRecord], alpha: f64) -> Vec<(usize, f64)> {
    let group: Vec<RunRecord> = records
        .iter()
        .filter(|r| r.alpha == alpha)
        .cloned()
        .collect();
    resample_harness::runner::aggregate_curve(&group)
        .into_iter()
        .map(|p| (p.step, p.mean_ave))
        .collect()
}

fn best_alpha(records: &[RunRecord]) -> f64 {
    sweep_summary(records)
        .into_iter()
        .filter(|p| p.mave_mean.is_finite())
        .min_by(|a, b| a.mave_mean.total_cmp(&b.mave_mean))
        .expect("at least one finite grid point")
        .alpha
}

#[test]
fn c10_fourrooms_learning_curves_and_update_budget() {
    let grid: Vec<f64> = (0..5).map(|i| 10f64.powf(-1.75 + 0.25 * i as f64)).collect();

    let ir_cfg = rooms_fig_config(EstimatorKind::Ir, grid.clone(), 16);
    let is_cfg = rooms_fig_config(EstimatorKind::Is, grid.clone(), 16);
    let ir_records = run_learning_curves(&rooms_setup(&ir_cfg).unwrap(), &ir_cfg);
    let is_records = run_learning_curves(&rooms_setup(&is_cfg).unwrap(), &is_cfg);

    let ir_best = best_alpha(&ir_records);
    let is_best = best_alpha(&is_records);
    println!("[info] criterion 10: best alpha ir {ir_best:.4} / is {is_best:.4}");

    // Learning-curve dominance at each method's own best learning rate.
    let ir_curve = mean_curve(&ir_records, ir_best);
    let is_curve = mean_curve(&is_records, is_best);
    assert_eq!(ir_curve.len(), is_curve.len());
    let total = ir_curve.len();
    let dominated = ir_curve
        .iter()
        .zip(&is_curve)
        .filter(|((sa, a), (sb, b))| {
            assert_eq!(sa, sb);
            a < b
        })
        .count();
    let fraction = dominated as f64 / total as f64;
    println!(
        "[info] criterion 10: resampled curve below importance sampling at {dominated}/{total} steps"
    );
    assert!(
        fraction >= 0.9,
        "dominance fraction {fraction:.3} below 0.9"
    );

    // Update-budget robustness: growing the gap between updates from 16 to
    // 128 hurts the resampler less.
    let degradation = |estimator: EstimatorKind, alpha: f64, records16: &[RunRecord]| {
        let cfg128 = rooms_fig_config(estimator, vec![alpha], 128);
        let records128 = run_learning_curves(&rooms_setup(&cfg128).unwrap(), &cfg128);
        let mave = |records: &[RunRecord], a: f64| {
            let maves: Vec<f64> = records
                .iter()
                .filter(|r| r.alpha == a)
                .map(|r| r.mave())
                .collect();
            maves.iter().sum::<f64>() / maves.len() as f64
        };
        mave(&records128, alpha) / mave(records16, alpha)
    };
    let ir_degradation = degradation(EstimatorKind::Ir, ir_best, &ir_records);
    let is_degradation = degradation(EstimatorKind::Is, is_best, &is_records);
    println!(
        "[info] criterion 10: 16->128 interval degradation ir {ir_degradation:.3}x vs is {is_degradation:.3}x"
    );
    assert!(
        ir_degradation < is_degradation,
        "resampling degraded more ({ir_degradation:.3}x) than importance sampling ({is_degradation:.3}x)"
    );
    println!("[PASS] criterion 10 (learning-curve dominance and update-budget robustness)");
}

#[test]
fn c11_dynamic_programming_oracle_values() {
    report("criterion 11 (dynamic-programming oracle)", theory::check_dp_oracle());
}

#[test]
fn c12_identical_seeds_give_byte_identical_output() {
    let mut cfg = chain_fig_config(EstimatorKind::Bcir, vec![0.05, 0.1], 4);
    cfg.name = "repro".into();
    cfg.buffer_capacity = 500;
    cfg.total_interactions = 4_000;
    cfg.update_interval_grid = vec![16, 64];

    let render = |threads: usize| -> (Vec<u8>, Vec<u8>) {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("scoped pool");
        let records = pool.install(|| run_sweep(&chain_setup(&cfg).unwrap(), &cfg));
        let dir = tempfile::tempdir().expect("tempdir");
        let runs_path = dir.path().join("runs.csv");
        output::write_runs_csv(&runs_path, &records).unwrap();
        let sweep_path = dir.path().join("sweep.csv");
        output::write_sweep_csv(&sweep_path, "bcir", &sweep_summary(&records)).unwrap();
        (
            std::fs::read(&runs_path).unwrap(),
            std::fs::read(&sweep_path).unwrap(),
        )
    };
    let (runs_a, sweep_a) = render(1);
    let (runs_b, sweep_b) = render(4);
    assert_eq!(runs_a, runs_b, "per-run CSV differs across invocations");
    assert_eq!(sweep_a, sweep_b, "sweep CSV differs across invocations");
    assert!(!runs_a.is_empty());
    println!(
        "[PASS] criterion 12 (byte-identical output, {} bytes compared)",
        runs_a.len() + sweep_a.len()
    );
}
