//! End-to-end acceptance suite. Each test covers one advertised guarantee of
//! the library and prints a single `acceptance <name>: PASS/FAIL` line (run
//! with `--nocapture` to see them). The heavy multi-million-step runs are
//! shared between tests through lazily initialized statics.

mod common;

use common::{dist, grid_equilibrium, Gate};
use dfgp_core::sampling::sample_directions;
use dfgp_core::{
    builtin, build_plan, choose_parameters, equilibrium_shift_constant, monotonicity_radius_limit,
    run_replicated, run_restarted, single_point_estimate, solve_equilibrium, two_point_estimate,
    verify_equilibrium_shift, verify_error_bound, verify_horizon_scaling, verify_played_error,
    verify_rate, verify_restart_decay, verify_smoothed_monotonicity, verify_smoothing_gap,
    verify_unbiased, ChosenParameters, ErrorCurve, EstimateOutput, EstimatorKind, GameSpec,
    GuaranteeVariant, RecordGrid, RunConfig, StepSchedule, Welford, DEFAULT_EQ_TOL,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::process::Command;
use std::sync::OnceLock;

/// Start away from the equilibrium so the error curve has a real transient.
const START: [f64; 2] = [0.7, -0.7];

const RATE_DELTA: f64 = 0.025;
const RATE_HORIZON: u64 = 100_000;
const RATE_REPLICATES: u64 = 200;
const RATE_SEED: u64 = 500;

const TARGET_ACCURACY: f64 = 0.01;
const TUNED_SEED: u64 = 700;
const TUNED_REPLICATES: u64 = 8;

fn rate_game() -> GameSpec {
    builtin("lq-rate").expect("builtin game")
}

fn reference_point(game: &GameSpec) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
    solve_equilibrium(game, 1.0, 0.0, DEFAULT_EQ_TOL, &mut rng)
        .expect("reference equilibrium")
        .point
}

fn inverse_time(game: &GameSpec) -> StepSchedule {
    StepSchedule::InverseTime {
        alpha: game.constants().alpha,
    }
}

/// Fixed-radius decoupled-game run shared by the ceiling and rate tests:
/// 200 replicates over 1e5 steps on a logarithmic recording grid.
fn rate_curve() -> &'static ErrorCurve {
    static CURVE: OnceLock<ErrorCurve> = OnceLock::new();
    CURVE.get_or_init(|| {
        let game = rate_game();
        let reference = reference_point(&game);
        let config = RunConfig {
            delta: RATE_DELTA,
            horizon: RATE_HORIZON,
            schedule: inverse_time(&game),
            estimator: EstimatorKind::SinglePoint,
            x0: Some(START.to_vec()),
            seed: RATE_SEED,
            record: Some(RecordGrid::Log { per_decade: 20 }),
        };
        run_replicated(&game, &config, &reference, RATE_REPLICATES, RATE_SEED)
            .expect("rate curve run")
    })
}

/// Accuracy-driven run shared by the budget and estimator-comparison tests.
fn tuned_run() -> &'static (ChosenParameters, ErrorCurve) {
    static TUNED: OnceLock<(ChosenParameters, ErrorCurve)> = OnceLock::new();
    TUNED.get_or_init(|| {
        let game = rate_game();
        let chosen = choose_parameters(&game, TARGET_ACCURACY, GuaranteeVariant::IterateOnly)
            .expect("accuracy is admissible");
        let reference = reference_point(&game);
        let config = RunConfig {
            delta: chosen.delta,
            horizon: chosen.horizon,
            schedule: inverse_time(&game),
            estimator: EstimatorKind::SinglePoint,
            x0: Some(START.to_vec()),
            seed: TUNED_SEED,
            record: Some(RecordGrid::Log { per_decade: 20 }),
        };
        let curve = run_replicated(&game, &config, &reference, TUNED_REPLICATES, TUNED_SEED)
            .expect("tuned run");
        (chosen, curve)
    })
}

#[test]
fn single_point_estimates_average_to_the_smoothed_gradient() {
    let game = builtin("quartic").unwrap();
    let report = verify_unbiased(&game, &[0.3, -0.2], 0.05, 1_000_000, 11).unwrap();
    let mut gate = Gate::new("estimator-unbiasedness");
    gate.check(report.passed, format!("violations: {:?}", report.violations));
    gate.check(
        report
            .notes
            .first()
            .is_some_and(|n| n.contains("sign-enumeration-quadrature")),
        "reference was not the exact quadrature oracle",
    );
    gate.finish(format!(
        "1e6 draws vs exact smoothed gradient, worst gap at {:.3} of the 4-sigma allowance",
        report.worst_ratio
    ));
}

#[test]
fn smoothed_gradients_stay_within_the_radius_proportional_gap() {
    let game = builtin("quartic").unwrap();
    let delta = 0.05;
    let report = verify_smoothing_gap(&game, delta, 100, 12).unwrap();
    let mut gate = Gate::new("smoothing-gap");
    gate.check(report.passed, format!("violations: {:?}", report.violations));
    let c = game.constants();
    gate.finish(format!(
        "100 probes at radius {delta}; joint gap bound {:.4}, worst observed ratio {:.3}",
        c.beta * delta * game.n_players() as f64,
        report.worst_ratio
    ));
}

#[test]
fn smoothed_operator_retains_half_the_monotonicity_modulus() {
    let game = builtin("quartic").unwrap();
    let margin = 0.5;
    let limit = monotonicity_radius_limit(&game, margin);
    let mut gate = Gate::new("smoothed-monotonicity");
    // The certified radius cap for conceding half the modulus is
    // alpha / (2 L n^(3/2)); probe at 90% of it.
    let c = game.constants();
    let n = game.n_players() as f64;
    let expected_limit = margin * c.alpha / (c.jacobian_lipschitz * n.powf(1.5));
    gate.check(
        (limit - expected_limit).abs() <= 1e-12 * expected_limit,
        format!("radius cap {limit} differs from {expected_limit}"),
    );
    let delta = 0.9 * limit;
    let report = verify_smoothed_monotonicity(&game, delta, margin, 1000, 13).unwrap();
    gate.check(report.passed, format!("violations: {:?}", report.violations));
    gate.finish(format!(
        "1000 pairs at radius {delta:.4} keep modulus {:.2}; {}",
        (1.0 - margin) * c.alpha,
        report.notes.first().cloned().unwrap_or_default()
    ));
}

#[test]
fn equilibrium_shift_is_linear_in_the_radius_and_matches_a_grid_search() {
    let mut gate = Gate::new("equilibrium-shift");
    let mut worst_ratio = 0.0f64;
    for name in ["lq-coupled", "quartic"] {
        let game = builtin(name).unwrap();
        for (k, &delta) in [1e-4, 0.01, 0.05].iter().enumerate() {
            let (report, pair) =
                verify_equilibrium_shift(&game, delta, 40 + k as u64).unwrap();
            gate.check(
                report.passed,
                format!("{name} at radius {delta}: {:?}", report.violations),
            );
            gate.check(
                pair.raw.residual <= 1e-10 && pair.smoothed.residual <= 1e-10,
                format!(
                    "{name} at radius {delta}: solver residuals {:.2e} / {:.2e} above 1e-10",
                    pair.raw.residual, pair.smoothed.residual
                ),
            );
            worst_ratio = worst_ratio.max(report.worst_ratio);
            if delta == 0.05 {
                // Independent dense-grid cross-check of both solves at the
                // largest radius.
                let grid_raw = grid_equilibrium(&game, 1.0, 0.0);
                let raw_gap = dist(&grid_raw, &pair.raw.point);
                gate.check(
                    raw_gap <= 1e-5,
                    format!("{name}: grid search puts the raw equilibrium {raw_gap:.2e} away"),
                );
                let grid_smoothed = grid_equilibrium(&game, 1.0 - delta, delta);
                let smoothed_gap = dist(&grid_smoothed, &pair.smoothed.point);
                gate.check(
                    smoothed_gap <= 1e-5,
                    format!(
                        "{name}: grid search puts the smoothed equilibrium {smoothed_gap:.2e} away"
                    ),
                );
            }
        }
    }
    gate.finish(format!(
        "two games, radii 1e-4/0.01/0.05; worst shift at {worst_ratio:.3} of its bound; \
         grid cross-checks within 1e-5"
    ));
}

#[test]
fn mean_error_curve_respects_the_closed_form_ceiling() {
    let game = rate_game();
    let curve = rate_curve();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE + 1);
    let smoothed_eq = solve_equilibrium(&game, 1.0 - RATE_DELTA, RATE_DELTA, DEFAULT_EQ_TOL, &mut rng)
        .unwrap()
        .point;
    let x1_dist_sq: f64 = START
        .iter()
        .zip(&smoothed_eq)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let eq_norm = reference_point(&game).iter().map(|v| v * v).sum::<f64>().sqrt();
    let report = verify_error_bound(&game, curve, RATE_DELTA, x1_dist_sq, eq_norm).unwrap();
    let mut gate = Gate::new("error-bound");
    gate.check(report.passed, format!("violations: {:?}", report.violations));
    gate.finish(format!(
        "{} replicates, {} recorded times up to 1e5 steps; {}",
        RATE_REPLICATES,
        curve.ts.len(),
        report.notes.first().cloned().unwrap_or_default()
    ));
}

#[test]
fn transient_error_decays_at_the_inverse_time_rate() {
    let game = rate_game();
    let curve = rate_curve();
    // Fit stops where the radius-induced plateau takes over.
    let shift = equilibrium_shift_constant(&game, 0.0);
    let plateau = 2.0 * RATE_DELTA * RATE_DELTA * shift * shift;
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE + 1);
    let smoothed_eq = solve_equilibrium(&game, 1.0 - RATE_DELTA, RATE_DELTA, DEFAULT_EQ_TOL, &mut rng)
        .unwrap()
        .point;
    let x1_dist_sq: f64 = START
        .iter()
        .zip(&smoothed_eq)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let eq_norm = reference_point(&game).iter().map(|v| v * v).sum::<f64>().sqrt();
    let fit = verify_rate(&game, curve, RATE_DELTA, x1_dist_sq, eq_norm, plateau).unwrap();
    let mut gate = Gate::new("convergence-rate");
    gate.check(
        (-1.3..=-0.7).contains(&fit.slope),
        format!("log-log slope {:.4} outside [-1.3, -0.7]", fit.slope),
    );
    gate.finish(format!(
        "transient slope {:.3} fitted on {} points over steps [{}, {}]",
        fit.slope, fit.points_used, fit.window.0, fit.window.1
    ));
}

#[test]
fn accuracy_driven_parameters_hit_the_target_within_the_query_budget() {
    let game = rate_game();
    let (chosen, curve) = tuned_run();
    let mut gate = Gate::new("accuracy-budget");
    gate.check(
        chosen.horizon <= 10_000_000,
        format!("prescribed horizon {} exceeds the 1e7 budget", chosen.horizon),
    );
    let terminal = curve.terminal_iterate();
    let allowance = TARGET_ACCURACY + 3.0 * terminal.se.unwrap_or(0.0);
    gate.check(
        terminal.mean <= allowance,
        format!(
            "terminal mean error {:.3e} above target {TARGET_ACCURACY} + 3 SE",
            terminal.mean
        ),
    );
    // Inverse-square scaling of the horizon in the accuracy.
    let half = choose_parameters(&game, TARGET_ACCURACY / 2.0, GuaranteeVariant::IterateOnly)
        .unwrap()
        .horizon as f64;
    let quarter = choose_parameters(&game, TARGET_ACCURACY / 4.0, GuaranteeVariant::IterateOnly)
        .unwrap()
        .horizon as f64;
    let half_ratio = half / chosen.horizon as f64;
    let quarter_ratio = quarter / chosen.horizon as f64;
    gate.check(
        (3.5..=4.5).contains(&half_ratio),
        format!("half-accuracy horizon ratio {half_ratio:.3} outside [3.5, 4.5]"),
    );
    gate.check(
        (14.0..=18.0).contains(&quarter_ratio),
        format!("quarter-accuracy horizon ratio {quarter_ratio:.3} outside [14, 18]"),
    );
    let scaling = verify_horizon_scaling(&game, TARGET_ACCURACY).unwrap();
    gate.check(scaling.passed, format!("violations: {:?}", scaling.violations));
    gate.finish(format!(
        "radius {:.5}, horizon {} <= 1e7; terminal error {:.2e} <= {TARGET_ACCURACY}; \
         horizon ratios {half_ratio:.2}x / {quarter_ratio:.2}x",
        chosen.delta, chosen.horizon, terminal.mean
    ));
}

#[test]
fn two_sided_variant_controls_the_played_profile_error() {
    let game = rate_game();
    let chosen = choose_parameters(&game, TARGET_ACCURACY, GuaranteeVariant::BothGuarantees)
        .expect("accuracy is admissible");
    let reference = reference_point(&game);
    let config = RunConfig {
        delta: chosen.delta,
        horizon: chosen.horizon,
        schedule: inverse_time(&game),
        estimator: EstimatorKind::SinglePoint,
        x0: Some(START.to_vec()),
        seed: 800,
        // Only the terminal point matters here; keep recording minimal.
        record: Some(RecordGrid::Every(chosen.horizon)),
    };
    let curve = run_replicated(&game, &config, &reference, 8, 800).unwrap();
    let report = verify_played_error(&curve, TARGET_ACCURACY).unwrap();
    let mut gate = Gate::new("played-error");
    gate.check(report.passed, format!("violations: {:?}", report.violations));
    gate.check(
        chosen.delta < choose_parameters(&game, TARGET_ACCURACY, GuaranteeVariant::IterateOnly)
            .unwrap()
            .delta,
        "two-sided radius should be strictly smaller than the iterate-only radius",
    );
    gate.finish(format!(
        "radius {:.5}, horizon {}; {}",
        chosen.delta,
        chosen.horizon,
        report.notes.first().cloned().unwrap_or_default()
    ));
}

#[test]
fn restart_schedule_decays_geometrically_within_its_step_ceiling() {
    let game = builtin("lq-coupled").unwrap();
    let q = 0.5;
    let plan = build_plan(&game, q, 4).unwrap();
    let reference = reference_point(&game);
    let staged = run_restarted(&game, &plan, &reference, 900, 64).unwrap();
    let report = verify_restart_decay(&staged, q).unwrap();
    let mut gate = Gate::new("restart-schedule");
    gate.check(report.passed, format!("violations: {:?}", report.violations));
    for (k, stage) in staged.stages.iter().enumerate() {
        gate.check(
            (stage.cumulative_steps as f64) <= stage.step_bound,
            format!(
                "stage {}: {} cumulative steps above the ceiling {:.1}",
                k + 1,
                stage.cumulative_steps,
                stage.step_bound
            ),
        );
    }
    // Stage guarantees shrink by exactly q^2.
    for w in staged.stages.windows(2) {
        let ratio = w[1].epsilon_target / w[0].epsilon_target;
        gate.check(
            (ratio - q * q).abs() <= 1e-12,
            format!("stage guarantee ratio {ratio} is not q^2"),
        );
    }
    let total = staged.stages.last().unwrap();
    gate.finish(format!(
        "4 stages, 64 replicates; {} total steps <= ceiling {:.1}; {}",
        total.cumulative_steps,
        total.step_bound,
        report.notes.first().cloned().unwrap_or_default()
    ));
}

#[test]
fn two_point_estimator_cuts_variance_and_reaches_accuracy_sooner() {
    let game = rate_game();
    let mut gate = Gate::new("two-point-variant");

    // Paired draws at a fixed base point: same directions feed both
    // estimators, so the comparison is variance against variance.
    let x = [0.3, -0.4];
    let delta = 0.05;
    let total = game.total_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut single_stats = vec![Welford::new(); total];
    let mut two_stats = vec![Welford::new(); total];
    let mut single_out = EstimateOutput {
        gradient: Vec::new(),
        played: Vec::new(),
        cost_evals: 0,
    };
    let mut two_out = EstimateOutput {
        gradient: Vec::new(),
        played: Vec::new(),
        cost_evals: 0,
    };
    for _ in 0..100_000 {
        let dirs = sample_directions(game.dims(), &mut rng);
        single_point_estimate(&game, &x, delta, &dirs, &mut single_out).unwrap();
        two_point_estimate(&game, &x, delta, &dirs, &mut two_out).unwrap();
        for k in 0..total {
            single_stats[k].push(single_out.gradient[k]);
            two_stats[k].push(two_out.gradient[k]);
        }
    }
    let var_single: f64 = single_stats.iter().map(|w| w.variance().unwrap()).sum();
    let var_two: f64 = two_stats.iter().map(|w| w.variance().unwrap()).sum();
    gate.check(
        var_two < var_single,
        format!("two-point variance {var_two:.3e} is not below single-point {var_single:.3e}"),
    );

    // Same seeds, same radius, same start: the symmetric-difference run must
    // reach the target accuracy at least as early, and it is exact on
    // quadratic scalar costs so it should be dramatically earlier.
    let (chosen, single_curve) = tuned_run();
    let reference = reference_point(&game);
    let two_config = RunConfig {
        delta: chosen.delta,
        horizon: 100_000,
        schedule: inverse_time(&game),
        estimator: EstimatorKind::TwoPoint,
        x0: Some(START.to_vec()),
        seed: TUNED_SEED,
        record: Some(RecordGrid::Log { per_decade: 20 }),
    };
    let two_curve =
        run_replicated(&game, &two_config, &reference, TUNED_REPLICATES, TUNED_SEED).unwrap();
    let single_hit = single_curve.iterate_first_below(TARGET_ACCURACY);
    let two_hit = two_curve.iterate_first_below(TARGET_ACCURACY);
    gate.check(single_hit.is_some(), "single-point run never reached the target");
    gate.check(two_hit.is_some(), "two-point run never reached the target");
    if let (Some(s), Some(t)) = (single_hit, two_hit) {
        gate.check(
            t <= s,
            format!("two-point needed {t} steps, single-point only {s}"),
        );
        gate.finish(format!(
            "variance {var_two:.2e} < {var_single:.2e}; target reached at step {t} vs {s}"
        ));
    } else {
        gate.finish("unreachable");
    }
}

#[test]
fn cli_runs_are_reproducible_and_bad_configs_are_refused() {
    let bin = env!("CARGO_BIN_EXE_dfgp");
    let dir = tempfile::tempdir().unwrap();
    let mut gate = Gate::new("cli-contract");

    let config_path = dir.path().join("run.toml");
    std::fs::write(
        &config_path,
        r#"
mode = "run"

[game]
builtin = "lq-coupled"

[run]
delta = 0.1
horizon = 500
replicates = 4
seed = 9
record_every = 50
"#,
    )
    .unwrap();

    let run = |out: &str| {
        let status = Command::new(bin)
            .args(["run", "--config"])
            .arg(&config_path)
            .arg("--out")
            .arg(dir.path().join(out))
            .status()
            .expect("binary runs");
        status.code()
    };
    gate.check(run("first") == Some(0), "first run did not exit 0");
    gate.check(run("second") == Some(0), "second run did not exit 0");
    for file in ["curve.csv", "curve_loglog.dat", "manifest.json", "certification.json"] {
        let a = std::fs::read(dir.path().join("first").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("second").join(file)).unwrap();
        gate.check(a == b, format!("{file} differs between identical runs"));
        gate.check(!a.is_empty(), format!("{file} is empty"));
    }

    // Config round-trip: serializing and re-parsing is the identity.
    let parsed =
        dfgp_cli::config::ExperimentConfig::from_toml(&std::fs::read_to_string(&config_path).unwrap())
            .unwrap();
    let reparsed = dfgp_cli::config::ExperimentConfig::from_toml(&parsed.to_toml()).unwrap();
    gate.check(parsed == reparsed, "config does not round-trip through TOML");

    // Rejections: radius at/above the inner radius, accuracy above the
    // admissible maximum, unknown keys. All exit 2 with the documented
    // message and an error.json record.
    let reject = |name: &str, body: &str, needle: &str, gate: &mut Gate| {
        let path = dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        let out_dir = dir.path().join(format!("{name}.out"));
        let output = Command::new(bin)
            .args(["run", "--config"])
            .arg(&path)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .expect("binary runs");
        gate.check(
            output.status.code() == Some(2),
            format!("{name}: expected exit 2, got {:?}", output.status.code()),
        );
        let stderr = String::from_utf8_lossy(&output.stderr);
        gate.check(
            stderr.contains(needle),
            format!("{name}: stderr missing {needle:?}: {stderr}"),
        );
        let record = std::fs::read_to_string(out_dir.join("error.json")).unwrap_or_default();
        gate.check(
            record.contains(needle),
            format!("{name}: error.json missing the message"),
        );
    };
    reject(
        "bad_delta.toml",
        "mode = \"run\"\n[game]\nbuiltin = \"lq-coupled\"\n[run]\ndelta = 1.0\nhorizon = 10\n",
        "radius δ ∈ (0, r) is required",
        &mut gate,
    );
    reject(
        "bad_epsilon.toml",
        "mode = \"run\"\n[game]\nbuiltin = \"lq-coupled\"\n[run]\nepsilon = 1e6\n",
        "must lie below the admissible maximum",
        &mut gate,
    );
    reject(
        "unknown_key.toml",
        "mode = \"run\"\n[game]\nbuiltin = \"lq-coupled\"\nflavor = \"mild\"\n[run]\ndelta = 0.1\nhorizon = 10\n",
        "flavor",
        &mut gate,
    );

    gate.finish(
        "byte-identical artifacts across reruns; round-trip holds; \
         three malformed configs refused with exit 2",
    );
}
