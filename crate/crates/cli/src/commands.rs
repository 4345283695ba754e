//! Subcommand execution: wiring configs to the solver library and writing
//! artifacts. Exit code 0 means every requested check passed, 1 means a
//! check ran and failed, 2 means the request itself could not be carried
//! out (bad config, unsolvable game, I/O failure).

use crate::config::{ConfigError, ExperimentConfig, Mode, DEFAULT_MONOTONICITY_MARGIN};
use crate::output::{
    self, ErrorRecord, GameSummary, Manifest, ReferencePoint, ResolvedParams,
};
use dfgp_core::{
    build_plan, certify, choose_parameters, equilibrium_radius_limit, monotonicity_radius_limit,
    run_replicated, run_restarted, solve_equilibrium, verify_equilibrium_shift,
    verify_horizon_scaling, verify_restart_decay, verify_smoothed_monotonicity,
    verify_smoothing_gap, verify_unbiased, CertificationReport, CheckReport, EquilibriumCertificate,
    Error as CoreError, EstimatorKind, GameSpec, GuaranteeVariant, RecordGrid, RunConfig,
    StepSchedule, DEFAULT_EQ_TOL,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Sample count for the pre-run audit of declared constants.
const CERT_SAMPLES: u64 = 120;
/// Fixed stream for reference-equilibrium solves, independent of the run
/// seed so the reference never drifts between parameterizations.
const REFERENCE_SEED: u64 = 0xE9;

pub struct Invocation {
    pub mode: Mode,
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub replicates: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub skip_certify: bool,
}

/// Env var consulted for the default worker count when `--workers` is not
/// given.
pub const WORKERS_ENV: &str = "DFGP_WORKERS";

fn configure_workers(cli: Option<usize>) {
    static CONFIGURED: OnceLock<()> = OnceLock::new();
    let from_env = std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(workers) = cli.or(from_env).filter(|&w| w > 0) {
        CONFIGURED.get_or_init(|| {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build_global();
        });
    }
}

pub fn execute(inv: &Invocation) -> i32 {
    configure_workers(inv.workers);
    let cfg = match ExperimentConfig::from_path(&inv.config) {
        Ok(cfg) => cfg,
        Err(err) => {
            let code = match err {
                ConfigError::Io(_) => "config-io",
                ConfigError::Parse(_) => "config-parse",
                ConfigError::Invalid(_) => "invalid-config",
            };
            ErrorRecord::new(code, err.to_string()).emit(inv.out.as_deref());
            return EXIT_ERROR;
        }
    };
    let out_dir = inv
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().and_then(|o| o.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    let game = match cfg.validate_for(inv.mode) {
        Ok(game) => game,
        Err(errors) => {
            let message = errors.join("\n");
            ErrorRecord::new("invalid-config", message).emit(Some(&out_dir));
            return EXIT_ERROR;
        }
    };
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        ErrorRecord::new("io", format!("cannot create output directory: {e}")).emit(None);
        return EXIT_ERROR;
    }
    match dispatch(inv, &cfg, &game, &out_dir) {
        Ok(all_passed) => {
            if all_passed {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            ErrorRecord::new(e.code(), e.to_string()).emit(Some(&out_dir));
            EXIT_ERROR
        }
    }
}

fn io_err(e: std::io::Error) -> CoreError {
    CoreError::InvalidInput(format!("I/O failure while writing artifacts: {e}"))
}

fn dispatch(
    inv: &Invocation,
    cfg: &ExperimentConfig,
    game: &GameSpec,
    out: &Path,
) -> Result<bool, CoreError> {
    let certification = if inv.skip_certify {
        None
    } else {
        let report = certify(game, CERT_SAMPLES, base_seed(inv, cfg).wrapping_add(0x5eed))?;
        output::write_json(&out.join("certification.json"), &report).map_err(io_err)?;
        Some(report)
    };
    let cert_ok = certification.as_ref().map_or(true, |c| c.passed());
    if !cert_ok && inv.mode != Mode::Certify {
        eprintln!(
            "declared constants failed certification; aborting before the run \
             (see certification.json, or pass --skip-certify to proceed at your own risk)"
        );
        return Ok(false);
    }
    let passed = match inv.mode {
        Mode::Certify => cert_ok,
        Mode::Run => cmd_run(inv, cfg, game, out)?,
        Mode::Restart => cmd_restart(inv, cfg, game, out)?,
        Mode::Verify => cmd_verify(inv, cfg, game, out, certification.as_ref())?,
        Mode::Sweep => cmd_sweep(inv, cfg, game, out)?,
    };
    Ok(passed && cert_ok)
}

fn base_seed(inv: &Invocation, cfg: &ExperimentConfig) -> u64 {
    if let Some(seed) = inv.seed {
        return seed;
    }
    let section_seed = match inv.mode {
        Mode::Restart => cfg.restart.as_ref().and_then(|r| r.seed),
        Mode::Verify => cfg.verify.as_ref().and_then(|v| v.seed),
        Mode::Sweep => cfg.sweep.as_ref().and_then(|s| s.seed),
        _ => cfg.run.as_ref().and_then(|r| r.seed),
    };
    section_seed.unwrap_or(0)
}

fn reference(game: &GameSpec) -> Result<EquilibriumCertificate, CoreError> {
    let mut rng = ChaCha8Rng::seed_from_u64(REFERENCE_SEED);
    solve_equilibrium(game, 1.0, 0.0, DEFAULT_EQ_TOL, &mut rng)
}

fn estimator_name(kind: EstimatorKind) -> &'static str {
    match kind {
        EstimatorKind::SinglePoint => "single-point",
        EstimatorKind::TwoPoint => "two-point",
    }
}

fn record_grid(run: &crate::config::RunSection) -> Option<RecordGrid> {
    if let Some(k) = run.record_every {
        Some(RecordGrid::Every(k))
    } else {
        run.record_per_decade
            .map(|per_decade| RecordGrid::Log { per_decade })
    }
}

fn cmd_run(
    inv: &Invocation,
    cfg: &ExperimentConfig,
    game: &GameSpec,
    out: &Path,
) -> Result<bool, CoreError> {
    let run = cfg.run.as_ref().expect("validated");
    let seed = base_seed(inv, cfg);
    let replicates = inv.replicates.or(run.replicates).unwrap_or(1);
    let estimator = run.estimator.unwrap_or(EstimatorKind::SinglePoint);
    let (epsilon, delta, horizon) = match run.epsilon {
        Some(eps) => {
            let variant = run.variant.unwrap_or(GuaranteeVariant::IterateOnly);
            let chosen = choose_parameters(game, eps, variant)?;
            (Some(eps), chosen.delta, chosen.horizon)
        }
        None => (None, run.delta.expect("validated"), run.horizon.expect("validated")),
    };
    let schedule = match run.eta {
        Some(eta) => StepSchedule::Constant { eta },
        None => StepSchedule::InverseTime {
            alpha: game.constants().alpha,
        },
    };
    let reference = reference(game)?;
    let run_config = RunConfig {
        delta,
        horizon,
        schedule: schedule.clone(),
        estimator,
        x0: run.x0.clone(),
        seed,
        record: record_grid(run),
    };
    let curve = run_replicated(game, &run_config, &reference.point, replicates, seed)?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        command: "run",
        game: GameSummary::of(game),
        config: cfg,
        resolved: ResolvedParams {
            epsilon,
            delta: Some(delta),
            horizon: Some(horizon),
            seed,
            replicates,
            se_defined: replicates > 1,
            estimator: Some(estimator_name(estimator).to_string()),
            schedule: Some(format!("{schedule:?}")),
        },
        reference: Some(ReferencePoint {
            point: reference.point.clone(),
            residual: reference.residual,
        }),
    };
    output::write_json(&out.join("manifest.json"), &manifest).map_err(io_err)?;
    output::write_curve_csv(&out.join("curve.csv"), &curve).map_err(io_err)?;
    output::write_loglog_dat(&out.join("curve_loglog.dat"), &curve).map_err(io_err)?;
    Ok(true)
}

fn cmd_restart(
    inv: &Invocation,
    cfg: &ExperimentConfig,
    game: &GameSpec,
    out: &Path,
) -> Result<bool, CoreError> {
    let section = cfg.restart.as_ref().expect("validated");
    let seed = base_seed(inv, cfg);
    let replicates = inv.replicates.or(section.replicates).unwrap_or(32);
    let plan = build_plan(game, section.q, section.stages)?;
    let reference = reference(game)?;
    let staged = run_restarted(game, &plan, &reference.point, seed, replicates)?;
    let report = verify_restart_decay(&staged, section.q)?;
    let total_steps = staged.stages.last().map(|s| s.cumulative_steps);
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        command: "restart",
        game: GameSummary::of(game),
        config: cfg,
        resolved: ResolvedParams {
            epsilon: staged.stages.last().map(|s| s.epsilon_target),
            delta: Some(plan.delta1),
            horizon: total_steps,
            seed,
            replicates,
            se_defined: replicates > 1,
            estimator: Some("single-point".into()),
            schedule: Some("per-stage inverse-time".into()),
        },
        reference: Some(ReferencePoint {
            point: reference.point.clone(),
            residual: reference.residual,
        }),
    };
    output::write_json(&out.join("manifest.json"), &manifest).map_err(io_err)?;
    output::write_json(&out.join("plan.json"), &plan).map_err(io_err)?;
    output::write_stages_csv(&out.join("stages.csv"), &staged).map_err(io_err)?;
    output::write_json(&out.join("restart_report.json"), &report).map_err(io_err)?;
    Ok(report.passed)
}

#[derive(Serialize)]
struct VerifyArtifact<'a> {
    delta: f64,
    epsilon: f64,
    checks: Vec<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certification: Option<&'a CertificationReport>,
}

/// Default probe radius for verify mode: well inside every admissible
/// range so the full suite applies out of the box.
fn pick_verify_delta(game: &GameSpec, margin: f64) -> f64 {
    let mono = monotonicity_radius_limit(game, margin);
    let shift = equilibrium_radius_limit(game);
    let cap = if mono.is_finite() { mono.min(shift) } else { shift };
    (0.9 * cap).min(0.05)
}

fn cmd_verify(
    inv: &Invocation,
    cfg: &ExperimentConfig,
    game: &GameSpec,
    out: &Path,
    certification: Option<&CertificationReport>,
) -> Result<bool, CoreError> {
    let default = crate::config::VerifySection {
        delta: None,
        draws: None,
        probes: None,
        pairs: None,
        monotonicity_margin: None,
        epsilon: None,
        seed: None,
    };
    let section = cfg.verify.as_ref().unwrap_or(&default);
    let seed = base_seed(inv, cfg);
    let margin = section
        .monotonicity_margin
        .unwrap_or(DEFAULT_MONOTONICITY_MARGIN);
    let delta = section
        .delta
        .unwrap_or_else(|| pick_verify_delta(game, margin));
    let draws = section.draws.unwrap_or(200_000);
    let probes = section.probes.unwrap_or(100);
    let pairs = section.pairs.unwrap_or(200);
    let epsilon = section
        .epsilon
        .unwrap_or_else(|| dfgp_core::admissible_accuracy_max(game) / 100.0);
    let origin = vec![0.0; game.total_dim()];
    let mut checks = Vec::new();
    checks.push(verify_unbiased(game, &origin, delta, draws, seed.wrapping_add(1))?);
    checks.push(verify_smoothing_gap(game, delta, probes, seed.wrapping_add(2))?);
    checks.push(verify_smoothed_monotonicity(
        game,
        delta,
        margin,
        pairs,
        seed.wrapping_add(3),
    )?);
    let (shift_report, _) = verify_equilibrium_shift(game, delta, seed.wrapping_add(4))?;
    checks.push(shift_report);
    checks.push(verify_horizon_scaling(game, epsilon)?);
    let passed = checks.iter().all(|c| c.passed);
    let artifact = VerifyArtifact {
        delta,
        epsilon,
        checks,
        certification,
    };
    output::write_json(&out.join("lemma_report.json"), &artifact).map_err(io_err)?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        command: "verify",
        game: GameSummary::of(game),
        config: cfg,
        resolved: ResolvedParams {
            epsilon: Some(epsilon),
            delta: Some(delta),
            horizon: None,
            seed,
            replicates: 1,
            se_defined: false,
            estimator: None,
            schedule: None,
        },
        reference: None,
    };
    output::write_json(&out.join("manifest.json"), &manifest).map_err(io_err)?;
    Ok(passed)
}

#[derive(Serialize)]
struct SweepCell {
    epsilon: f64,
    delta: f64,
    horizon: u64,
    terminal_mean: f64,
    terminal_se: f64,
    target_met: bool,
    dir: String,
}

#[derive(Serialize)]
struct SweepSummary {
    cells: Vec<SweepCell>,
    /// Horizon ratios between consecutive cells, for eyeballing the
    /// accuracy-to-horizon scaling.
    horizon_ratios: Vec<f64>,
}

fn cmd_sweep(
    inv: &Invocation,
    cfg: &ExperimentConfig,
    game: &GameSpec,
    out: &Path,
) -> Result<bool, CoreError> {
    let section = cfg.sweep.as_ref().expect("validated");
    let seed = base_seed(inv, cfg);
    let replicates = inv.replicates.or(section.replicates).unwrap_or(4);
    let variant = section.variant.unwrap_or(GuaranteeVariant::IterateOnly);
    let reference = reference(game)?;
    let mut cells = Vec::new();
    for (i, &epsilon) in section.epsilons.iter().enumerate() {
        let chosen = choose_parameters(game, epsilon, variant)?;
        let cell_dir = out.join(format!("cell-{i}"));
        std::fs::create_dir_all(&cell_dir).map_err(io_err)?;
        let cell_seed = seed.wrapping_add(i as u64);
        let run_config = RunConfig {
            delta: chosen.delta,
            horizon: chosen.horizon,
            schedule: StepSchedule::InverseTime {
                alpha: game.constants().alpha,
            },
            estimator: EstimatorKind::SinglePoint,
            x0: None,
            seed: cell_seed,
            record: None,
        };
        let curve = run_replicated(game, &run_config, &reference.point, replicates, cell_seed)?;
        let terminal = curve.terminal_iterate();
        let target_met = terminal.mean <= epsilon + 3.0 * terminal.se.unwrap_or(0.0);
        let manifest = Manifest {
            version: env!("CARGO_PKG_VERSION"),
            command: "sweep",
            game: GameSummary::of(game),
            config: cfg,
            resolved: ResolvedParams {
                epsilon: Some(epsilon),
                delta: Some(chosen.delta),
                horizon: Some(chosen.horizon),
                seed: cell_seed,
                replicates,
                se_defined: replicates > 1,
                estimator: Some("single-point".into()),
                schedule: Some("inverse-time".into()),
            },
            reference: Some(ReferencePoint {
                point: reference.point.clone(),
                residual: reference.residual,
            }),
        };
        output::write_json(&cell_dir.join("manifest.json"), &manifest).map_err(io_err)?;
        output::write_curve_csv(&cell_dir.join("curve.csv"), &curve).map_err(io_err)?;
        output::write_loglog_dat(&cell_dir.join("curve_loglog.dat"), &curve).map_err(io_err)?;
        cells.push(SweepCell {
            epsilon,
            delta: chosen.delta,
            horizon: chosen.horizon,
            terminal_mean: terminal.mean,
            terminal_se: terminal.se.unwrap_or(0.0),
            target_met,
            dir: format!("cell-{i}"),
        });
    }
    let horizon_ratios = cells
        .windows(2)
        .map(|w| w[1].horizon as f64 / w[0].horizon as f64)
        .collect();
    let all_met = cells.iter().all(|c| c.target_met);
    let summary = SweepSummary {
        cells,
        horizon_ratios,
    };
    output::write_json(&out.join("sweep_summary.json"), &summary).map_err(io_err)?;
    Ok(all_met)
}
