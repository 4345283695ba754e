//! The learning loop: projected stochastic play driven by bandit gradient
//! estimates, plus replicated error curves and the accuracy-driven
//! parameter chooser.
//!
//! Time indexing convention: a trajectory records `t` = number of completed
//! steps, so `t = 0` is the initial point. The inverse-time schedule and the
//! theoretical error bound start their clock at 1 on the initial point;
//! [`error_upper_bound`] therefore takes `t + 1` when fed a recorded `t`.

use crate::error::{Error, Result};
use crate::estimator::{single_point_estimate, two_point_estimate, EstimateOutput};
use crate::game::GameSpec;
use crate::sampling::{sample_sphere, DirectionSample};
use crate::stats::{MeanSe, RecordGrid, Welford};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which bandit estimator drives the update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    /// One cost call per player per step.
    SinglePoint,
    /// Symmetric difference, two cost calls per player per step.
    TwoPoint,
}

/// Step-size rule, indexed from t = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepSchedule {
    /// eta_t = 2 / (alpha * t); the rule the convergence guarantee assumes.
    InverseTime { alpha: f64 },
    Constant { eta: f64 },
    /// Explicit list; entry k is the step size of step k + 1.
    Custom { etas: Vec<f64> },
}

impl StepSchedule {
    pub fn validate(&self, horizon: u64) -> Result<()> {
        match self {
            StepSchedule::InverseTime { alpha } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(Error::InvalidSchedule(format!(
                        "inverse-time schedule needs a positive modulus, got {alpha}"
                    )));
                }
            }
            StepSchedule::Constant { eta } => {
                if !(eta.is_finite() && *eta > 0.0) {
                    return Err(Error::InvalidSchedule(format!(
                        "constant step size must be positive, got {eta}"
                    )));
                }
            }
            StepSchedule::Custom { etas } => {
                if (etas.len() as u64) < horizon {
                    return Err(Error::InvalidSchedule(format!(
                        "custom schedule has {} entries but the horizon is {horizon}",
                        etas.len()
                    )));
                }
                if let Some(bad) = etas.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
                    return Err(Error::InvalidSchedule(format!(
                        "custom schedule contains a non-positive step size {bad}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Step size for step `t` (1-indexed). `validate` must have accepted the
    /// horizon that covers `t`.
    pub fn eta(&self, t: u64) -> f64 {
        debug_assert!(t >= 1);
        match self {
            StepSchedule::InverseTime { alpha } => 2.0 / (alpha * t as f64),
            StepSchedule::Constant { eta } => *eta,
            StepSchedule::Custom { etas } => etas[(t - 1) as usize],
        }
    }
}

/// Full parameterization of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Query radius; perturbed actions sit at distance `delta` per player.
    pub delta: f64,
    /// Number of steps.
    pub horizon: u64,
    pub schedule: StepSchedule,
    pub estimator: EstimatorKind,
    /// Initial point, defaulting to the origin; must lie in the shrunken set.
    pub x0: Option<Vec<f64>>,
    pub seed: u64,
    /// Recording cadence; `None` picks every step for short runs and a
    /// logarithmic grid for long ones.
    pub record: Option<RecordGrid>,
}

impl RunConfig {
    pub fn validate(&self, game: &GameSpec) -> Result<()> {
        let set = game.set();
        let r = set.inner_radius();
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "query radius must be positive and finite, got {}",
                self.delta
            )));
        }
        if self.delta > r {
            return Err(Error::InvalidInput(format!(
                "query radius {} exceeds the feasible set's inner radius {r}; \
                 the radius must lie in (0, r)",
                self.delta
            )));
        }
        if self.delta > 1.0 {
            return Err(Error::InvalidInput(format!(
                "query radius {} exceeds 1, which would invert the shrunken set",
                self.delta
            )));
        }
        if (self.delta == r || self.delta == 1.0) && !set.probe_feasibility_guaranteed() {
            return Err(Error::InvalidInput(format!(
                "query radius equal to the inner radius {r} is only safe when \
                 every player's set contains the unit ball"
            )));
        }
        if let Some(x0) = &self.x0 {
            set.check_dim(x0)?;
            if !set.contains(x0, 1.0 - self.delta, 1e-9) {
                return Err(Error::InvalidInput(
                    "initial point must lie in the shrunken feasible set".into(),
                ));
            }
        }
        if let Some(RecordGrid::Every(0)) = self.record {
            return Err(Error::InvalidInput(
                "recording cadence must be at least 1".into(),
            ));
        }
        self.schedule.validate(self.horizon)
    }

    fn checkpoints(&self) -> Vec<u64> {
        self.record
            .unwrap_or_else(|| RecordGrid::default_for(self.horizon))
            .checkpoints(self.horizon)
    }
}

/// Recorded history of a single run. `played[j]` is the perturbed profile
/// acted out during the step that completed at `ts[j]`; at `t = 0` it is the
/// initial point itself. Error columns are filled only when a reference
/// equilibrium was supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub ts: Vec<u64>,
    pub iterates: Vec<Vec<f64>>,
    pub played: Vec<Vec<f64>>,
    pub errors_iterate: Vec<f64>,
    pub errors_played: Vec<f64>,
    pub cost_evals: u64,
    pub seed: u64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Reusable single-step driver; shared by the plain run loop and the
/// restart scheduler so both execute the identical recurrence.
pub(crate) struct Stepper<'g> {
    game: &'g GameSpec,
    pub delta: f64,
    shrink: f64,
    estimator: EstimatorKind,
    dirs: DirectionSample,
    est: EstimateOutput,
    tmp: Vec<f64>,
    proj: Vec<f64>,
    pub cost_evals: u64,
}

impl<'g> Stepper<'g> {
    pub fn new(game: &'g GameSpec, delta: f64, estimator: EstimatorKind) -> Self {
        let total = game.total_dim();
        Stepper {
            game,
            delta,
            shrink: 1.0 - delta,
            estimator,
            dirs: DirectionSample {
                v: vec![0.0; total],
            },
            est: EstimateOutput {
                gradient: Vec::with_capacity(total),
                played: Vec::with_capacity(total),
                cost_evals: 0,
            },
            tmp: vec![0.0; total],
            proj: vec![0.0; total],
            cost_evals: 0,
        }
    }

    /// Advances `x` by one projected step of size `eta`.
    pub fn step(&mut self, x: &mut Vec<f64>, eta: f64, rng: &mut ChaCha8Rng) -> Result<()> {
        let mut lo = 0;
        for &d in self.game.dims() {
            sample_sphere(d, rng, &mut self.dirs.v[lo..lo + d]);
            lo += d;
        }
        match self.estimator {
            EstimatorKind::SinglePoint => {
                single_point_estimate(self.game, x, self.delta, &self.dirs, &mut self.est)?
            }
            EstimatorKind::TwoPoint => {
                two_point_estimate(self.game, x, self.delta, &self.dirs, &mut self.est)?
            }
        }
        self.cost_evals += self.est.cost_evals;
        for k in 0..x.len() {
            self.tmp[k] = x[k] - eta * self.est.gradient[k];
        }
        self.game.set().project(&self.tmp, self.shrink, &mut self.proj)?;
        std::mem::swap(x, &mut self.proj);
        Ok(())
    }

    pub fn last_played(&self) -> &[f64] {
        &self.est.played
    }
}

/// Executes one run. Deterministic given the config (including its seed).
pub fn run(game: &GameSpec, config: &RunConfig, reference: Option<&[f64]>) -> Result<Trajectory> {
    config.validate(game)?;
    if let Some(r) = reference {
        game.set().check_dim(r)?;
    }
    let total = game.total_dim();
    let x0 = match &config.x0 {
        Some(p) => p.clone(),
        None => vec![0.0; total],
    };
    let checkpoints = config.checkpoints();
    let mut traj = Trajectory {
        ts: Vec::with_capacity(checkpoints.len()),
        iterates: Vec::with_capacity(checkpoints.len()),
        played: Vec::with_capacity(checkpoints.len()),
        errors_iterate: Vec::new(),
        errors_played: Vec::new(),
        cost_evals: 0,
        seed: config.seed,
    };
    let record = |t: u64, x: &[f64], played: &[f64], traj: &mut Trajectory| {
        traj.ts.push(t);
        traj.iterates.push(x.to_vec());
        traj.played.push(played.to_vec());
        if let Some(star) = reference {
            traj.errors_iterate.push(sq_dist(x, star));
            traj.errors_played.push(sq_dist(played, star));
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut stepper = Stepper::new(game, config.delta, config.estimator);
    let mut x = x0.clone();
    let mut next_cp = 0usize;
    if checkpoints.get(next_cp) == Some(&0) {
        record(0, &x, &x0, &mut traj);
        next_cp += 1;
    }
    for t in 1..=config.horizon {
        let eta = config.schedule.eta(t);
        stepper.step(&mut x, eta, &mut rng)?;
        if checkpoints.get(next_cp) == Some(&t) {
            record(t, &x, stepper.last_played(), &mut traj);
            next_cp += 1;
        }
    }
    traj.cost_evals = stepper.cost_evals;
    Ok(traj)
}

/// Pointwise replicate statistics of the squared error to a reference
/// equilibrium, for the iterates and for the profiles actually played.
#[derive(Debug, Clone)]
pub struct ErrorCurve {
    pub ts: Vec<u64>,
    pub iterate: Vec<MeanSe>,
    pub played: Vec<MeanSe>,
    pub replicates: u64,
}

impl ErrorCurve {
    pub fn terminal_iterate(&self) -> &MeanSe {
        self.iterate.last().expect("curve is never empty")
    }

    pub fn terminal_played(&self) -> &MeanSe {
        self.played.last().expect("curve is never empty")
    }

    /// First recorded time at which the iterate mean drops to `level` or
    /// below.
    pub fn iterate_first_below(&self, level: f64) -> Option<u64> {
        self.ts
            .iter()
            .zip(self.iterate.iter())
            .find(|(_, m)| m.mean <= level)
            .map(|(t, _)| *t)
    }
}

/// Runs `replicates` independent copies with seeds `seed_base + j` and
/// reduces the recorded squared errors pointwise. The reduction order is
/// fixed by the replicate index, so output is independent of scheduling.
pub fn run_replicated(
    game: &GameSpec,
    config: &RunConfig,
    reference: &[f64],
    replicates: u64,
    seed_base: u64,
) -> Result<ErrorCurve> {
    if replicates < 1 {
        return Err(Error::InvalidInput(
            "at least one replicate is required".into(),
        ));
    }
    let trajectories: Vec<Trajectory> = (0..replicates)
        .into_par_iter()
        .map(|j| {
            let mut cfg = config.clone();
            cfg.seed = seed_base + j;
            run(game, &cfg, Some(reference))
        })
        .collect::<Result<Vec<_>>>()?;
    let ts = trajectories[0].ts.clone();
    let points = ts.len();
    let mut iterate_stats = vec![Welford::new(); points];
    let mut played_stats = vec![Welford::new(); points];
    for traj in &trajectories {
        debug_assert_eq!(traj.ts, ts);
        for k in 0..points {
            iterate_stats[k].push(traj.errors_iterate[k]);
            played_stats[k].push(traj.errors_played[k]);
        }
    }
    Ok(ErrorCurve {
        ts,
        iterate: iterate_stats.iter().map(MeanSe::from_welford).collect(),
        played: played_stats.iter().map(MeanSe::from_welford).collect(),
        replicates,
    })
}

/// One public single step, exposing the draw and the estimate for
/// diagnostics.
pub fn step(
    game: &GameSpec,
    x: &[f64],
    delta: f64,
    eta: f64,
    estimator: EstimatorKind,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, DirectionSample, Vec<f64>)> {
    let mut stepper = Stepper::new(game, delta, estimator);
    let mut next = x.to_vec();
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::InvalidSchedule(format!(
            "step size must be nonnegative and finite, got {eta}"
        )));
    }
    stepper.step(&mut next, eta, rng)?;
    Ok((next, stepper.dirs.clone(), stepper.est.gradient.clone()))
}

/// Same as [`step`] but with a caller-chosen direction draw, for
/// hand-checkable arithmetic.
pub fn step_with_direction(
    game: &GameSpec,
    x: &[f64],
    delta: f64,
    eta: f64,
    dirs: &DirectionSample,
    estimator: EstimatorKind,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let total = game.total_dim();
    let mut est = EstimateOutput {
        gradient: Vec::with_capacity(total),
        played: Vec::with_capacity(total),
        cost_evals: 0,
    };
    match estimator {
        EstimatorKind::SinglePoint => single_point_estimate(game, x, delta, dirs, &mut est)?,
        EstimatorKind::TwoPoint => two_point_estimate(game, x, delta, dirs, &mut est)?,
    }
    let mut tmp = vec![0.0; total];
    for k in 0..total {
        tmp[k] = x[k] - eta * est.gradient[k];
    }
    let mut next = vec![0.0; total];
    game.set().project(&tmp, 1.0 - delta, &mut next)?;
    Ok((next, est.gradient))
}

/// Which guarantee the accuracy-driven parameters target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuaranteeVariant {
    /// Squared error of the iterate x^t only.
    IterateOnly,
    /// Squared error of both x^t and the perturbed profile actually played;
    /// shrinks the radius further to absorb the perturbation itself.
    BothGuarantees,
}

/// Output of [`choose_parameters`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChosenParameters {
    pub epsilon: f64,
    pub delta: f64,
    pub horizon: u64,
    pub admissible_max: f64,
    pub variant: GuaranteeVariant,
}

fn base_denominator(alpha: f64, beta: f64, n: f64, big_r: f64) -> f64 {
    (alpha + beta * n.sqrt()) * big_r + beta * n
}

/// Query radius as a function of the target accuracy. The both-guarantees
/// variant enlarges the denominator by alpha * sqrt(n) so the played
/// profile's perturbation is covered too.
pub fn query_radius_rule(
    alpha: f64,
    beta: f64,
    n_players: usize,
    big_r: f64,
    epsilon: f64,
    variant: GuaranteeVariant,
) -> f64 {
    let n = n_players as f64;
    let mut denom = base_denominator(alpha, beta, n, big_r);
    if variant == GuaranteeVariant::BothGuarantees {
        denom += alpha * n.sqrt();
    }
    alpha * (epsilon / 4.0).sqrt() / denom
}

/// Horizon (before rounding up) sufficient for the requested accuracy. Kept
/// as a free function of the raw constants so scaling laws (in the total
/// dimension, in epsilon) can be tested directly.
pub fn horizon_rule(
    alpha: f64,
    beta: f64,
    n_players: usize,
    d_total: usize,
    big_r: f64,
    f_star: f64,
    epsilon: f64,
    variant: GuaranteeVariant,
) -> f64 {
    let n = n_players as f64;
    let d = d_total as f64;
    let mut coeff = base_denominator(alpha, beta, n, big_r);
    if variant == GuaranteeVariant::BothGuarantees {
        coeff += alpha * n.sqrt();
    }
    let transient = 32.0 * alpha.powi(4) * epsilon * big_r * big_r;
    let noise = 64.0 * coeff * coeff * f_star * d * d * n;
    transient.max(noise) / (alpha.powi(4) * epsilon * epsilon)
}

/// Largest admissible target accuracy for the game's constants. Accuracies
/// at or above this value do not certify an interior, strongly monotone
/// smoothed game.
pub fn admissible_accuracy_max(game: &GameSpec) -> f64 {
    let c = game.constants();
    let set = game.set();
    let n = game.n_players() as f64;
    let d_sq = base_denominator(c.alpha, c.beta, n, set.outer_radius()).powi(2);
    let r = set.inner_radius();
    let radius_term = 4.0 * r * r / (c.alpha * c.alpha);
    let curvature_term = if game.n_players() == 1 || c.jacobian_lipschitz == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (c.jacobian_lipschitz.powi(2) * n.powi(3))
    };
    d_sq * radius_term.min(curvature_term)
}

/// Picks (query radius, horizon) for a target accuracy on the expected
/// squared distance to the equilibrium.
pub fn choose_parameters(
    game: &GameSpec,
    epsilon: f64,
    variant: GuaranteeVariant,
) -> Result<ChosenParameters> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "target accuracy must be positive and finite, got {epsilon}"
        )));
    }
    let admissible_max = admissible_accuracy_max(game);
    if epsilon >= admissible_max {
        return Err(Error::AccuracyOutOfRange {
            requested: epsilon,
            admissible_max,
        });
    }
    let c = game.constants();
    let set = game.set();
    let delta = query_radius_rule(
        c.alpha,
        c.beta,
        game.n_players(),
        set.outer_radius(),
        epsilon,
        variant,
    );
    let horizon_real = horizon_rule(
        c.alpha,
        c.beta,
        game.n_players(),
        game.d_total(),
        set.outer_radius(),
        c.f_star,
        epsilon,
        variant,
    )
    .ceil();
    if !(horizon_real.is_finite() && horizon_real < 2f64.powi(62)) {
        return Err(Error::InvalidInput(format!(
            "required horizon {horizon_real:e} is too large to schedule"
        )));
    }
    Ok(ChosenParameters {
        epsilon,
        delta,
        horizon: horizon_real as u64,
        admissible_max,
        variant,
    })
}

/// Distance between the equilibria of the raw and smoothed games, per unit
/// of smoothing radius, as certified by the perturbation analysis.
pub fn equilibrium_shift_constant(game: &GameSpec, equilibrium_norm: f64) -> f64 {
    let c = game.constants();
    let n = game.n_players() as f64;
    (1.0 + c.beta * n.sqrt() / c.alpha) * equilibrium_norm + c.beta * n / c.alpha
}

/// Alternate shift constant with an n^(3/2) cross-player term; strictly
/// larger than [`equilibrium_shift_constant`] for n > 1. Exposed for
/// diagnostics so both margins can be reported.
pub fn equilibrium_shift_constant_steep(game: &GameSpec, equilibrium_norm: f64) -> f64 {
    let c = game.constants();
    let n = game.n_players() as f64;
    (1.0 + c.beta * n.sqrt() / c.alpha) * equilibrium_norm + c.beta * n.powf(1.5) / c.alpha
}

/// Theoretical ceiling on the expected squared distance to the raw
/// equilibrium after the clock reaches `t` (1-indexed, `t = 1` is the
/// initial point), for the inverse-time schedule.
pub fn error_upper_bound(
    game: &GameSpec,
    delta: f64,
    x1_dist_sq_to_smoothed_eq: f64,
    t: u64,
    equilibrium_norm: f64,
) -> f64 {
    let shift = equilibrium_shift_constant(game, equilibrium_norm);
    error_upper_bound_with_shift(game, delta, x1_dist_sq_to_smoothed_eq, t, shift)
}

/// Same ceiling with a caller-chosen shift constant, so the alternate
/// (steeper) plateau variant can be reported alongside the standard one.
pub fn error_upper_bound_with_shift(
    game: &GameSpec,
    delta: f64,
    x1_dist_sq_to_smoothed_eq: f64,
    t: u64,
    shift_constant: f64,
) -> f64 {
    assert!(t >= 1, "the bound's clock starts at 1");
    let c = game.constants();
    let n = game.n_players() as f64;
    let d = game.d_total() as f64;
    let a2d2 = delta * delta * c.alpha * c.alpha;
    let transient = (a2d2 * x1_dist_sq_to_smoothed_eq).max(8.0 * c.f_star * d * d * n);
    transient / (a2d2 * t as f64) + 2.0 * delta * delta * shift_constant * shift_constant
}
