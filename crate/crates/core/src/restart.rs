//! Restart scheduling: repeated runs with geometrically shrinking query
//! radius. Stage k runs the plain loop for `T_k` steps at radius `delta_k`,
//! warm-starting from the previous stage's final iterate; after stage k the
//! expected squared distance to the equilibrium is at most
//! `eps_k = 2 B delta_1^2 q^(2(k-1))`, so accuracy improves indefinitely
//! without fixing a target in advance.

use crate::engine::Stepper;
use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::stats::{MeanSe, Welford};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// One planned stage: radius, horizon, the guarantee after the stage, and
/// the closed-form ceiling on the steps spent through the end of the stage.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RestartStage {
    pub delta: f64,
    pub horizon: u64,
    /// Guaranteed expected squared error once this stage completes.
    pub epsilon: f64,
    /// Closed-form bound on the cumulative steps through this stage.
    pub step_bound: f64,
}

/// Fully materialized restart schedule.
#[derive(Debug, Clone, Serialize)]
pub struct RestartPlan {
    /// Noise constant `8 F* d^2 n / alpha^2`.
    pub a: f64,
    /// Plateau constant `2 ((1 + beta sqrt(n)/alpha) R + beta n / alpha)^2`.
    pub b: f64,
    /// First-stage radius.
    pub delta1: f64,
    /// Radius shrink fraction per stage, in (0, 1).
    pub q: f64,
    pub stages: Vec<RestartStage>,
}

/// The schedule's constants from raw game data. Returns `(a, b, delta1)`.
/// `delta1` is capped by the curvature rule `alpha / (2 L n^(3/2))` only in
/// genuinely multi-player games with curved gradients; otherwise the rule is
/// vacuous and the inner radius is the only cap.
pub fn restart_constants(
    alpha: f64,
    beta: f64,
    n_players: usize,
    d_total: usize,
    big_r: f64,
    f_star: f64,
    jacobian_lipschitz: f64,
    inner_radius: f64,
) -> (f64, f64, f64) {
    let n = n_players as f64;
    let d = d_total as f64;
    let a = 8.0 * f_star * d * d * n / (alpha * alpha);
    let b = 2.0 * ((1.0 + beta * n.sqrt() / alpha) * big_r + beta * n / alpha).powi(2);
    let delta1 = if n_players == 1 || jacobian_lipschitz == 0.0 {
        inner_radius
    } else {
        inner_radius.min(alpha / (2.0 * jacobian_lipschitz * n.powf(1.5)))
    };
    (a, b, delta1)
}

fn stage_horizon(a: f64, b: f64, big_r: f64, delta: f64) -> Result<u64> {
    let raw = (a / (b * delta.powi(4))).max(4.0 * big_r * big_r / (b * delta * delta));
    let t = raw.ceil();
    if !(t.is_finite() && t < 2f64.powi(62)) {
        return Err(Error::InvalidInput(format!(
            "stage horizon {t:e} is too large to schedule; use fewer stages \
             or a larger shrink fraction"
        )));
    }
    Ok((t as u64).max(1))
}

/// Builds the schedule for `stages` stages with per-stage radius shrink `q`.
pub fn build_plan(game: &GameSpec, q: f64, stages: usize) -> Result<RestartPlan> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidInput(format!(
            "shrink fraction must lie in (0, 1), got {q}"
        )));
    }
    if stages == 0 {
        return Err(Error::InvalidInput(
            "the schedule needs at least one stage".into(),
        ));
    }
    let c = game.constants();
    let set = game.set();
    let (a, b, delta1) = restart_constants(
        c.alpha,
        c.beta,
        game.n_players(),
        game.d_total(),
        set.outer_radius(),
        c.f_star,
        c.jacobian_lipschitz,
        set.inner_radius(),
    );
    if delta1 >= set.inner_radius() && !set.probe_feasibility_guaranteed() {
        return Err(Error::InvalidInput(format!(
            "first-stage radius {delta1} fills the whole inner radius but some \
             player's set does not contain the unit ball, so perturbed \
             profiles could leave the feasible set"
        )));
    }
    let big_r = set.outer_radius();
    let q2 = q * q;
    let mut out = Vec::with_capacity(stages);
    let mut delta = delta1;
    let mut eps = 2.0 * b * delta1 * delta1;
    // Closed-form coefficients of the cumulative-step ceiling, written as a
    // function of the stage guarantee eps_k: summing the geometric stage
    // horizons and substituting q^(2(k-1)) = eps_k / (2 b delta1^2) cancels
    // every power of delta1 from the eps^-2 and eps^-1 terms.
    let quart = 4.0 * a * b * q.powi(-4) / (q.powi(-4) - 1.0);
    let square = 8.0 * big_r * big_r * q.powi(-2) / (q.powi(-2) - 1.0);
    // Stage count as a function of eps_k, from inverting the guarantee.
    let stage_count = |eps: f64| 1.0 + (2.0 * b * delta1 * delta1 / eps).ln() / (2.0 * (1.0 / q).ln());
    for _ in 0..stages {
        let horizon = stage_horizon(a, b, big_r, delta)?;
        let step_bound = stage_count(eps) + quart / (eps * eps) + square / eps;
        out.push(RestartStage {
            delta,
            horizon,
            epsilon: eps,
            step_bound,
        });
        delta *= q;
        eps *= q2;
    }
    Ok(RestartPlan {
        a,
        b,
        delta1,
        q,
        stages: out,
    })
}

/// Replicate statistics of the squared error at the end of each stage.
#[derive(Debug, Clone, Serialize)]
pub struct StageResult {
    pub delta: f64,
    pub horizon: u64,
    pub cumulative_steps: u64,
    pub epsilon_target: f64,
    pub step_bound: f64,
    /// Squared distance of the stage's final iterate to the reference point.
    pub terminal: MeanSe,
}

#[derive(Debug, Clone, Serialize)]
pub struct StagedErrorCurve {
    pub stages: Vec<StageResult>,
    pub replicates: u64,
}

/// Runs the staged schedule. Each replicate `j` executes the whole chain
/// with one random stream seeded `seed_base + j`; stages are sequential
/// because each warm-starts from its predecessor, and the warm start is
/// projected into the next stage's shrunken set (a no-op, checked, since the
/// shrunken sets grow as the radius falls).
pub fn run_restarted(
    game: &GameSpec,
    plan: &RestartPlan,
    reference: &[f64],
    seed_base: u64,
    replicates: u64,
) -> Result<StagedErrorCurve> {
    if plan.stages.is_empty() {
        return Err(Error::InvalidInput("the schedule has no stages".into()));
    }
    if replicates < 1 {
        return Err(Error::InvalidInput(
            "at least one replicate is required".into(),
        ));
    }
    game.set().check_dim(reference)?;
    let per_replicate: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|j| run_chain(game, plan, reference, seed_base + j))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = vec![Welford::new(); plan.stages.len()];
    for errs in &per_replicate {
        for (w, &e) in acc.iter_mut().zip(errs) {
            w.push(e);
        }
    }
    let mut cumulative = 0u64;
    let stages = plan
        .stages
        .iter()
        .zip(&acc)
        .map(|(stage, w)| {
            cumulative += stage.horizon;
            StageResult {
                delta: stage.delta,
                horizon: stage.horizon,
                cumulative_steps: cumulative,
                epsilon_target: stage.epsilon,
                step_bound: stage.step_bound,
                terminal: MeanSe::from_welford(w),
            }
        })
        .collect();
    Ok(StagedErrorCurve {
        stages,
        replicates,
    })
}

fn run_chain(
    game: &GameSpec,
    plan: &RestartPlan,
    reference: &[f64],
    seed: u64,
) -> Result<Vec<f64>> {
    let total = game.total_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; total];
    let mut proj = vec![0.0; total];
    let mut errors = Vec::with_capacity(plan.stages.len());
    for stage in &plan.stages {
        let shrink = 1.0 - stage.delta;
        game.set().project(&x, shrink, &mut proj)?;
        let moved: f64 = x
            .iter()
            .zip(&proj)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(
            moved <= 1e-12,
            "warm start moved by {moved:e}; the shrunken sets should be nested"
        );
        x.copy_from_slice(&proj);
        let mut stepper = Stepper::new(game, stage.delta, crate::engine::EstimatorKind::SinglePoint);
        for t in 1..=stage.horizon {
            let eta = 2.0 / (game.constants().alpha * t as f64);
            stepper.step(&mut x, eta, &mut rng)?;
        }
        errors.push(
            x.iter()
                .zip(reference)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>(),
        );
    }
    Ok(errors)
}
