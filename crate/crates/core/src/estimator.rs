//! Bandit gradient estimators built from cost evaluations at perturbed
//! action profiles.

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::sampling::{sample_directions, sample_sphere, DirectionSample};
use rand::Rng;

/// One estimator evaluation: the stacked gradient estimate, the profile at
/// which costs were queried, and how many cost calls were spent.
#[derive(Debug, Clone)]
pub struct EstimateOutput {
    pub gradient: Vec<f64>,
    pub played: Vec<f64>,
    pub cost_evals: u64,
}

fn check_probe_feasible(game: &GameSpec, point: &[f64], label: &str) -> Result<()> {
    if !game.set().contains(point, 1.0, 1e-9) {
        return Err(Error::Infeasible(format!(
            "{label} probe leaves the feasible set; keep the base point in the \
             shrunk set and the radius below every player's inner radius"
        )));
    }
    Ok(())
}

/// Single-query estimator: every player perturbs its own block of the joint
/// profile by `radius` times a unit direction, observes its cost once at the
/// common perturbed profile, and scales the direction by (dim / radius) times
/// that observation. Costs `n_players` cost calls per step.
pub fn single_point_estimate(
    game: &GameSpec,
    x: &[f64],
    radius: f64,
    dirs: &DirectionSample,
    out: &mut EstimateOutput,
) -> Result<()> {
    let set = game.set();
    set.check_dim(x)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "perturbation radius must be positive and finite, got {radius}"
        )));
    }
    let total = set.total_dim();
    out.played.resize(total, 0.0);
    out.gradient.resize(total, 0.0);
    for k in 0..total {
        out.played[k] = x[k] + radius * dirs.v[k];
    }
    check_probe_feasible(game, &out.played, "single-point")?;
    out.cost_evals = 0;
    for i in 0..set.n_players() {
        let cost = game.cost(i, &out.played);
        out.cost_evals += 1;
        let d = set.dims()[i] as f64;
        let scale = d / radius * cost;
        let block = set.block(i);
        for k in block {
            out.gradient[k] = scale * dirs.v[k];
        }
    }
    Ok(())
}

/// Symmetric-difference estimator: player `i` queries its cost at its own
/// block shifted by plus and minus `radius` times a unit direction while the
/// opponents stay at the base profile. Costs `2 * n_players` calls per step
/// and has zero variance on costs that are quadratic in the player's own
/// one-dimensional action.
pub fn two_point_estimate(
    game: &GameSpec,
    x: &[f64],
    radius: f64,
    dirs: &DirectionSample,
    out: &mut EstimateOutput,
) -> Result<()> {
    let set = game.set();
    set.check_dim(x)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "perturbation radius must be positive and finite, got {radius}"
        )));
    }
    let total = set.total_dim();
    out.gradient.resize(total, 0.0);
    // The profile actually played (reported for tracking) uses the positive
    // branch for every player.
    out.played.resize(total, 0.0);
    for k in 0..total {
        out.played[k] = x[k] + radius * dirs.v[k];
    }
    check_probe_feasible(game, &out.played, "two-point")?;
    out.cost_evals = 0;
    let mut probe = x.to_vec();
    for i in 0..set.n_players() {
        let block = set.block(i);
        for k in block.clone() {
            probe[k] = x[k] + radius * dirs.v[k];
        }
        check_probe_feasible(game, &probe, "two-point")?;
        let plus = game.cost(i, &probe);
        for k in block.clone() {
            probe[k] = x[k] - radius * dirs.v[k];
        }
        check_probe_feasible(game, &probe, "two-point")?;
        let minus = game.cost(i, &probe);
        out.cost_evals += 2;
        let d = set.dims()[i] as f64;
        let scale = d / (2.0 * radius) * (plus - minus);
        for k in block.clone() {
            out.gradient[k] = scale * dirs.v[k];
            probe[k] = x[k];
        }
    }
    Ok(())
}

/// Convenience wrapper drawing fresh directions and producing one estimate.
pub fn draw_single_point<R: Rng + ?Sized>(
    game: &GameSpec,
    x: &[f64],
    radius: f64,
    rng: &mut R,
) -> Result<EstimateOutput> {
    let dirs = sample_directions(game.dims(), rng);
    let mut out = EstimateOutput {
        gradient: Vec::new(),
        played: Vec::new(),
        cost_evals: 0,
    };
    single_point_estimate(game, x, radius, &dirs, &mut out)?;
    Ok(out)
}

/// Average of independent single-point estimates at a fixed base point,
/// reported with a per-coordinate Monte Carlo standard error bound (the
/// largest coordinate-wise standard error).
pub fn mean_single_point<R: Rng + ?Sized>(
    game: &GameSpec,
    x: &[f64],
    radius: f64,
    samples: u64,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)> {
    let total = game.total_dim();
    let mut mean = vec![0.0; total];
    let mut m2 = vec![0.0; total];
    let mut dirs = DirectionSample {
        v: vec![0.0; total],
    };
    let mut out = EstimateOutput {
        gradient: Vec::new(),
        played: Vec::new(),
        cost_evals: 0,
    };
    for t in 1..=samples {
        let mut lo = 0;
        for &d in game.dims() {
            sample_sphere(d, rng, &mut dirs.v[lo..lo + d]);
            lo += d;
        }
        single_point_estimate(game, x, radius, &dirs, &mut out)?;
        let tf = t as f64;
        for k in 0..total {
            let delta = out.gradient[k] - mean[k];
            mean[k] += delta / tf;
            m2[k] += delta * (out.gradient[k] - mean[k]);
        }
    }
    let se = if samples > 1 {
        m2.iter()
            .map(|&s| (s / (samples as f64 - 1.0) / samples as f64).sqrt())
            .fold(0.0f64, f64::max)
    } else {
        f64::INFINITY
    };
    Ok((mean, se))
}
