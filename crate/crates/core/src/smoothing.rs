//! Oracles for the smoothed game: each player's cost averaged over a ball
//! perturbation of its own action and sphere perturbations of the others.
//! Used by the verification suite and the equilibrium solver, never by the
//! learning loop itself.

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::quadrature::integrate_adaptive;
use crate::sampling::sample_mixed;
use crate::stats::Welford;
use rand::Rng;

/// How to evaluate the smoothed gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothedOracleMode {
    /// Pick the cheapest exact route available, falling back to Monte Carlo.
    Auto,
    /// Quadrature over the scalar ball coordinate with the sphere
    /// coordinates enumerated as sign patterns. Exact (up to quadrature
    /// tolerance) but only available when every player is one-dimensional
    /// and the game carries gradient closures.
    ExactOneDim,
    /// Sample average of gradient evaluations at perturbed profiles.
    MonteCarlo,
}

/// A smoothed-gradient evaluation with an accuracy tag.
#[derive(Debug, Clone)]
pub struct SmoothedGradient {
    pub gradient: Vec<f64>,
    /// Worst coordinate-wise standard error (zero for exact routes).
    pub standard_error: f64,
    pub method: &'static str,
}

const MAX_ENUMERATED_PLAYERS: usize = 20;

/// Evaluates the stacked smoothed gradient at `x` with perturbation size
/// `delta`. `target_se` bounds the Monte Carlo standard error per
/// coordinate; exact routes ignore it.
pub fn smoothed_gradient<R: Rng + ?Sized>(
    game: &GameSpec,
    x: &[f64],
    delta: f64,
    mode: SmoothedOracleMode,
    target_se: f64,
    rng: &mut R,
) -> Result<SmoothedGradient> {
    game.set().check_dim(x)?;
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "smoothing radius must be nonnegative and finite, got {delta}"
        )));
    }
    if delta == 0.0 || game.smoothing_invariant() {
        // Costs whose gradients are affine in the profile keep the same
        // gradient after averaging over any zero-mean perturbation.
        let mut g = vec![0.0; game.total_dim()];
        game.joint_gradient(x, &mut g);
        return Ok(SmoothedGradient {
            gradient: g,
            standard_error: 0.0,
            method: "affine-invariant",
        });
    }
    match mode {
        SmoothedOracleMode::Auto => {
            if exact_one_dim_available(game) {
                exact_one_dim(game, x, delta)
            } else {
                monte_carlo(game, x, delta, target_se, rng)
            }
        }
        SmoothedOracleMode::ExactOneDim => {
            if !exact_one_dim_available(game) {
                return Err(Error::UnsupportedMode(format!(
                    "exact smoothing quadrature needs one-dimensional players \
                     with gradient closures and at most {MAX_ENUMERATED_PLAYERS} \
                     players"
                )));
            }
            exact_one_dim(game, x, delta)
        }
        SmoothedOracleMode::MonteCarlo => monte_carlo(game, x, delta, target_se, rng),
    }
}

pub fn exact_one_dim_available(game: &GameSpec) -> bool {
    game.has_grad_oracles()
        && game.n_players() <= MAX_ENUMERATED_PLAYERS
        && game.dims().iter().all(|&d| d == 1)
}

/// For one-dimensional players the sphere is two points and the ball is the
/// interval [-1, 1], so the mixed average reduces to a 2^(n-1)-term sum of
/// scalar integrals, one per sign pattern of the opponents.
fn exact_one_dim(game: &GameSpec, x: &[f64], delta: f64) -> Result<SmoothedGradient> {
    let n = game.n_players();
    let mut g = vec![0.0; n];
    let patterns = 1u64 << (n - 1);
    let quad_tol = 1e-12;
    for i in 0..n {
        let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let mut acc = 0.0;
        for mask in 0..patterns {
            let mut probe = x.to_vec();
            for (bit, &j) in others.iter().enumerate() {
                let sign = if (mask >> bit) & 1 == 0 { 1.0 } else { -1.0 };
                probe[j] = x[j] + delta * sign;
            }
            let integral = integrate_adaptive(
                &mut |u| {
                    let mut p = probe.clone();
                    p[i] = x[i] + delta * u;
                    let mut block = [0.0];
                    game.grad_block(i, &p, &mut block);
                    block[0]
                },
                -1.0,
                1.0,
                quad_tol,
            );
            acc += 0.5 * integral;
        }
        g[i] = acc / patterns as f64;
    }
    Ok(SmoothedGradient {
        gradient: g,
        standard_error: 0.0,
        method: "sign-enumeration-quadrature",
    })
}

const MC_MAX_SAMPLES: u64 = 50_000_000;
const MC_MIN_SAMPLES: u64 = 1_000;

fn monte_carlo<R: Rng + ?Sized>(
    game: &GameSpec,
    x: &[f64],
    delta: f64,
    target_se: f64,
    rng: &mut R,
) -> Result<SmoothedGradient> {
    if !(target_se > 0.0) {
        return Err(Error::InvalidInput(format!(
            "Monte Carlo smoothing needs a positive standard-error target, got {target_se}"
        )));
    }
    let total = game.total_dim();
    let dims = game.dims().to_vec();
    let mut stats: Vec<Welford> = (0..total).map(|_| Welford::new()).collect();
    let mut probe = vec![0.0; total];
    let mut block_buf = vec![0.0; dims.iter().copied().max().unwrap_or(1)];
    let mut drawn = 0u64;
    loop {
        for _ in 0..MC_MIN_SAMPLES {
            for (i, range) in (0..game.n_players()).map(|i| (i, game.block(i))) {
                let sample = sample_mixed(&dims, i, rng);
                for k in 0..total {
                    probe[k] = x[k] + delta * sample.w[k];
                }
                let d = range.end - range.start;
                game.grad_block(i, &probe, &mut block_buf[..d]);
                for (off, k) in range.clone().enumerate() {
                    stats[k].push(block_buf[off]);
                }
            }
            drawn += 1;
        }
        let worst = stats
            .iter()
            .map(|w| w.standard_error().unwrap_or(f64::INFINITY))
            .fold(0.0f64, f64::max);
        if worst <= target_se {
            return Ok(SmoothedGradient {
                gradient: stats.iter().map(|w| w.mean()).collect(),
                standard_error: worst,
                method: "monte-carlo",
            });
        }
        if drawn >= MC_MAX_SAMPLES {
            return Err(Error::SolverFailure {
                residual: worst,
                iterations: drawn,
                tol: target_se,
            });
        }
    }
}

/// Monte Carlo estimate of one player's smoothed cost, for diagnostics.
pub fn smoothed_cost_estimate<R: Rng + ?Sized>(
    game: &GameSpec,
    player: usize,
    x: &[f64],
    delta: f64,
    samples: u64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    game.set().check_dim(x)?;
    if player >= game.n_players() {
        return Err(Error::InvalidInput(format!(
            "player index {player} out of range for {} players",
            game.n_players()
        )));
    }
    let dims = game.dims().to_vec();
    let total = game.total_dim();
    let mut probe = vec![0.0; total];
    let mut acc = Welford::new();
    for _ in 0..samples {
        let sample = sample_mixed(&dims, player, rng);
        for k in 0..total {
            probe[k] = x[k] + delta * sample.w[k];
        }
        acc.push(game.cost(player, &probe));
    }
    Ok((acc.mean(), acc.standard_error().unwrap_or(f64::INFINITY)))
}
