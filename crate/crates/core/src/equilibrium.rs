//! Variational-inequality solver for Nash points of the raw or smoothed
//! game, over the full feasible set or a shrunk copy of it. Strong
//! monotonicity makes the solution unique, so an extragradient loop with a
//! fixed step converges linearly and the fixed-point residual certifies the
//! answer.

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::smoothing::{smoothed_gradient, SmoothedOracleMode};
use rand::Rng;

/// A solved equilibrium together with the evidence for it.
#[derive(Debug, Clone)]
pub struct EquilibriumCertificate {
    pub point: Vec<f64>,
    /// Norm of x - proj(x - step * g(x)) at the returned point.
    pub residual: f64,
    pub iterations: u64,
    /// Scale of the feasible set the equilibrium lives in (1 = full set).
    pub shrink: f64,
    /// Smoothing radius of the game operator (0 = raw gradients).
    pub delta: f64,
}

pub const DEFAULT_EQ_TOL: f64 = 1e-10;
const MAX_ITERS: u64 = 1_000_000;

/// Solves for the unique equilibrium of the (optionally smoothed) game on
/// the feasible set scaled by `shrink`. `delta = 0` targets the raw game.
pub fn solve_equilibrium<R: Rng + ?Sized>(
    game: &GameSpec,
    shrink: f64,
    delta: f64,
    tol: f64,
    rng: &mut R,
) -> Result<EquilibriumCertificate> {
    if !(shrink > 0.0 && shrink <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "set shrink factor must lie in (0, 1], got {shrink}"
        )));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "equilibrium tolerance must be positive, got {tol}"
        )));
    }
    let set = game.set();
    let total = set.total_dim();
    let beta = game.constants().beta;
    let step = 1.0 / beta;
    // Monte Carlo smoothing cannot reach the residual tolerances this solver
    // needs; insist on an exact route when the operator is smoothed.
    let needs_exact = delta > 0.0 && !game.smoothing_invariant();
    let oracle_mode = if needs_exact {
        SmoothedOracleMode::ExactOneDim
    } else {
        SmoothedOracleMode::Auto
    };
    let mut eval = |x: &[f64], out: &mut Vec<f64>| -> Result<()> {
        if delta == 0.0 {
            out.resize(total, 0.0);
            game.joint_gradient(x, out);
            Ok(())
        } else {
            let sg = smoothed_gradient(game, x, delta, oracle_mode, tol * 0.1, rng)?;
            *out = sg.gradient;
            Ok(())
        }
    };

    // The origin is feasible at every shrink (all player sets contain it),
    // so it is a valid starting iterate.
    let mut x = vec![0.0; total];
    let mut g = Vec::with_capacity(total);
    let mut mid = vec![0.0; total];
    let mut tmp = vec![0.0; total];
    let mut next = vec![0.0; total];
    let mut residual = f64::INFINITY;
    for iter in 1..=MAX_ITERS {
        eval(&x, &mut g)?;
        for k in 0..total {
            tmp[k] = x[k] - step * g[k];
        }
        set.project(&tmp, shrink, &mut mid)?;
        residual = x
            .iter()
            .zip(mid.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if residual <= tol {
            return Ok(EquilibriumCertificate {
                point: x,
                residual,
                iterations: iter,
                shrink,
                delta,
            });
        }
        eval(&mid, &mut g)?;
        for k in 0..total {
            tmp[k] = x[k] - step * g[k];
        }
        set.project(&tmp, shrink, &mut next)?;
        std::mem::swap(&mut x, &mut next);
    }
    Err(Error::SolverFailure {
        residual,
        iterations: MAX_ITERS,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::builtin;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn interior_equilibrium_matches_the_linear_solve() {
        // lq-coupled encodes gradient M x + b with equilibrium (0.1, -0.1).
        let game = builtin("lq-coupled").unwrap();
        let cert = solve_equilibrium(&game, 1.0, 0.0, DEFAULT_EQ_TOL, &mut rng()).unwrap();
        assert!(cert.residual <= DEFAULT_EQ_TOL);
        assert!((cert.point[0] - 0.1).abs() < 1e-9, "{:?}", cert.point);
        assert!((cert.point[1] + 0.1).abs() < 1e-9);
    }

    #[test]
    fn boundary_equilibrium_lands_on_the_box_face() {
        // lq-boundary has unconstrained minimizer (1.5, 0); the box caps the
        // first coordinate at 1.
        let game = builtin("lq-boundary").unwrap();
        let cert = solve_equilibrium(&game, 1.0, 0.0, DEFAULT_EQ_TOL, &mut rng()).unwrap();
        assert!((cert.point[0] - 1.0).abs() < 1e-9, "{:?}", cert.point);
        assert!(cert.point[1].abs() < 1e-9);
    }

    #[test]
    fn shrunk_set_pulls_the_boundary_point_inward() {
        let game = builtin("lq-boundary").unwrap();
        let cert = solve_equilibrium(&game, 0.9, 0.0, DEFAULT_EQ_TOL, &mut rng()).unwrap();
        assert!((cert.point[0] - 0.9).abs() < 1e-9, "{:?}", cert.point);
    }

    #[test]
    fn smoothing_shifts_the_quartic_equilibrium() {
        // For the quartic game the smoothed gradient adds 4 c delta^2 x_i to
        // each own-gradient, so the smoothed equilibrium on the full set
        // differs from the raw one by an O(delta^2) pull toward the origin.
        let game = builtin("quartic").unwrap();
        let raw = solve_equilibrium(&game, 1.0, 0.0, DEFAULT_EQ_TOL, &mut rng()).unwrap();
        let smoothed = solve_equilibrium(&game, 1.0, 0.2, DEFAULT_EQ_TOL, &mut rng()).unwrap();
        assert!((raw.point[0] - 0.1).abs() < 1e-8);
        assert!((raw.point[1] + 0.1).abs() < 1e-8);
        let dist = (0..2)
            .map(|k| (raw.point[k] - smoothed.point[k]).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(dist > 1e-6, "smoothing should move the equilibrium");
        assert!(dist < 0.05, "but only by a small amount, got {dist}");
    }

    #[test]
    fn invariant_games_keep_their_equilibrium_under_smoothing() {
        let game = builtin("lq-coupled").unwrap();
        let raw = solve_equilibrium(&game, 1.0, 0.0, DEFAULT_EQ_TOL, &mut rng()).unwrap();
        let smoothed = solve_equilibrium(&game, 1.0, 0.1, DEFAULT_EQ_TOL, &mut rng()).unwrap();
        for k in 0..2 {
            assert!((raw.point[k] - smoothed.point[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_shrink() {
        let game = builtin("lq-rate").unwrap();
        let err = solve_equilibrium(&game, 0.0, 0.0, 1e-10, &mut rng()).unwrap_err();
        assert_eq!(err.code(), "invalid-input");
        let err = solve_equilibrium(&game, 1.2, 0.0, 1e-10, &mut rng()).unwrap_err();
        assert_eq!(err.code(), "invalid-input");
    }
}
