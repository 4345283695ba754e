//! Built-in benchmark games with known equilibria and exactly derived
//! constants. All use two one-dimensional players on `[-1, 1]` so that the
//! exact smoothed-gradient oracle applies and every constant is closed-form.

use crate::game::{centering_shift, scalar_player_cost_range, GameSpec, PolyFamily};
use crate::set::{FeasibleSet, PlayerSet};

fn interval_players(n: usize) -> FeasibleSet {
    FeasibleSet::new(
        (0..n)
            .map(|_| PlayerSet::Box { half_widths: vec![1.0] })
            .collect(),
        vec![1; n],
    )
    .unwrap()
}

/// Decoupled quadratic game used for long-horizon rate checks: two players,
/// identity interaction, equilibrium at the origin. Costs are shifted so
/// their range is centered, which keeps the uniform cost bound (and hence
/// prescribed horizons) as small as the geometry allows.
pub fn lq_rate() -> GameSpec {
    let set = interval_players(2);
    let (lo, hi) = scalar_player_cost_range(1.0, 0.0, 0.0, 1.0);
    let s = centering_shift(lo, hi);
    PolyFamily::linear_quadratic(
        "lq-rate",
        vec![1.0, 0.0, 0.0, 1.0],
        vec![0.0, 0.0],
        vec![s, s],
        set,
    )
    .build()
    .expect("static instance")
}

/// Coupled quadratic game with rotational interaction and an interior
/// equilibrium at (0.1, -0.1). The joint gradient map is x -> Mx + b with
/// M = [[1, 0.25], [-0.25, 1]] and b = -M (0.1, -0.1).
///
/// Costs carry a positive offset that fixes f_i at the equilibrium to
/// `EQUILIBRIUM_COST`. A single-point gradient estimate scales with the
/// realized cost value itself, so the offset keeps the noise level steady
/// (and nonzero) as the query radius shrinks toward the equilibrium; the
/// uniform cost bound is then attained at the far corner of the box rather
/// than near the play region. Restart schedules exercise their noise
/// constant honestly this way, instead of running in a regime where costs
/// nearly cancel.
pub fn lq_coupled() -> GameSpec {
    const EQUILIBRIUM_COST: f64 = 0.4;
    let set = interval_players(2);
    let gamma: f64 = 0.25;
    let z: [f64; 2] = [0.1, -0.1];
    let b = [-(z[0] + gamma * z[1]), -(-gamma * z[0] + z[1])];
    // Cost of player i at the equilibrium before any shift; the own-gradient
    // rows are (x1 + gamma x2 + b1) and (-gamma x1 + x2 + b2).
    let raw_at_eq = [
        0.5 * z[0] * z[0] + gamma * z[0] * z[1] + b[0] * z[0],
        0.5 * z[1] * z[1] - gamma * z[0] * z[1] + b[1] * z[1],
    ];
    let shifts: Vec<f64> = (0..2).map(|i| EQUILIBRIUM_COST - raw_at_eq[i]).collect();
    PolyFamily::linear_quadratic(
        "lq-coupled",
        vec![1.0, gamma, -gamma, 1.0],
        b.to_vec(),
        shifts,
        set,
    )
    .build()
    .expect("static instance")
}

/// Quartic perturbation of a coupled quadratic game. The smoothed gradient
/// map genuinely differs from the raw one, the own-gradient Jacobians are
/// Lipschitz with modulus 2.4, and the equilibrium sits at (0.1, -0.1) by
/// construction of the offset.
pub fn quartic_benchmark() -> GameSpec {
    let set = interval_players(2);
    let gamma: f64 = 0.4;
    let c: f64 = 0.1;
    let z: [f64; 2] = [0.1, -0.1];
    let b = [
        -(z[0] + gamma * z[1]) - 4.0 * c * z[0].powi(3),
        -(-gamma * z[0] + z[1]) - 4.0 * c * z[1].powi(3),
    ];
    PolyFamily {
        name: "quartic".into(),
        matrix: vec![1.0, gamma, -gamma, 1.0],
        offset: b.to_vec(),
        quartic: vec![c, c],
        shift: vec![0.0, 0.0],
        set,
    }
    .build()
    .expect("static instance")
}

/// Decoupled quadratic game whose unconstrained minimizer (1.5, 0) lies
/// outside the box, so the equilibrium (1, 0) sits on the boundary and the
/// shrunken-set equilibrium moves by a full delta per unit of shrinkage.
pub fn lq_boundary() -> GameSpec {
    let set = interval_players(2);
    PolyFamily::linear_quadratic(
        "lq-boundary",
        vec![1.0, 0.0, 0.0, 1.0],
        vec![-1.5, 0.0],
        vec![0.0, 0.0],
        set,
    )
    .build()
    .expect("static instance")
}

/// Look up a built-in game by name.
pub fn builtin(name: &str) -> Option<GameSpec> {
    match name {
        "lq-rate" => Some(lq_rate()),
        "lq-coupled" => Some(lq_coupled()),
        "quartic" => Some(quartic_benchmark()),
        "lq-boundary" => Some(lq_boundary()),
        _ => None,
    }
}

pub fn builtin_names() -> &'static [&'static str] {
    &["lq-rate", "lq-coupled", "quartic", "lq-boundary"]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn registry_resolves_all_names() {
        for name in builtin_names() {
            let game = builtin(name).unwrap();
            assert_eq!(game.name(), *name);
        }
        assert!(builtin("nope").is_none());
    }

    #[test]
    fn rate_instance_has_minimal_cost_bound() {
        let game = lq_rate();
        let c = game.constants();
        assert_relative_eq!(c.alpha, 1.0, epsilon = 1e-12);
        assert_relative_eq!(c.beta, 1.0, epsilon = 1e-12);
        assert_eq!(c.jacobian_lipschitz, 0.0);
        // Centered range of 1/2 x^2 on [-1, 1] is [-1/4, 1/4].
        assert_relative_eq!(c.f_star, 1.0 / 16.0, epsilon = 1e-12);
        assert_relative_eq!(game.cost(0, &[1.0, 0.0]), 0.25, epsilon = 1e-15);
        assert_relative_eq!(game.cost(0, &[0.0, 0.5]), -0.25, epsilon = 1e-15);
    }

    #[test]
    fn coupled_instance_equilibrium_and_radii() {
        let game = lq_coupled();
        let mut g = vec![0.0; 2];
        game.joint_gradient(&[0.1, -0.1], &mut g);
        assert!(g.iter().all(|v| v.abs() < 1e-15));
        assert_relative_eq!(game.set().inner_radius(), 1.0);
        assert_relative_eq!(game.set().outer_radius(), 2f64.sqrt());
    }

    #[test]
    fn quartic_instance_smoothing_matters() {
        let game = quartic_benchmark();
        assert!(!game.smoothing_invariant());
        let c = game.constants();
        assert_relative_eq!(c.jacobian_lipschitz, 2.4, epsilon = 1e-12);
        let mut g = vec![0.0; 2];
        game.joint_gradient(&[0.1, -0.1], &mut g);
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn boundary_instance_pushes_equilibrium_to_the_wall() {
        let game = lq_boundary();
        // At (1, 0) the gradient is (-0.5, 0); moving along any feasible
        // direction cannot decrease player 1's cost.
        let mut g = vec![0.0; 2];
        game.joint_gradient(&[1.0, 0.0], &mut g);
        assert_relative_eq!(g[0], -0.5, epsilon = 1e-15);
        assert_relative_eq!(g[1], 0.0, epsilon = 1e-15);
    }
}
