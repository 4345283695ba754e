//! Helpers shared by the integration suites: a per-criterion PASS/FAIL gate
//! and an independent grid-search equilibrium oracle used to cross-check the
//! extragradient solver on two-player scalar games.

#![allow(dead_code)]

use dfgp_core::quadrature::gauss_legendre;
use dfgp_core::{GameSpec, PlayerSet};

/// Collects sub-check failures for one acceptance criterion and prints a
/// single `acceptance <name>: PASS/FAIL` line when finished. A FAIL line is
/// followed by a panic so the test harness reports the criterion as failed.
pub struct Gate {
    name: &'static str,
    failures: Vec<String>,
}

impl Gate {
    pub fn new(name: &'static str) -> Self {
        Gate {
            name,
            failures: Vec::new(),
        }
    }

    pub fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    pub fn finish(self, detail: impl AsRef<str>) {
        if self.failures.is_empty() {
            println!("acceptance {}: PASS ({})", self.name, detail.as_ref());
        } else {
            let summary = self.failures.join("; ");
            println!("acceptance {}: FAIL ({summary})", self.name);
            panic!("acceptance {} failed: {summary}", self.name);
        }
    }
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

const GRID: usize = 41;
const LEVELS: usize = 9;
const ZOOM_CELLS: usize = 3;

/// Player `i`'s smoothed cost at `(own, opp)`: the own coordinate averaged
/// uniformly over `[own - delta, own + delta]` and the opponent averaged over
/// its two signed endpoints, matching the smoothed game the solver targets.
/// The 16-point rule is exact because the built-in costs are polynomial of
/// low degree; `delta = 0` is the raw cost.
fn smoothed_cost(
    game: &GameSpec,
    player: usize,
    own: f64,
    opp: f64,
    delta: f64,
    nodes: &[f64],
    weights: &[f64],
) -> f64 {
    let own_idx = player;
    let opp_idx = 1 - player;
    let mut profile = [0.0f64; 2];
    if delta == 0.0 {
        profile[own_idx] = own;
        profile[opp_idx] = opp;
        return game.cost(player, &profile);
    }
    let mut acc = 0.0;
    for sign in [1.0, -1.0] {
        profile[opp_idx] = opp + delta * sign;
        let mut integral = 0.0;
        for (&u, &w) in nodes.iter().zip(weights) {
            profile[own_idx] = own + delta * u;
            integral += w * game.cost(player, &profile);
        }
        // Gauss-Legendre weights sum to 2, so half the weighted sum is the
        // interval average.
        acc += 0.5 * integral;
    }
    acc / 2.0
}

/// Equilibrium of the (optionally smoothed) game on `shrink * X` by
/// exhaustive grid search with repeated zooming: at each level every joint
/// grid point is scored by its worst best-response regret and the search
/// window closes in on the minimizer. Slow but entirely independent of the
/// extragradient solver; final accuracy is a few times 1e-8 per coordinate.
pub fn grid_equilibrium(game: &GameSpec, shrink: f64, delta: f64) -> Vec<f64> {
    assert_eq!(
        game.n_players(),
        2,
        "the grid oracle covers two-player games"
    );
    assert!(
        game.dims().iter().all(|&d| d == 1),
        "the grid oracle covers scalar players"
    );
    let (nodes, weights) = gauss_legendre(16);
    let mut lo = [0.0f64; 2];
    let mut hi = [0.0f64; 2];
    for i in 0..2 {
        let w = match game.set().player(i) {
            PlayerSet::Box { half_widths } => half_widths[0],
            _ => panic!("the grid oracle expects interval players"),
        };
        lo[i] = -w * shrink;
        hi[i] = w * shrink;
    }
    let mut best = [0.0f64; 2];
    for _ in 0..LEVELS {
        let (win_lo, win_hi) = (lo, hi);
        let grid =
            |i: usize, k: usize| win_lo[i] + (win_hi[i] - win_lo[i]) * k as f64 / (GRID - 1) as f64;
        // cost[i][a][b]: player i's smoothed cost playing its a-th grid point
        // against the opponent's b-th grid point.
        let mut cost = vec![[[0.0f64; GRID]; GRID]; 2];
        for i in 0..2 {
            for a in 0..GRID {
                for b in 0..GRID {
                    cost[i][a][b] = smoothed_cost(
                        game,
                        i,
                        grid(i, a),
                        grid(1 - i, b),
                        delta,
                        &nodes,
                        &weights,
                    );
                }
            }
        }
        // Best-response value against each opponent grid point.
        let mut best_resp = [[f64::INFINITY; GRID]; 2];
        for i in 0..2 {
            for b in 0..GRID {
                for a in 0..GRID {
                    best_resp[i][b] = best_resp[i][b].min(cost[i][a][b]);
                }
            }
        }
        let mut arg = [0usize; 2];
        let mut best_score = f64::INFINITY;
        for a in 0..GRID {
            for b in 0..GRID {
                let regret0 = cost[0][a][b] - best_resp[0][b];
                let regret1 = cost[1][b][a] - best_resp[1][a];
                let score = regret0.max(regret1);
                if score < best_score {
                    best_score = score;
                    arg = [a, b];
                }
            }
        }
        best = [grid(0, arg[0]), grid(1, arg[1])];
        for i in 0..2 {
            let new_lo = grid(i, arg[i].saturating_sub(ZOOM_CELLS));
            let new_hi = grid(i, (arg[i] + ZOOM_CELLS).min(GRID - 1));
            lo[i] = new_lo;
            hi[i] = new_hi;
        }
    }
    best.to_vec()
}
