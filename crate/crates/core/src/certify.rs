//! Empirical certification of a game's declared regularity constants. Each
//! check samples feasible profiles and tests the declared inequality
//! directly; a violation means the constants (or the oracles) are wrong, and
//! every downstream guarantee computed from them would be meaningless.

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::sampling::sample_in_ball;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// One offending sample of a failed check.
#[derive(Debug, Clone, Serialize)]
pub struct CertViolation {
    pub player: Option<usize>,
    pub measured: f64,
    pub bound: f64,
    pub detail: String,
}

/// Outcome of a single certification check. `worst_ratio` is the largest
/// measured-to-allowed ratio seen; at most one means the check passed.
#[derive(Debug, Clone, Serialize)]
pub struct CertCheck {
    pub id: String,
    pub samples: u64,
    pub worst_ratio: f64,
    pub passed: bool,
    pub violations: Vec<CertViolation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificationReport {
    pub game: String,
    pub sample_points: u64,
    pub seed: u64,
    pub checks: Vec<CertCheck>,
}

impl CertificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

const MAX_RECORDED_VIOLATIONS: usize = 10;

struct CheckAcc {
    id: &'static str,
    samples: u64,
    worst_ratio: f64,
    violations: Vec<CertViolation>,
}

impl CheckAcc {
    fn new(id: &'static str) -> Self {
        CheckAcc {
            id,
            samples: 0,
            worst_ratio: 0.0,
            violations: Vec::new(),
        }
    }

    /// Records one sample as a ratio `numer / denom` that must stay at or
    /// below one (the denominator already includes numerical slack).
    /// `measured` and `bound` are the slack-free values reported to the
    /// user when the sample violates the check.
    fn push(
        &mut self,
        numer: f64,
        denom: f64,
        measured: f64,
        bound: f64,
        player: Option<usize>,
        detail: impl FnOnce() -> String,
    ) {
        self.samples += 1;
        let ratio = if denom > 0.0 {
            numer / denom
        } else if numer > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if ratio > self.worst_ratio {
            self.worst_ratio = ratio;
        }
        if ratio > 1.0 && self.violations.len() < MAX_RECORDED_VIOLATIONS {
            self.violations.push(CertViolation {
                player,
                measured,
                bound,
                detail: detail(),
            });
        }
    }

    fn finish(self) -> CertCheck {
        CertCheck {
            id: self.id.to_string(),
            samples: self.samples,
            passed: self.worst_ratio <= 1.0,
            worst_ratio: self.worst_ratio,
            violations: self.violations,
        }
    }
}

fn sample_feasible_points(
    game: &GameSpec,
    count: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>> {
    let set = game.set();
    let total = set.total_dim();
    let mut pts = Vec::with_capacity(count as usize);
    let mut raw = vec![0.0; total];
    let mut proj = vec![0.0; total];
    for _ in 0..count {
        for i in 0..set.n_players() {
            // Overshoot the player's set by 30% so projection lands a
            // fraction of the samples exactly on the boundary.
            let rho = set.player(i).outer_radius() * 1.3;
            let block = set.block(i);
            let ball = sample_in_ball(block.len(), rho, rng);
            raw[block].copy_from_slice(&ball);
        }
        set.project(&raw, 1.0, &mut proj)?;
        pts.push(proj.clone());
    }
    Ok(pts)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Finite-difference Jacobian of player `i`'s own-gradient with respect to
/// the full profile, shape `dims[i] x total`.
fn fd_jacobian(game: &GameSpec, i: usize, x: &[f64]) -> DMatrix<f64> {
    let total = game.total_dim();
    let di = game.dims()[i];
    let mut jac = DMatrix::zeros(di, total);
    let mut probe = x.to_vec();
    let mut up = vec![0.0; di];
    let mut down = vec![0.0; di];
    for k in 0..total {
        let h = 1e-5 * (1.0 + x[k].abs());
        probe[k] = x[k] + h;
        game.grad_block(i, &probe, &mut up);
        probe[k] = x[k] - h;
        game.grad_block(i, &probe, &mut down);
        probe[k] = x[k];
        for r in 0..di {
            jac[(r, k)] = (up[r] - down[r]) / (2.0 * h);
        }
    }
    jac
}

fn op_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0f64, |acc, &s| acc.max(s))
}

/// Samples feasible profiles and checks every declared constant against
/// direct measurements: the own-gradient Lipschitz modulus, the Lipschitz
/// modulus of the own-gradient Jacobians, strong monotonicity of the joint
/// gradient, the uniform squared cost bound, and (when gradient oracles are
/// present) agreement between oracle and finite-difference gradients.
pub fn certify(game: &GameSpec, sample_points: u64, seed: u64) -> Result<CertificationReport> {
    if sample_points < 2 {
        return Err(Error::InvalidInput(
            "certification needs at least two sample points".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = sample_feasible_points(game, sample_points, &mut rng)?;
    let c = game.constants();
    let n = game.n_players();
    let total = game.total_dim();

    let mut grad_lip = CheckAcc::new("gradient-lipschitz");
    let mut jac_lip = CheckAcc::new("jacobian-lipschitz");
    let mut monotone = CheckAcc::new("strong-monotonicity");
    let mut cost_bound = CheckAcc::new("cost-bound");
    let mut oracle = CheckAcc::new("gradient-oracle-consistency");

    let mut g_here = vec![0.0; total];
    let mut g_there = vec![0.0; total];
    let mut gi_here: Vec<f64> = Vec::new();

    for (idx, x) in points.iter().enumerate() {
        for i in 0..n {
            let f = game.cost(i, x);
            let slack = 1e-9 * (1.0 + c.f_star);
            cost_bound.push(f * f, c.f_star + slack, f * f, c.f_star, Some(i), || {
                format!("cost^2 at sample {idx} exceeds the declared uniform bound")
            });
        }
        if game.has_grad_oracles() {
            for i in 0..n {
                let di = game.dims()[i];
                gi_here.resize(di, 0.0);
                game.grad_block(i, x, &mut gi_here);
                let mut fd = vec![0.0; di];
                let mut probe = x.to_vec();
                for (slot, k) in fd.iter_mut().zip(game.block(i)) {
                    let h = 6e-6 * (1.0 + x[k].abs());
                    probe[k] = x[k] + h;
                    let upc = game.cost(i, &probe);
                    probe[k] = x[k] - h;
                    let downc = game.cost(i, &probe);
                    probe[k] = x[k];
                    *slot = (upc - downc) / (2.0 * h);
                }
                let diff: f64 = gi_here
                    .iter()
                    .zip(&fd)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let allowed = 5e-7 * (1.0 + norm(&gi_here));
                oracle.push(diff, allowed, diff, allowed, Some(i), || {
                    format!("oracle and finite-difference gradients disagree at sample {idx}")
                });
            }
        }
    }

    for (idx, pair) in points.windows(2).enumerate() {
        let (x, y) = (&pair[0], &pair[1]);
        let dist: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if dist < 1e-9 {
            continue;
        }
        game.joint_gradient(x, &mut g_here);
        game.joint_gradient(y, &mut g_there);

        for i in 0..n {
            let block = game.block(i);
            let diff = norm(
                &block
                    .clone()
                    .map(|k| g_here[k] - g_there[k])
                    .collect::<Vec<_>>(),
            );
            let slack = 1e-8 * (1.0 + dist);
            grad_lip.push(diff, c.beta * dist + slack, diff, c.beta * dist, Some(i), || {
                format!("own-gradient moved too fast between samples {idx} and {}", idx + 1)
            });

            let ja = fd_jacobian(game, i, x);
            let jb = fd_jacobian(game, i, y);
            let jdiff = op_norm(&(ja - jb));
            let jslack = 1e-4 * (1.0 + dist);
            jac_lip.push(
                jdiff,
                c.jacobian_lipschitz * dist + jslack,
                jdiff,
                c.jacobian_lipschitz * dist,
                Some(i),
                || {
                    format!(
                        "own-gradient Jacobian moved too fast between samples {idx} and {}",
                        idx + 1
                    )
                },
            );
        }

        let inner: f64 = g_here
            .iter()
            .zip(&g_there)
            .zip(x.iter().zip(y))
            .map(|((ga, gb), (a, b))| (ga - gb) * (a - b))
            .sum();
        let needed = c.alpha * dist * dist;
        let slack = 1e-8 * (1.0 + dist * dist);
        monotone.push(needed, inner + slack, inner, needed, None, || {
            format!(
                "joint gradient is not {}-strongly monotone between samples {idx} and {}",
                c.alpha,
                idx + 1
            )
        });
    }

    let mut checks = vec![
        grad_lip.finish(),
        jac_lip.finish(),
        monotone.finish(),
        cost_bound.finish(),
    ];
    if game.has_grad_oracles() {
        checks.push(oracle.finish());
    }
    Ok(CertificationReport {
        game: game.name().to_string(),
        sample_points,
        seed,
        checks,
    })
}
