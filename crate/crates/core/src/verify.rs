//! Statement-level verification: each routine here measures one inequality
//! the solver's guarantees rest on (estimator unbiasedness, the smoothing
//! gap, monotonicity of the smoothed game, equilibrium shift, the error
//! ceiling, horizon scaling, restart decay) and reports the worst observed
//! margin with explicit Monte Carlo tolerances.

use crate::engine::{
    choose_parameters, equilibrium_shift_constant, equilibrium_shift_constant_steep,
    error_upper_bound, error_upper_bound_with_shift, horizon_rule, ErrorCurve, GuaranteeVariant,
};
use crate::equilibrium::{solve_equilibrium, EquilibriumCertificate, DEFAULT_EQ_TOL};
use crate::error::{Error, Result};
use crate::estimator::mean_single_point;
use crate::game::GameSpec;
use crate::restart::StagedErrorCurve;
use crate::sampling::sample_in_ball;
use crate::smoothing::{smoothed_gradient, SmoothedOracleMode};
use crate::stats::linear_fit;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Numerical-tolerance floor for comparisons against exact oracles.
const EXACT_FLOOR: f64 = 1e-9;

/// One offending observation inside a failed check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckItem {
    pub measured: f64,
    pub bound: f64,
    pub standard_error: Option<f64>,
    pub detail: String,
}

/// Outcome of one verification routine. `worst_ratio` is the largest
/// measured-to-allowed ratio across samples (at most one passes); the
/// allowance already includes the Monte Carlo tolerance, so `passed` holds
/// exactly when no violations were recorded.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub id: String,
    pub samples: u64,
    pub worst_ratio: f64,
    pub violations: Vec<CheckItem>,
    pub passed: bool,
    pub notes: Vec<String>,
}

struct ReportAcc {
    id: &'static str,
    samples: u64,
    worst_ratio: f64,
    violations: Vec<CheckItem>,
    notes: Vec<String>,
}

const MAX_RECORDED_VIOLATIONS: usize = 20;

impl ReportAcc {
    fn new(id: &'static str) -> Self {
        ReportAcc {
            id,
            samples: 0,
            worst_ratio: 0.0,
            violations: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Records one observation as the ratio `numer / denom`; at most one
    /// passes. `measured`/`bound`/`se` are the user-facing values stored if
    /// the observation violates the check.
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        numer: f64,
        denom: f64,
        measured: f64,
        bound: f64,
        se: Option<f64>,
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
            self.violations.push(CheckItem {
                measured,
                bound,
                standard_error: se,
                detail: detail(),
            });
        }
    }

    fn note(&mut self, s: String) {
        self.notes.push(s);
    }

    fn finish(self) -> CheckReport {
        CheckReport {
            id: self.id.to_string(),
            samples: self.samples,
            passed: self.violations.is_empty(),
            worst_ratio: self.worst_ratio,
            violations: self.violations,
            notes: self.notes,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A point of the joint ball of radius `(1 - delta) r`, which sits inside
/// the shrunken feasible set, so all its smoothing perturbations of size
/// `delta` stay feasible.
fn sample_probe(game: &GameSpec, delta: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let r = game.set().inner_radius();
    sample_in_ball(game.total_dim(), (1.0 - delta).max(0.0) * r, rng)
}

/// Checks that the single-query estimator's sample mean reproduces the
/// smoothed gradient at `x`: per player, the block difference must stay
/// within four standard errors (plus a fixed floor for exact references).
pub fn verify_unbiased(
    game: &GameSpec,
    x: &[f64],
    delta: f64,
    draws: u64,
    seed: u64,
) -> Result<CheckReport> {
    if draws < 2 {
        return Err(Error::InvalidInput(
            "unbiasedness needs at least two draws".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reference = smoothed_gradient(
        game,
        x,
        delta,
        SmoothedOracleMode::Auto,
        1e-5,
        &mut rng,
    )?;
    let (mean, se) = mean_single_point(game, x, delta, draws, &mut rng)?;
    let mut acc = ReportAcc::new("unbiasedness");
    acc.note(format!("reference method: {}", reference.method));
    for i in 0..game.n_players() {
        let block = game.block(i);
        let di = block.len() as f64;
        let diff = norm(
            &block
                .clone()
                .map(|k| mean[k] - reference.gradient[k])
                .collect::<Vec<_>>(),
        );
        let allowed = 4.0 * (se + reference.standard_error) * di.sqrt() + EXACT_FLOOR;
        acc.push(diff, allowed, diff, allowed, Some(se), || {
            format!("player {i}: estimator mean strays from the smoothed gradient")
        });
    }
    acc.samples = draws;
    Ok(acc.finish())
}

/// Checks the distance between raw and smoothed gradients over interior
/// probes: jointly at most `beta * delta * n`, and per player at most
/// `beta * delta * sqrt(n)`.
pub fn verify_smoothing_gap(
    game: &GameSpec,
    delta: f64,
    probe_points: u64,
    seed: u64,
) -> Result<CheckReport> {
    if !(delta >= 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "smoothing radius must lie in [0, 1), got {delta}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = game.constants();
    let nf = game.n_players() as f64;
    let total = game.total_dim();
    let joint_bound = c.beta * delta * nf;
    let player_bound = c.beta * delta * nf.sqrt();
    // Monte Carlo fallbacks must resolve the gap to about 1% of the bound;
    // exact routes ignore this.
    let target_se = (0.01 * joint_bound / (total as f64).sqrt()).max(1e-10);
    let mut acc = ReportAcc::new("gradient-gap");
    let mut g = vec![0.0; total];
    let mut worst_joint = 0.0f64;
    let mut worst_player = 0.0f64;
    for p in 0..probe_points {
        let x = sample_probe(game, delta, &mut rng);
        game.joint_gradient(&x, &mut g);
        let sg = smoothed_gradient(game, &x, delta, SmoothedOracleMode::Auto, target_se, &mut rng)?;
        let joint_gap = dist(&g, &sg.gradient);
        worst_joint = worst_joint.max(joint_gap);
        let joint_tol = 4.0 * sg.standard_error * (total as f64).sqrt() + EXACT_FLOOR;
        acc.push(
            joint_gap,
            joint_bound + joint_tol,
            joint_gap,
            joint_bound,
            None,
            || format!("probe {p}: joint smoothing gap exceeds the bound"),
        );
        for i in 0..game.n_players() {
            let block = game.block(i);
            let gap = norm(
                &block
                    .clone()
                    .map(|k| g[k] - sg.gradient[k])
                    .collect::<Vec<_>>(),
            );
            worst_player = worst_player.max(gap);
            let tol = 4.0 * sg.standard_error * (block.len() as f64).sqrt() + EXACT_FLOOR;
            acc.push(gap, player_bound + tol, gap, player_bound, None, || {
                format!("probe {p}, player {i}: per-player smoothing gap exceeds the bound")
            });
        }
    }
    acc.note(format!(
        "worst joint gap {worst_joint:.3e} vs bound {joint_bound:.3e}; worst per-player gap \
         {worst_player:.3e} vs bound {player_bound:.3e}"
    ));
    Ok(acc.finish())
}

/// Largest smoothing radius under which the smoothed game is certified
/// `(1 - c) alpha`-strongly monotone. Unbounded for affine-gradient games
/// and for a single player, where averaging cannot hurt monotonicity.
pub fn monotonicity_radius_limit(game: &GameSpec, c: f64) -> f64 {
    let k = game.constants();
    let n = game.n_players() as f64;
    if game.n_players() == 1 || k.jacobian_lipschitz == 0.0 {
        f64::INFINITY
    } else {
        c * k.alpha / (k.jacobian_lipschitz * n.powf(1.5))
    }
}

/// Checks strong monotonicity of the smoothed gradient map with modulus
/// `(1 - c) alpha` over sampled pairs of interior points.
pub fn verify_smoothed_monotonicity(
    game: &GameSpec,
    delta: f64,
    c: f64,
    pairs: u64,
    seed: u64,
) -> Result<CheckReport> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidInput(format!(
            "monotonicity margin must lie in (0, 1), got {c}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "smoothing radius must lie in (0, 1), got {delta}"
        )));
    }
    let limit = monotonicity_radius_limit(game, c);
    if delta > limit {
        return Err(Error::InvalidInput(format!(
            "smoothing radius {delta} is too large for the monotonicity \
             guarantee; it must stay at or below {limit:.6e}",
        )));
    }
    let alpha = game.constants().alpha;
    let modulus = (1.0 - c) * alpha;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = ReportAcc::new("smoothed-monotonicity");
    let mut worst_modulus = f64::INFINITY;
    for p in 0..pairs {
        let x = sample_probe(game, delta, &mut rng);
        let y = sample_probe(game, delta, &mut rng);
        let d = dist(&x, &y);
        if d < 1e-9 {
            continue;
        }
        let target_se = (1e-3 * modulus * d).max(1e-10);
        let gx = smoothed_gradient(game, &x, delta, SmoothedOracleMode::Auto, target_se, &mut rng)?;
        let gy = smoothed_gradient(game, &y, delta, SmoothedOracleMode::Auto, target_se, &mut rng)?;
        let inner: f64 = gx
            .gradient
            .iter()
            .zip(&gy.gradient)
            .zip(x.iter().zip(&y))
            .map(|((ga, gb), (a, b))| (ga - gb) * (a - b))
            .sum();
        worst_modulus = worst_modulus.min(inner / (d * d));
        let tol =
            4.0 * (gx.standard_error + gy.standard_error) * d * (x.len() as f64).sqrt()
                + EXACT_FLOOR * (1.0 + d * d);
        let needed = modulus * d * d;
        acc.push(needed, inner + tol, inner, needed, None, || {
            format!("pair {p}: smoothed gradient map loses the required monotonicity")
        });
    }
    acc.note(format!(
        "smallest observed modulus {worst_modulus:.6} vs required {modulus:.6}"
    ));
    Ok(acc.finish())
}

/// Result of the two equilibrium solves behind [`verify_equilibrium_shift`].
#[derive(Debug, Clone)]
pub struct EquilibriumPair {
    pub raw: EquilibriumCertificate,
    pub smoothed: EquilibriumCertificate,
}

/// Largest radius for which the smoothed equilibrium distance bound is
/// certified.
pub fn equilibrium_radius_limit(game: &GameSpec) -> f64 {
    let k = game.constants();
    let n = game.n_players() as f64;
    let r = game.set().inner_radius();
    if game.n_players() == 1 || k.jacobian_lipschitz == 0.0 {
        r
    } else {
        r.min(k.alpha / (k.jacobian_lipschitz * n.powf(1.5)))
    }
}

/// Solves the raw equilibrium (full set) and the smoothed equilibrium
/// (shrunken set) and checks their distance against
/// `delta * ((1 + beta sqrt(n)/alpha) |x*| + beta n / alpha)`.
pub fn verify_equilibrium_shift(
    game: &GameSpec,
    delta: f64,
    seed: u64,
) -> Result<(CheckReport, EquilibriumPair)> {
    let limit = equilibrium_radius_limit(game);
    if !(delta > 0.0 && delta < limit && delta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "smoothing radius {delta} is outside the admissible range for the \
             equilibrium-shift bound; it must lie in (0, {limit:.6e})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = solve_equilibrium(game, 1.0, 0.0, DEFAULT_EQ_TOL, &mut rng)?;
    let smoothed = solve_equilibrium(game, 1.0 - delta, delta, DEFAULT_EQ_TOL, &mut rng)?;
    let measured = dist(&raw.point, &smoothed.point);
    let eq_norm = norm(&raw.point);
    let bound = delta * equilibrium_shift_constant(game, eq_norm);
    let bound_steep = delta * equilibrium_shift_constant_steep(game, eq_norm);
    let tol = EXACT_FLOOR * (1.0 + bound) + 10.0 * (raw.residual + smoothed.residual);
    let mut acc = ReportAcc::new("equilibrium-shift");
    acc.push(measured, bound + tol, measured, bound, None, || {
        "equilibria of the raw and smoothed games are farther apart than the shift bound".into()
    });
    acc.note(format!(
        "measured shift {measured:.6e}; bound {bound:.6e}; steeper-constant variant {bound_steep:.6e}"
    ));
    Ok((acc.finish(), EquilibriumPair { raw, smoothed }))
}

/// Power-law fit of the transient part of an error curve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub window: (u64, u64),
    pub points_used: usize,
}

/// Fits the log-log slope of the mean iterate error over its transient
/// window. The left cut is where the theoretical transient term first drops
/// to the largest squared error the shrunken feasible set can hold; before
/// that point the ceiling says nothing, because projection alone keeps the
/// error smaller, and early iterates typically ride the boundary. The left
/// cut therefore depends only on run constants, never on the measured
/// curve. The right cut is where the measured means reach twice
/// `plateau_level`, past which the radius-induced floor flattens the decay.
pub fn verify_rate(
    game: &GameSpec,
    curve: &ErrorCurve,
    delta: f64,
    x1_dist_sq: f64,
    eq_norm: f64,
    plateau_level: f64,
) -> Result<RateFit> {
    if !(plateau_level >= 0.0 && plateau_level.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "plateau level must be finite and nonnegative, got {plateau_level}"
        )));
    }
    let pts: Vec<(u64, f64)> = curve
        .ts
        .iter()
        .zip(&curve.iterate)
        .filter(|(&t, _)| t >= 1)
        .map(|(&t, m)| (t, m.mean))
        .collect();
    if pts.len() < 20 || (pts.last().unwrap().0 as f64) < 100.0 * pts[0].0 as f64 {
        return Err(Error::InvalidInput(
            "rate fitting needs at least 20 recorded times spanning two decades".into(),
        ));
    }
    // Transient term alone (shift constant zero); recorded step t is clock
    // t + 1, matching `verify_error_bound`.
    let transient = |t: u64| error_upper_bound_with_shift(game, delta, x1_dist_sq, t + 1, 0.0);
    let ceiling = ((1.0 - delta) * game.set().outer_radius() + eq_norm).powi(2);
    let t_lo = pts
        .iter()
        .map(|p| p.0)
        .find(|&t| transient(t) <= ceiling)
        .ok_or_else(|| {
            Error::InsufficientHorizon(
                "the transient term stays above the feasible-set ceiling at every recorded \
                 time; extend the horizon"
                    .into(),
            )
        })?;
    let t_hi = pts
        .iter()
        .find(|p| p.1 <= 2.0 * plateau_level)
        .map(|p| p.0)
        .unwrap_or(pts.last().unwrap().0);
    let window: Vec<(f64, f64)> = pts
        .iter()
        .filter(|p| p.0 >= t_lo && p.0 <= t_hi)
        .map(|&(t, m)| (t as f64, m))
        .collect();
    if window.len() < 5 || t_hi < 3 * t_lo {
        return Err(Error::InsufficientHorizon(format!(
            "transient window [{t_lo}, {t_hi}] is too short to fit a slope"
        )));
    }
    let xs: Vec<f64> = window.iter().map(|p| p.0.log10()).collect();
    let ys: Vec<f64> = window.iter().map(|p| p.1.max(f64::MIN_POSITIVE).log10()).collect();
    let (slope, _) = linear_fit(&xs, &ys).ok_or_else(|| {
        Error::InsufficientHorizon("transient window is degenerate; cannot fit a slope".into())
    })?;
    Ok(RateFit {
        slope,
        window: (t_lo, t_hi),
        points_used: window.len(),
    })
}

/// Checks every recorded mean of `curve` against the theoretical ceiling.
/// `x1_dist_sq` is the squared distance from the initial point to the
/// smoothed equilibrium; `eq_norm` is the raw equilibrium's norm. The
/// recorded step count `t` maps to clock `t + 1` in the ceiling.
pub fn verify_error_bound(
    game: &GameSpec,
    curve: &ErrorCurve,
    delta: f64,
    x1_dist_sq: f64,
    eq_norm: f64,
) -> Result<CheckReport> {
    if curve.ts.is_empty() {
        return Err(Error::InvalidInput("empty error curve".into()));
    }
    let mut acc = ReportAcc::new("error-bound");
    let mut worst_margin = f64::INFINITY;
    let steep = equilibrium_shift_constant_steep(game, eq_norm);
    let mut worst_ratio_steep = 0.0f64;
    for (&t, m) in curve.ts.iter().zip(&curve.iterate) {
        let bound = error_upper_bound(game, delta, x1_dist_sq, t + 1, eq_norm);
        let tol = 3.0 * m.se.unwrap_or(0.0);
        worst_margin = worst_margin.min(bound - m.mean);
        let steep_bound = error_upper_bound_with_shift(game, delta, x1_dist_sq, t + 1, steep);
        worst_ratio_steep = worst_ratio_steep.max(m.mean / (steep_bound + tol));
        acc.push(m.mean, bound + tol, m.mean, bound, m.se, || {
            format!("recorded step {t}: replicate-mean error exceeds the ceiling")
        });
    }
    acc.note(format!(
        "smallest ceiling margin {worst_margin:.6e} over {} recorded times; worst ratio against \
         the steeper-constant plateau {worst_ratio_steep:.3}",
        curve.ts.len()
    ));
    Ok(acc.finish())
}

/// Checks the accuracy-to-horizon scaling of the parameter chooser: halving
/// and quartering the accuracy multiplies the horizon by about 4 and 16,
/// and doubling the total dimension multiplies it by about 4.
pub fn verify_horizon_scaling(game: &GameSpec, epsilon: f64) -> Result<CheckReport> {
    let t1 = choose_parameters(game, epsilon, GuaranteeVariant::IterateOnly)?.horizon as f64;
    let t2 = choose_parameters(game, epsilon / 2.0, GuaranteeVariant::IterateOnly)?.horizon as f64;
    let t4 = choose_parameters(game, epsilon / 4.0, GuaranteeVariant::IterateOnly)?.horizon as f64;
    let mut acc = ReportAcc::new("horizon-scaling");
    let mut check_interval = |value: f64, lo: f64, hi: f64, what: &str| {
        let numer = (value / hi).max(lo / value);
        acc.push(numer, 1.0, value, hi, None, || {
            format!("{what} ratio {value:.3} falls outside [{lo}, {hi}]")
        });
    };
    check_interval(t2 / t1, 3.5, 4.5, "half-accuracy horizon");
    check_interval(t4 / t1, 14.0, 18.0, "quarter-accuracy horizon");
    let c = game.constants();
    let set = game.set();
    let d = game.d_total();
    let base = horizon_rule(
        c.alpha,
        c.beta,
        game.n_players(),
        d,
        set.outer_radius(),
        c.f_star,
        epsilon,
        GuaranteeVariant::IterateOnly,
    );
    let doubled = horizon_rule(
        c.alpha,
        c.beta,
        game.n_players(),
        2 * d,
        set.outer_radius(),
        c.f_star,
        epsilon,
        GuaranteeVariant::IterateOnly,
    );
    check_interval(doubled / base, 3.9, 4.1, "dimension-doubling horizon");
    acc.note(format!(
        "horizons {t1} / {t2} / {t4} at accuracies {epsilon} / {} / {}",
        epsilon / 2.0,
        epsilon / 4.0
    ));
    Ok(acc.finish())
}

/// Checks the terminal played-profile error of a run against its target
/// accuracy (for runs parameterized by the both-guarantees rule).
pub fn verify_played_error(curve: &ErrorCurve, epsilon: f64) -> Result<CheckReport> {
    if curve.ts.is_empty() {
        return Err(Error::InvalidInput("empty error curve".into()));
    }
    let terminal = curve.terminal_played();
    let tol = 3.0 * terminal.se.unwrap_or(0.0);
    let mut acc = ReportAcc::new("played-error");
    acc.push(
        terminal.mean,
        epsilon + tol,
        terminal.mean,
        epsilon,
        terminal.se,
        || "terminal played-profile error exceeds the target accuracy".into(),
    );
    acc.note(format!(
        "terminal played error {:.6e} vs target {epsilon:.6e}",
        terminal.mean
    ));
    Ok(acc.finish())
}

/// Checks a staged restart run: every stage's terminal error must meet its
/// guarantee, and past the first stage the errors must decay geometrically
/// at rate about `q^2` per stage (slope of log error against stage index).
pub fn verify_restart_decay(staged: &StagedErrorCurve, q: f64) -> Result<CheckReport> {
    if staged.stages.is_empty() {
        return Err(Error::InvalidInput("no stages to verify".into()));
    }
    let mut acc = ReportAcc::new("restart-decay");
    for (k, s) in staged.stages.iter().enumerate() {
        let tol = 3.0 * s.terminal.se.unwrap_or(0.0);
        acc.push(
            s.terminal.mean,
            s.epsilon_target + tol,
            s.terminal.mean,
            s.epsilon_target,
            s.terminal.se,
            || format!("stage {}: terminal error misses its guarantee", k + 1),
        );
    }
    // The first stage can be degenerate (its shrunken set may collapse to
    // the origin), so the geometric fit starts at stage 2.
    let usable: Vec<(f64, f64)> = staged
        .stages
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, s)| s.terminal.mean > 0.0)
        .map(|(k, s)| ((k + 1) as f64, s.terminal.mean.ln()))
        .collect();
    if usable.len() >= 3 {
        let xs: Vec<f64> = usable.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = usable.iter().map(|p| p.1).collect();
        let (slope, _) = linear_fit(&xs, &ys).expect("at least three distinct stages");
        let target = 2.0 * q.ln();
        let err = (slope - target).abs();
        acc.push(
            err,
            0.3 * target.abs(),
            slope,
            target,
            None,
            || {
                format!(
                    "stage decay slope {slope:.3} is not within 30% of the geometric rate {target:.3}"
                )
            },
        );
        acc.note(format!(
            "decay slope {slope:.4} vs geometric target {target:.4} over {} stages",
            usable.len()
        ));
    } else {
        acc.note("too few stages past the first for a decay-slope fit".into());
    }
    Ok(acc.finish())
}
