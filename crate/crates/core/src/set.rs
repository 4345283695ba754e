//! Feasible-set geometry. Each player owns a convex compact set containing
//! the origin; the joint set is their product. Projections are exact and
//! cheap for the supported shapes, and remain exact under uniform scaling
//! because every set contains 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single player's action set, centered at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PlayerSet {
    /// Euclidean ball of the given radius.
    Ball { radius: f64 },
    /// Axis-aligned box `[-w_k, w_k]` per coordinate.
    Box { half_widths: Vec<f64> },
    /// Intersection of a ball and a box.
    BallBox { radius: f64, half_widths: Vec<f64> },
}

impl PlayerSet {
    pub fn dim(&self) -> Option<usize> {
        match self {
            PlayerSet::Ball { .. } => None,
            PlayerSet::Box { half_widths } | PlayerSet::BallBox { half_widths, .. } => {
                Some(half_widths.len())
            }
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{what} must be positive and finite, got {v}")))
            }
        };
        match self {
            PlayerSet::Ball { radius } => positive(*radius, "ball radius")?,
            PlayerSet::Box { half_widths } | PlayerSet::BallBox { half_widths, .. } => {
                if half_widths.len() != dim {
                    return Err(Error::InvalidInput(format!(
                        "box has {} half-widths but the player has dimension {dim}",
                        half_widths.len()
                    )));
                }
                for &w in half_widths {
                    positive(w, "box half-width")?;
                }
                if let PlayerSet::BallBox { radius, .. } = self {
                    positive(*radius, "ball radius")?;
                }
            }
        }
        Ok(())
    }

    /// Largest rho with `rho * B` inside the set.
    pub fn inner_radius(&self) -> f64 {
        match self {
            PlayerSet::Ball { radius } => *radius,
            PlayerSet::Box { half_widths } => {
                half_widths.iter().cloned().fold(f64::INFINITY, f64::min)
            }
            PlayerSet::BallBox { radius, half_widths } => half_widths
                .iter()
                .cloned()
                .fold(*radius, f64::min),
        }
    }

    /// Smallest rho with the set inside `rho * B`.
    pub fn outer_radius(&self) -> f64 {
        match self {
            PlayerSet::Ball { radius } => *radius,
            PlayerSet::Box { half_widths } => {
                half_widths.iter().map(|w| w * w).sum::<f64>().sqrt()
            }
            PlayerSet::BallBox { radius, half_widths } => {
                radius.min(half_widths.iter().map(|w| w * w).sum::<f64>().sqrt())
            }
        }
    }

    /// Euclidean projection of `z` onto `scale * set`, written into `out`.
    pub fn project(&self, z: &[f64], scale: f64, out: &mut [f64]) {
        debug_assert_eq!(z.len(), out.len());
        match self {
            PlayerSet::Ball { radius } => {
                let rho = radius * scale;
                let norm = norm2(z);
                let factor = if norm > rho { rho / norm } else { 1.0 };
                for (o, &v) in out.iter_mut().zip(z) {
                    *o = v * factor;
                }
            }
            PlayerSet::Box { half_widths } => {
                for ((o, &v), &w) in out.iter_mut().zip(z).zip(half_widths) {
                    *o = v.clamp(-w * scale, w * scale);
                }
            }
            PlayerSet::BallBox { radius, half_widths } => {
                let rho = radius * scale;
                clamp_into(z, half_widths, scale, out);
                if norm2(out) <= rho {
                    return;
                }
                // KKT for min ||x-z||^2 s.t. box and ||x|| <= rho: the
                // solution is clamp(z / (1 + lam)) with lam >= 0 chosen so
                // the norm equals rho. The norm is decreasing in lam, so
                // bisection is exact up to floating-point resolution.
                let mut lo = 0.0f64;
                let mut hi = norm2(z) / rho; // norm(z/(1+hi)) <= rho already
                for _ in 0..200 {
                    let lam = 0.5 * (lo + hi);
                    let shrink = 1.0 / (1.0 + lam);
                    for ((o, &v), &w) in out.iter_mut().zip(z).zip(half_widths) {
                        *o = (v * shrink).clamp(-w * scale, w * scale);
                    }
                    if norm2(out) > rho {
                        lo = lam;
                    } else {
                        hi = lam;
                    }
                    if hi - lo < 1e-16 * (1.0 + hi) {
                        break;
                    }
                }
                let shrink = 1.0 / (1.0 + hi);
                for ((o, &v), &w) in out.iter_mut().zip(z).zip(half_widths) {
                    *o = (v * shrink).clamp(-w * scale, w * scale);
                }
            }
        }
    }

    /// Membership in `scale * set` up to tolerance `tol`.
    pub fn contains(&self, z: &[f64], scale: f64, tol: f64) -> bool {
        match self {
            PlayerSet::Ball { radius } => norm2(z) <= radius * scale + tol,
            PlayerSet::Box { half_widths } => z
                .iter()
                .zip(half_widths)
                .all(|(&v, &w)| v.abs() <= w * scale + tol),
            PlayerSet::BallBox { radius, half_widths } => {
                norm2(z) <= radius * scale + tol
                    && z.iter()
                        .zip(half_widths)
                        .all(|(&v, &w)| v.abs() <= w * scale + tol)
            }
        }
    }
}

fn clamp_into(z: &[f64], half_widths: &[f64], scale: f64, out: &mut [f64]) {
    for ((o, &v), &w) in out.iter_mut().zip(z).zip(half_widths) {
        *o = v.clamp(-w * scale, w * scale);
    }
}

fn norm2(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Product of per-player sets, with the inner/outer radii of the joint set:
/// `r B` sits inside the product and the product sits inside `R B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSet {
    players: Vec<PlayerSet>,
    dims: Vec<usize>,
    offsets: Vec<usize>,
    r: f64,
    big_r: f64,
}

impl FeasibleSet {
    pub fn new(players: Vec<PlayerSet>, dims: Vec<usize>) -> Result<Self> {
        if players.is_empty() || players.len() != dims.len() {
            return Err(Error::InvalidInput(format!(
                "need one set per player: {} sets, {} dimensions",
                players.len(),
                dims.len()
            )));
        }
        for (i, (set, &d)) in players.iter().zip(&dims).enumerate() {
            if d == 0 {
                return Err(Error::InvalidInput(format!("player {i} has dimension 0")));
            }
            set.validate(d)
                .map_err(|e| Error::InvalidInput(format!("player {i}: {e}")))?;
        }
        let mut offsets = Vec::with_capacity(dims.len() + 1);
        let mut acc = 0;
        for &d in &dims {
            offsets.push(acc);
            acc += d;
        }
        offsets.push(acc);
        // The largest joint ball inside the product: any point with joint
        // norm <= min_i r_i has every block inside its player's set.
        let r = players
            .iter()
            .map(PlayerSet::inner_radius)
            .fold(f64::INFINITY, f64::min);
        let big_r = players
            .iter()
            .map(|s| s.outer_radius().powi(2))
            .sum::<f64>()
            .sqrt();
        Ok(FeasibleSet {
            players,
            dims,
            offsets,
            r,
            big_r,
        })
    }

    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn block(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn player(&self, i: usize) -> &PlayerSet {
        &self.players[i]
    }

    /// Inner radius: `r B` is contained in the product set.
    pub fn inner_radius(&self) -> f64 {
        self.r
    }

    /// Outer radius: the product set is contained in `R B`.
    pub fn outer_radius(&self) -> f64 {
        self.big_r
    }

    /// Smallest per-player inner radius. When this is at least 1, a point of
    /// `(1-delta) X` perturbed by `delta` times a per-player unit vector
    /// stays inside `X` for any `delta` in (0, 1).
    pub fn min_player_inner_radius(&self) -> f64 {
        self.players
            .iter()
            .map(PlayerSet::inner_radius)
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether unit-direction probes from `(1 - delta) X` are guaranteed to
    /// stay feasible by convexity alone.
    pub fn probe_feasibility_guaranteed(&self) -> bool {
        self.min_player_inner_radius() >= 1.0
    }

    /// Euclidean projection onto `scale * X`, blockwise per player. Scale 0
    /// collapses the set to the origin (every player set contains 0).
    pub fn project(&self, z: &[f64], scale: f64, out: &mut [f64]) -> Result<()> {
        self.check_dim(z)?;
        if !(scale >= 0.0 && scale <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "projection scale must lie in [0, 1], got {scale}"
            )));
        }
        for (i, set) in self.players.iter().enumerate() {
            let range = self.block(i);
            set.project(&z[range.clone()], scale, &mut out[range]);
        }
        Ok(())
    }

    /// Membership in `scale * X` with tolerance `tol`.
    pub fn contains(&self, z: &[f64], scale: f64, tol: f64) -> bool {
        z.len() == self.total_dim()
            && self
                .players
                .iter()
                .enumerate()
                .all(|(i, set)| set.contains(&z[self.block(i)], scale, tol))
    }

    pub fn check_dim(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.total_dim() {
            return Err(Error::InvalidInput(format!(
                "point has dimension {}, set has dimension {}",
                z.len(),
                self.total_dim()
            )));
        }
        Ok(())
    }
}
