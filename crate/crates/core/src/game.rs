//! Game descriptions: per-player cost oracles over a product feasible set,
//! together with the declared regularity constants the algorithms consume.
//!
//! The built-in families are polynomial (linear-quadratic, optionally with a
//! quartic self-term), with all constants derived in closed form so that
//! verification can compare measured behavior against honest bounds.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::set::FeasibleSet;

pub type CostFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Declared regularity constants for a game.
///
/// * `alpha`: strong monotonicity modulus of the joint gradient map.
/// * `beta`: Lipschitz modulus of each player's own-gradient as a function
///   of the full profile.
/// * `jacobian_lipschitz`: Lipschitz modulus of the own-gradient Jacobians
///   (0 for affine gradient maps).
/// * `f_star`: squared uniform cost bound, `max_i sup_X |f_i|^2` (or a
///   certified upper bound of it).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GameConstants {
    pub alpha: f64,
    pub beta: f64,
    pub jacobian_lipschitz: f64,
    pub f_star: f64,
}

impl GameConstants {
    fn validate(&self) -> Result<()> {
        let chk = |v: f64, what: &str, strict: bool| {
            if !v.is_finite() || v < 0.0 || (strict && v == 0.0) {
                Err(Error::InvalidInput(format!(
                    "constant {what} must be {} and finite, got {v}",
                    if strict { "positive" } else { "nonnegative" }
                )))
            } else {
                Ok(())
            }
        };
        chk(self.alpha, "alpha", true)?;
        chk(self.beta, "beta", true)?;
        chk(self.jacobian_lipschitz, "jacobian_lipschitz", false)?;
        chk(self.f_star, "f_star", false)
    }
}

/// A complete game: oracles, feasible set, constants.
#[derive(Clone)]
pub struct GameSpec {
    name: String,
    set: FeasibleSet,
    costs: Vec<CostFn>,
    grads: Option<Vec<GradFn>>,
    constants: GameConstants,
    smoothing_invariant: bool,
}

impl fmt::Debug for GameSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameSpec")
            .field("name", &self.name)
            .field("dims", &self.set.dims())
            .field("constants", &self.constants)
            .field("has_grad_oracles", &self.grads.is_some())
            .field("smoothing_invariant", &self.smoothing_invariant)
            .finish()
    }
}

impl GameSpec {
    /// Assemble a game from raw oracles. `smoothing_invariant` should be set
    /// only when randomized smoothing provably leaves every own-gradient
    /// unchanged (affine gradient maps with mean-zero perturbations).
    pub fn from_parts(
        name: impl Into<String>,
        set: FeasibleSet,
        costs: Vec<CostFn>,
        grads: Option<Vec<GradFn>>,
        constants: GameConstants,
        smoothing_invariant: bool,
    ) -> Result<Self> {
        let n = set.n_players();
        if costs.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} cost oracles for {n} players",
                costs.len()
            )));
        }
        if let Some(g) = &grads {
            if g.len() != n {
                return Err(Error::InvalidInput(format!(
                    "{} gradient oracles for {n} players",
                    g.len()
                )));
            }
        }
        constants.validate()?;
        Ok(GameSpec {
            name: name.into(),
            set,
            costs,
            grads,
            constants,
            smoothing_invariant,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn constants(&self) -> GameConstants {
        self.constants
    }

    pub fn n_players(&self) -> usize {
        self.set.n_players()
    }

    pub fn dims(&self) -> &[usize] {
        self.set.dims()
    }

    pub fn total_dim(&self) -> usize {
        self.set.total_dim()
    }

    pub fn block(&self, i: usize) -> std::ops::Range<usize> {
        self.set.block(i)
    }

    /// Sum of player dimensions (the `d` entering the estimator bounds).
    pub fn d_total(&self) -> usize {
        self.total_dim()
    }

    pub fn has_grad_oracles(&self) -> bool {
        self.grads.is_some()
    }

    pub fn smoothing_invariant(&self) -> bool {
        self.smoothing_invariant
    }

    /// Copy of the game with its declared constants replaced, e.g. to apply
    /// a user-supplied override or to stress-test the certification checks
    /// against a wrong declaration.
    pub fn with_constants(&self, constants: GameConstants) -> Result<GameSpec> {
        constants.validate()?;
        let mut game = self.clone();
        game.constants = constants;
        Ok(game)
    }

    /// Player `i`'s cost at the joint profile `x`.
    pub fn cost(&self, i: usize, x: &[f64]) -> f64 {
        (self.costs[i])(x)
    }

    /// Player `i`'s own-gradient at `x`, via the gradient oracle when
    /// present, otherwise central finite differences on the cost.
    pub fn grad_block(&self, i: usize, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dims()[i]);
        if let Some(grads) = &self.grads {
            (grads[i])(x, out);
            return;
        }
        let mut probe = x.to_vec();
        for (k, slot) in self.block(i).zip(out.iter_mut()) {
            let h = 6e-6 * (1.0 + x[k].abs());
            probe[k] = x[k] + h;
            let up = self.cost(i, &probe);
            probe[k] = x[k] - h;
            let down = self.cost(i, &probe);
            probe[k] = x[k];
            *slot = (up - down) / (2.0 * h);
        }
    }

    /// The joint gradient map: every player's own-gradient stacked.
    pub fn joint_gradient(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.total_dim());
        for i in 0..self.n_players() {
            let range = self.block(i);
            // Split via raw indices to satisfy the borrow checker.
            let (start, end) = (range.start, range.end);
            self.grad_block(i, x, &mut out[start..end]);
        }
    }
}

/// Parameters of the polynomial family. The cost of player `i` is
///
/// ```text
/// f_i(x) = 1/2 x_i' M_ii x_i + x_i' (sum_{j != i} M_ij x_j + b_i)
///          + c_i ||x_i||^4 + s_i
/// ```
///
/// so the joint gradient map is `x -> M x + b` plus the monotone quartic
/// term `4 c_i ||x_i||^2 x_i` per block. Diagonal blocks of `M` must be
/// symmetric for this correspondence to hold.
#[derive(Debug, Clone)]
pub struct PolyFamily {
    pub name: String,
    /// Row-major `d x d` interaction matrix.
    pub matrix: Vec<f64>,
    /// Joint offset `b` of length `d`.
    pub offset: Vec<f64>,
    /// Per-player quartic coefficients (all zero for the affine family).
    pub quartic: Vec<f64>,
    /// Per-player constant cost shifts.
    pub shift: Vec<f64>,
    pub set: FeasibleSet,
}

impl PolyFamily {
    /// Affine-gradient family (quartic coefficients zero).
    pub fn linear_quadratic(
        name: impl Into<String>,
        matrix: Vec<f64>,
        offset: Vec<f64>,
        shift: Vec<f64>,
        set: FeasibleSet,
    ) -> Self {
        let n = set.n_players();
        PolyFamily {
            name: name.into(),
            matrix,
            offset,
            quartic: vec![0.0; n],
            shift,
            set,
        }
    }

    pub fn build(self) -> Result<GameSpec> {
        let d = self.set.total_dim();
        let n = self.set.n_players();
        if self.matrix.len() != d * d {
            return Err(Error::InvalidInput(format!(
                "matrix has {} entries, expected {}",
                self.matrix.len(),
                d * d
            )));
        }
        if self.offset.len() != d || self.quartic.len() != n || self.shift.len() != n {
            return Err(Error::InvalidInput(
                "offset/quartic/shift lengths must match the game dimensions".into(),
            ));
        }
        for (v, what) in self
            .matrix
            .iter()
            .map(|v| (*v, "matrix"))
            .chain(self.offset.iter().map(|v| (*v, "offset")))
            .chain(self.shift.iter().map(|v| (*v, "shift")))
        {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite {what} entry {v}")));
            }
        }
        for &c in &self.quartic {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "quartic coefficients must be nonnegative, got {c}"
                )));
            }
        }
        let m = DMatrix::from_row_slice(d, d, &self.matrix);
        for i in 0..n {
            let r = self.set.block(i);
            let block = m.view((r.start, r.start), (r.len(), r.len()));
            if (&block - block.transpose()).amax() > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "diagonal block {i} of the interaction matrix must be symmetric"
                )));
            }
        }

        let constants = derive_constants(&m, &self.offset, &self.quartic, &self.shift, &self.set)?;
        let smoothing_invariant = self.quartic.iter().all(|&c| c == 0.0);

        let matrix = Arc::new(self.matrix);
        let offset = Arc::new(self.offset);
        let blocks: Vec<(usize, usize)> = (0..n)
            .map(|i| {
                let r = self.set.block(i);
                (r.start, r.end)
            })
            .collect();

        let mut costs: Vec<CostFn> = Vec::with_capacity(n);
        let mut grads: Vec<GradFn> = Vec::with_capacity(n);
        for i in 0..n {
            let (lo, hi) = blocks[i];
            let (mtx, off) = (Arc::clone(&matrix), Arc::clone(&offset));
            let (c, s) = (self.quartic[i], self.shift[i]);
            costs.push(Arc::new(move |x: &[f64]| {
                // f_i = x_i . (Mx)_i - 1/2 x_i' M_ii x_i + x_i . b_i
                //       + c ||x_i||^4 + s
                let mut val = s;
                let mut sq = 0.0;
                for k in lo..hi {
                    let row = &mtx[k * x.len()..(k + 1) * x.len()];
                    let full: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
                    let own: f64 = row[lo..hi]
                        .iter()
                        .zip(&x[lo..hi])
                        .map(|(a, b)| a * b)
                        .sum();
                    val += x[k] * (full - 0.5 * own + off[k]);
                    sq += x[k] * x[k];
                }
                val + c * sq * sq
            }));
            let (mtx, off) = (Arc::clone(&matrix), Arc::clone(&offset));
            grads.push(Arc::new(move |x: &[f64], out: &mut [f64]| {
                let sq: f64 = x[lo..hi].iter().map(|v| v * v).sum();
                for (slot, k) in out.iter_mut().zip(lo..hi) {
                    let row = &mtx[k * x.len()..(k + 1) * x.len()];
                    let full: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
                    *slot = full + off[k] + 4.0 * c * sq * x[k];
                }
            }));
        }

        GameSpec::from_parts(
            self.name,
            self.set,
            costs,
            Some(grads),
            constants,
            smoothing_invariant,
        )
    }
}

fn derive_constants(
    m: &DMatrix<f64>,
    offset: &[f64],
    quartic: &[f64],
    shift: &[f64],
    set: &FeasibleSet,
) -> Result<GameConstants> {
    let n = set.n_players();

    // alpha: smallest eigenvalue of the symmetric part. The quartic terms
    // are monotone and can only help, so this is a valid modulus.
    let sym = (m + m.transpose()) * 0.5;
    let alpha = sym
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput(format!(
            "interaction matrix is not strongly monotone: lambda_min = {alpha:.6e}"
        )));
    }

    let mut beta = 0.0f64;
    let mut lip_jac = 0.0f64;
    let mut max_abs_cost = 0.0f64;
    for i in 0..n {
        let r = set.block(i);
        let rho = set.player(i).outer_radius();
        let row_block = m.view((r.start, 0), (r.len(), m.ncols()));
        let row_norm = row_block.clone_owned().svd(false, false).singular_values[0];
        beta = beta.max(row_norm + 12.0 * quartic[i] * rho * rho);
        lip_jac = lip_jac.max(24.0 * quartic[i] * rho);

        // Coupling amplitude felt by player i from the other blocks.
        let mut coupling = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let rj = set.block(j);
            let blk = m.view((r.start, rj.start), (r.len(), rj.len()));
            coupling +=
                blk.clone_owned().svd(false, false).singular_values[0] * set.player(j).outer_radius();
        }
        let b_i = &offset[r.clone()];
        let b_norm = b_i.iter().map(|v| v * v).sum::<f64>().sqrt();

        let bound = if r.len() == 1 {
            let own = m[(r.start, r.start)];
            let (lo, hi) = scalar_cost_range(own, coupling + b_norm, quartic[i], rho);
            (lo + shift[i]).abs().max((hi + shift[i]).abs())
        } else {
            let own_norm = sym
                .view((r.start, r.start), (r.len(), r.len()))
                .clone_owned()
                .svd(false, false)
                .singular_values[0];
            0.5 * own_norm * rho * rho
                + rho * (coupling + b_norm)
                + quartic[i] * rho.powi(4)
                + shift[i].abs()
        };
        max_abs_cost = max_abs_cost.max(bound);
    }

    Ok(GameConstants {
        alpha,
        beta,
        jacobian_lipschitz: lip_jac,
        f_star: max_abs_cost * max_abs_cost,
    })
}

/// Exact range of `u -> 1/2 a u^2 + c u^4 + q u` over `|u| <= rho`, where the
/// linear coefficient `q` itself ranges over `[-gamma, gamma]`. Used for
/// one-dimensional players, where the cost bound can be made tight.
fn scalar_cost_range(a: f64, gamma: f64, c: f64, rho: f64) -> (f64, f64) {
    let hi = 0.5 * a * rho * rho + c * rho.powi(4) + gamma * rho;
    // Minimum of h(u) = 1/2 a u^2 + c u^4 - gamma u on [0, rho]; h' is
    // increasing, so bisect for its root.
    let h = |u: f64| 0.5 * a * u * u + c * u.powi(4) - gamma * u;
    let dh = |u: f64| a * u + 4.0 * c * u.powi(3) - gamma;
    let lo = if dh(rho) <= 0.0 {
        h(rho)
    } else {
        let (mut l, mut r) = (0.0, rho);
        for _ in 0..200 {
            let mid = 0.5 * (l + r);
            if dh(mid) < 0.0 {
                l = mid;
            } else {
                r = mid;
            }
        }
        h(0.5 * (l + r))
    };
    (lo.min(0.0), hi)
}

/// Constant shift that centers a `[lo, hi]` cost range around zero.
pub fn centering_shift(lo: f64, hi: f64) -> f64 {
    -0.5 * (lo + hi)
}

/// Exact cost range of a one-dimensional player in the polynomial family,
/// before any shift. Exposed so callers can build centered instances.
pub fn scalar_player_cost_range(
    own: f64,
    coupling_amplitude: f64,
    quartic: f64,
    rho: f64,
) -> (f64, f64) {
    scalar_cost_range(own, coupling_amplitude, quartic, rho)
}
