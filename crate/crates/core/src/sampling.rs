//! Random direction and perturbation samplers. All take an explicit RNG so
//! that every downstream artifact is reproducible from a seed.

use rand::Rng;
use rand_distr::StandardNormal;

/// Uniform sample from the unit sphere in `dim` dimensions: a normalized
/// Gaussian vector, redrawn in the (measure-zero) case of a tiny norm.
pub fn sample_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R, out: &mut [f64]) {
    debug_assert_eq!(out.len(), dim);
    loop {
        let mut sq = 0.0;
        for slot in out.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *slot = g;
            sq += g * g;
        }
        let norm = sq.sqrt();
        if norm > 1e-12 {
            for slot in out.iter_mut() {
                *slot /= norm;
            }
            return;
        }
    }
}

/// Uniform sample from the closed unit ball: sphere direction scaled by
/// U^(1/dim).
pub fn sample_ball<R: Rng + ?Sized>(dim: usize, rng: &mut R, out: &mut [f64]) {
    sample_sphere(dim, rng, out);
    let u: f64 = rng.gen::<f64>();
    let scale = u.powf(1.0 / dim as f64);
    for slot in out.iter_mut() {
        *slot *= scale;
    }
}

/// Per-player unit directions stacked into a joint vector: block `i` is an
/// independent uniform draw from player `i`'s unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSample {
    pub v: Vec<f64>,
}

pub fn sample_directions<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> DirectionSample {
    let total: usize = dims.iter().sum();
    let mut v = vec![0.0; total];
    let mut lo = 0;
    for &d in dims {
        sample_sphere(d, rng, &mut v[lo..lo + d]);
        lo += d;
    }
    DirectionSample { v }
}

/// The mixed perturbation driving the smoothed cost of a focal player:
/// the focal block is uniform in its unit ball, every other block uniform
/// on its unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSmoothingSample {
    pub focal: usize,
    pub w: Vec<f64>,
}

pub fn sample_mixed<R: Rng + ?Sized>(
    dims: &[usize],
    focal: usize,
    rng: &mut R,
) -> MixedSmoothingSample {
    debug_assert!(focal < dims.len());
    let total: usize = dims.iter().sum();
    let mut w = vec![0.0; total];
    let mut lo = 0;
    for (i, &d) in dims.iter().enumerate() {
        if i == focal {
            sample_ball(d, rng, &mut w[lo..lo + d]);
        } else {
            sample_sphere(d, rng, &mut w[lo..lo + d]);
        }
        lo += d;
    }
    MixedSmoothingSample { focal, w }
}

/// Uniform sample from a centered ball of the given radius in `dim`
/// dimensions; used for interior probe points.
pub fn sample_in_ball<R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    sample_ball(dim, rng, &mut out);
    for v in &mut out {
        *v *= radius;
    }
    out
}
