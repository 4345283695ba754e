//! Small statistical helpers shared by the estimators and the verification
//! suite: streaming mean/variance, standard errors, log-log regression, and
//! checkpoint grids for long runs.

use serde::{Deserialize, Serialize};

/// Streaming mean and variance (Welford). Numerically stable for the long
/// accumulations used by the Monte Carlo oracles.
#[derive(Debug, Clone, Default)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; `None` until two observations arrive.
    pub fn variance(&self) -> Option<f64> {
        if self.count < 2 {
            None
        } else {
            Some(self.m2 / (self.count - 1) as f64)
        }
    }

    /// Standard error of the mean; `None` until two observations arrive.
    pub fn standard_error(&self) -> Option<f64> {
        self.variance()
            .map(|v| (v / self.count as f64).max(0.0).sqrt())
    }

    /// Exact merge of two accumulators (Chan's parallel update).
    pub fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let n1 = self.count as f64;
        let n2 = other.count as f64;
        let delta = other.mean - self.mean;
        let total = n1 + n2;
        self.mean += delta * n2 / total;
        self.m2 += other.m2 + delta * delta * n1 * n2 / total;
        self.count += other.count;
    }
}

/// Mean together with its standard error over replicates. The standard error
/// is absent when only one replicate was observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: Option<f64>,
}

impl MeanSe {
    pub fn from_samples(samples: &[f64]) -> Self {
        let mut acc = Welford::new();
        for &s in samples {
            acc.push(s);
        }
        Self::from_welford(&acc)
    }

    pub fn from_welford(acc: &Welford) -> Self {
        MeanSe {
            mean: acc.mean(),
            se: acc.standard_error(),
        }
    }
}

/// Least-squares slope and intercept of y against x.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Slope of log10(y) against log10(t). Points with non-positive y or t are
/// skipped; returns `None` if fewer than two usable points remain.
pub fn log_log_slope(ts: &[f64], ys: &[f64]) -> Option<f64> {
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for (&t, &y) in ts.iter().zip(ys) {
        if t > 0.0 && y > 0.0 {
            xs.push(t.log10());
            zs.push(y.log10());
        }
    }
    linear_fit(&xs, &zs).map(|(s, _)| s)
}

/// Recording grid for a run of `horizon` steps. `every` records each k-th
/// step; `Log` places roughly `per_decade` checkpoints per decade. Step 0
/// (the start point) and the final step are always included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordGrid {
    Every(u64),
    Log { per_decade: u32 },
}

impl RecordGrid {
    /// Default policy: dense recording for short runs, logarithmic for long.
    pub fn default_for(horizon: u64) -> Self {
        if horizon <= 10_000 {
            RecordGrid::Every(1)
        } else {
            RecordGrid::Log { per_decade: 20 }
        }
    }

    /// Sorted, deduplicated checkpoint steps in `[0, horizon]`.
    pub fn checkpoints(&self, horizon: u64) -> Vec<u64> {
        let mut ts = vec![0];
        match *self {
            RecordGrid::Every(k) => {
                let k = k.max(1);
                let mut t = k;
                while t < horizon {
                    ts.push(t);
                    t += k;
                }
            }
            RecordGrid::Log { per_decade } => {
                let per_decade = per_decade.max(1) as f64;
                ts.push(1);
                let mut exp = 0.0;
                loop {
                    exp += 1.0 / per_decade;
                    let t = 10f64.powf(exp).round() as u64;
                    if t >= horizon {
                        break;
                    }
                    ts.push(t);
                }
            }
        }
        if horizon > 0 {
            ts.push(horizon);
        }
        ts.sort_unstable();
        ts.dedup();
        ts
    }
}
