//! Gauss-Legendre quadrature on [-1, 1], with an adaptive panel-splitting
//! driver. Used by the exact smoothed-gradient oracle, where integrands are
//! smooth (typically polynomial) and high accuracy is cheap.

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess for the i-th positive root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_with_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

/// Legendre polynomial P_n(x) and its derivative via the three-term
/// recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn panel<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (&x, &w) in nodes.iter().zip(weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Adaptive integral of `f` over `[a, b]`: each panel is accepted when a
/// 16-point and a split 2x16-point estimate agree to `tol` (absolute, with a
/// matching relative term). Panics are avoided; excessive recursion falls
/// back to the refined estimate.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64) -> f64 {
    let (nodes, weights) = gauss_legendre(16);
    fn go<F: FnMut(f64) -> f64>(
        f: &mut F,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
        nodes: &[f64],
        weights: &[f64],
    ) -> f64 {
        let mid = 0.5 * (a + b);
        let left = panel(f, a, mid, nodes, weights);
        let right = panel(f, mid, b, nodes, weights);
        let refined = left + right;
        if (refined - whole).abs() <= tol * (1.0 + refined.abs()) || depth >= 24 {
            refined
        } else {
            go(f, a, mid, left, 0.5 * tol, depth + 1, nodes, weights)
                + go(f, mid, b, right, 0.5 * tol, depth + 1, nodes, weights)
        }
    }
    let whole = panel(f, a, b, &nodes, &weights);
    go(f, a, b, whole, tol, 0, &nodes, &weights)
}
