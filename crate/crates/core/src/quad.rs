//! Quadrature helpers: composite Gauss-Legendre for closed-form integrands and
//! composite Simpson for uniformly sampled data.

use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

/// Number of nodes in each Gauss-Legendre panel.
pub const GL_ORDER: usize = 20;

/// Nodes and weights of an `N`-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre<const N: usize> {
    pub nodes: [f64; N],
    pub weights: [f64; N],
}

impl<const N: usize> GaussLegendre<N> {
    pub fn new() -> Self {
        let mut nodes = [0.0; N];
        let mut weights = [0.0; N];
        let n = N as f64;
        for i in 0..N.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_N.
            let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(N, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(N, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[N - 1 - i] = x;
            weights[i] = w;
            weights[N - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]` split into `panels` equal panels.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + width * p as f64;
            let mid = lo + 0.5 * width;
            let half = 0.5 * width;
            let mut acc = 0.0;
            for (x, w) in self.nodes.iter().zip(self.weights.iter()) {
                acc += w * f(mid + half * x);
            }
            total += acc * half;
        }
        total
    }
}

impl<const N: usize> Default for GaussLegendre<N> {
    fn default() -> Self {
        Self::new()
    }
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Simpson rule over uniformly spaced samples. Falls back to the
/// trapezoid rule on the last interval when the number of intervals is odd.
pub fn simpson(samples: &[f64], dx: f64) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    let intervals = n - 1;
    let even = intervals - intervals % 2;
    let mut acc = 0.0;
    let mut i = 0;
    while i < even {
        acc += samples[i] + 4.0 * samples[i + 1] + samples[i + 2];
        i += 2;
    }
    let mut total = acc * dx / 3.0;
    if even < intervals {
        total += 0.5 * dx * (samples[intervals - 1] + samples[intervals]);
    }
    total
}

/// Simpson's rule applied to `f(i)` for `i in 0..=intervals` without
/// materialising the samples.
pub fn simpson_by<F: FnMut(usize) -> f64>(intervals: usize, dx: f64, mut f: F) -> f64 {
    if intervals == 0 {
        return 0.0;
    }
    let even = intervals - intervals % 2;
    let mut acc = 0.0;
    let mut i = 0;
    while i < even {
        acc += f(i) + 4.0 * f(i + 1) + f(i + 2);
        i += 2;
    }
    let mut total = acc * dx / 3.0;
    if even < intervals {
        total += 0.5 * dx * (f(intervals - 1) + f(intervals));
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::<GL_ORDER>::new();
        let weight_sum: f64 = gl.weights.iter().sum();
        assert!((weight_sum - 2.0).abs() < 1e-14);
        // degree 39 is exact for a 20-point rule
        let v = gl.integrate(-1.0, 1.0, 1, |x| x.powi(38));
        assert!((v - 2.0 / 39.0).abs() < 1e-14, "{v}");
    }

    #[test]
    fn gauss_legendre_sin4_normalization() {
        let gl = GaussLegendre::<GL_ORDER>::new();
        let v = gl.integrate(0.0, PI, 4, |t| t.sin().powi(4));
        assert!((v - 3.0 * PI / 8.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_handles_odd_interval_counts() {
        let dx = 0.1;
        let even: alloc::vec::Vec<f64> = (0..=10).map(|i| (i as f64 * dx).powi(3)).collect();
        assert!((simpson(&even, dx) - 0.25).abs() < 1e-14);
        let odd: alloc::vec::Vec<f64> = (0..=3).map(|i| i as f64).collect();
        assert!((simpson(&odd, 1.0) - 4.5).abs() < 1e-14);
        assert_eq!(simpson(&[1.0], 1.0), 0.0);
    }
}
