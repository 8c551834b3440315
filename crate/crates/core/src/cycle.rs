//! One-cycle integration of Hill's equation and the first-order machinery
//! built on top of it.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::model::{BarrierShape, HillParams};
use crate::ode::{Dop853, OdeSystem};

/// |h₀| and |g₀| below this make the first-order expansion degenerate.
pub const BASE_DEGENERACY: f64 = 1e-6;
/// |cos φ| below this switches the small-q `g` and the J factor to their
/// limiting forms.
pub const COS_PHI_DEGENERACY: f64 = 1e-6;
/// Distance in λ from (k + ½)² inside which the limiting J is used verbatim.
pub const LHOPITAL_WINDOW: f64 = 1e-12;
/// Intervals of the dense sample grid carried by [`CycleSolution`].
pub const SAMPLE_INTERVALS: usize = 2048;

/// Principal solutions of one cycle and their moments.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleSolution {
    /// y₁(π)
    pub h: f64,
    /// ẏ₁(π)
    pub g: f64,
    /// ẏ₂(π)
    pub h2: f64,
    /// y₂(π)
    pub y2pi: f64,
    pub i1: f64,
    pub i2: f64,
    pub j1: f64,
    pub j2: f64,
    /// (y₁, ẏ₁, y₂, ẏ₂) at t = iπ/2048, i = 0..=2048. For the delta barrier
    /// the derivatives are right limits at π/2.
    pub sampled_y0: Vec<[f64; 4]>,
}

impl CycleSolution {
    /// h·ẏ₂(π) − g·y₂(π); unity for an exact solution.
    pub fn wronskian(&self) -> f64 {
        self.h * self.h2 - self.g * self.y2pi
    }

    /// |y₁(π) − ẏ₂(π)|; zero for a symmetric barrier.
    pub fn symmetry_residual(&self) -> f64 {
        (self.h - self.h2).abs()
    }

    pub fn sample_step(&self) -> f64 {
        PI / (self.sampled_y0.len() - 1) as f64
    }
}

struct Hill<'a> {
    lambda: f64,
    q: f64,
    shape: &'a BarrierShape,
}

impl OdeSystem<8> for Hill<'_> {
    fn rhs(&self, t: f64, s: &[f64; 8], d: &mut [f64; 8]) {
        let qh = self.shape.value_unchecked(t);
        let k = self.lambda + self.q * qh;
        d[0] = s[1];
        d[1] = -k * s[0];
        d[2] = s[3];
        d[3] = -k * s[2];
        d[4] = s[0] * s[0];
        d[5] = s[2] * s[2];
        d[6] = qh * s[0] * s[0];
        d[7] = qh * s[2] * s[2];
    }
}

impl OdeSystem<2> for Hill<'_> {
    fn rhs(&self, t: f64, s: &[f64; 2], d: &mut [f64; 2]) {
        let k = self.lambda + self.q * self.shape.value_unchecked(t);
        d[0] = s[1];
        d[1] = -k * s[0];
    }
}

fn check_inputs(params: &HillParams, tol: f64) -> Result<()> {
    if !(params.lambda > 0.0) || !params.lambda.is_finite() {
        return Err(Error::Domain { what: "lambda", value: params.lambda });
    }
    if !params.q.is_finite() {
        return Err(Error::Domain { what: "q", value: params.q });
    }
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(Error::Domain { what: "integrator tolerance", value: tol });
    }
    Ok(())
}

/// Free oscillation: advances (y, ẏ) by `dt` at frequency `w`.
fn trig_step(y: f64, v: f64, w: f64, dt: f64) -> (f64, f64) {
    let (s, c) = (w * dt).sin_cos();
    (y * c + v / w * s, -y * w * s + v * c)
}

/// ∫₀^T (A cos wt + B sin wt)² dt
fn trig_square_integral(a: f64, b: f64, w: f64, big_t: f64) -> f64 {
    let s2 = (2.0 * w * big_t).sin() / (4.0 * w);
    let c2 = (1.0 - (2.0 * w * big_t).cos()) / (2.0 * w);
    a * a * (0.5 * big_t + s2) + b * b * (0.5 * big_t - s2) + a * b * c2
}

/// Integrates one cycle for both principal solutions, carrying the moment
/// quadratures I₁, I₂, J₁, J₂ in the state.
pub fn integrate_cycle(params: &HillParams, shape: &BarrierShape, tol: f64) -> Result<CycleSolution> {
    check_inputs(params, tol)?;
    if shape.is_delta() {
        return Ok(delta_cycle(params.lambda, params.q));
    }
    let sys = Hill { lambda: params.lambda, q: params.q, shape };
    let mut samples = Vec::with_capacity(SAMPLE_INTERVALS + 1);
    let end = Dop853::new(tol).integrate_dense(
        &sys,
        0.0,
        PI,
        [1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        shape.breakpoints(),
        SAMPLE_INTERVALS,
        |_, s: &[f64; 8]| samples.push([s[0], s[1], s[2], s[3]]),
    )?;
    Ok(CycleSolution {
        h: end[0],
        g: end[1],
        h2: end[3],
        y2pi: end[2],
        i1: end[4],
        i2: end[5],
        j1: end[6],
        j2: end[7],
        sampled_y0: samples,
    })
}

fn delta_cycle(lambda: f64, q: f64) -> CycleSolution {
    let w = lambda.sqrt();
    let half = FRAC_PI_2;
    // left half, then the jump ẏ → ẏ − q y, then the right half
    let (y1m, v1m) = trig_step(1.0, 0.0, w, half);
    let (y2m, v2m) = trig_step(0.0, 1.0, w, half);
    let (v1p, v2p) = (v1m - q * y1m, v2m - q * y2m);
    let (h, g) = trig_step(y1m, v1p, w, half);
    let (y2pi, h2) = trig_step(y2m, v2p, w, half);

    let i1 = trig_square_integral(1.0, 0.0, w, half) + trig_square_integral(y1m, v1p / w, w, half);
    let i2 = trig_square_integral(0.0, 1.0 / w, w, half) + trig_square_integral(y2m, v2p / w, w, half);

    let mut samples = Vec::with_capacity(SAMPLE_INTERVALS + 1);
    let mid = SAMPLE_INTERVALS / 2;
    for i in 0..=SAMPLE_INTERVALS {
        let t = PI * i as f64 / SAMPLE_INTERVALS as f64;
        let row = if i < mid {
            let (a, b) = trig_step(1.0, 0.0, w, t);
            let (c, d) = trig_step(0.0, 1.0, w, t);
            [a, b, c, d]
        } else {
            let dt = t - half;
            let (a, b) = trig_step(y1m, v1p, w, dt);
            let (c, d) = trig_step(y2m, v2p, w, dt);
            [a, b, c, d]
        };
        samples.push(row);
    }
    CycleSolution { h, g, h2, y2pi, i1, i2, j1: y1m * y1m, j2: y2m * y2m, sampled_y0: samples }
}

/// Matrix elements (h, g) = (y₁(π), ẏ₁(π)) only; the lean path used per
/// Monte Carlo cycle.
pub fn cycle_elements(params: &HillParams, shape: &BarrierShape, tol: f64) -> Result<(f64, f64)> {
    check_inputs(params, tol)?;
    if shape.is_delta() {
        let w = params.lambda.sqrt();
        let (y, v) = trig_step(1.0, 0.0, w, FRAC_PI_2);
        return Ok(trig_step(y, v - params.q * y, w, FRAC_PI_2));
    }
    let sys = Hill { lambda: params.lambda, q: params.q, shape };
    let end = Dop853::new(tol).integrate(&sys, 0.0, PI, [1.0, 0.0], shape.breakpoints())?;
    Ok((end[0], end[1]))
}

/// The constants X, Y, W, Z of the first-order matrix elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderCoeffs {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub z: f64,
}

pub fn first_order_coeffs(base: &CycleSolution) -> Result<FirstOrderCoeffs> {
    coeffs_from_moments(base.h, base.g, [base.i1, base.i2, base.j1, base.j2])
}

/// X, Y, W, Z from (h₀, g₀) and the moments [I₁, I₂, J₁, J₂].
pub fn coeffs_from_moments(h0: f64, g0: f64, m: [f64; 4]) -> Result<FirstOrderCoeffs> {
    if h0.abs() < BASE_DEGENERACY {
        return Err(Error::DegenerateBase { element: "h0", value: h0.abs(), threshold: BASE_DEGENERACY });
    }
    if g0.abs() < BASE_DEGENERACY {
        return Err(Error::DegenerateBase { element: "g0", value: g0.abs(), threshold: BASE_DEGENERACY });
    }
    let [i1, i2, j1, j2] = m;
    let (h2, g2) = (h0 * h0, g0 * g0);
    Ok(FirstOrderCoeffs {
        x: ((h2 - 1.0) * i1 - g2 * i2) / (2.0 * g0),
        y: ((h2 - 1.0) * j1 - g2 * j2) / (2.0 * g0),
        w: ((h2 + 1.0) * i1 - g2 * i2) / (2.0 * h0),
        z: ((h2 + 1.0) * j1 - g2 * j2) / (2.0 * h0),
    })
}

/// First-order (h, g) for a cycle perturbed by (ℓ, p).
pub fn perturbed_elements(base: &CycleSolution, coeffs: &FirstOrderCoeffs, ell: f64, p: f64) -> (f64, f64) {
    (base.h - ell * coeffs.x - p * coeffs.y, base.g - ell * coeffs.w - p * coeffs.z)
}

/// Moments [I₁, I₂, J₁, J₂] of the free solutions cos(√λ t), sin(√λ t)/√λ.
pub fn zeroth_order_moments(lambda: f64, shape: &BarrierShape) -> [f64; 4] {
    let s = lambda.sqrt();
    let sin2phi = (2.0 * s * PI).sin();
    let i1 = FRAC_PI_2 + sin2phi / (4.0 * s);
    let i2 = (FRAC_PI_2 - sin2phi / (4.0 * s)) / lambda;
    let j1 = shape.integrate_weighted(|t| {
        let c = (s * t).cos();
        c * c
    });
    let j2 = shape.integrate_weighted(|t| {
        let v = (s * t).sin();
        v * v
    }) / lambda;
    [i1, i2, j1, j2]
}

/// Which small-q approximation of the matrix elements to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmallQMode {
    /// Leading order in q.
    FirstOrder,
    /// Same balance equations solved without dropping the q² terms.
    Generalized,
}

/// Small-q matrix elements about the free solution (q = 0 base).
pub fn small_q_elements(lambda: f64, q: f64, shape: &BarrierShape, mode: SmallQMode) -> Result<(f64, f64)> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain { what: "lambda", value: lambda });
    }
    let [_, _, j1, j2] = zeroth_order_moments(lambda, shape);
    small_q_from_moments(lambda, q, j1, j2, mode)
}

/// [`small_q_elements`] with precomputed J₁, J₂ (they do not depend on q).
pub fn small_q_from_moments(lambda: f64, q: f64, j1: f64, j2: f64, mode: SmallQMode) -> Result<(f64, f64)> {
    let s = lambda.sqrt();
    let phi = s * PI;
    let (sin_phi, cos_phi) = phi.sin_cos();
    if cos_phi.abs() < COS_PHI_DEGENERACY {
        return Err(Error::NearDegenerate { cos_phi });
    }
    match mode {
        SmallQMode::FirstOrder => {
            let h = cos_phi - q / (2.0 * s) * sin_phi;
            let g = -s * sin_phi + q / cos_phi * (0.5 * sin_phi * sin_phi - j1);
            Ok((h, g))
        }
        SmallQMode::Generalized => {
            // Exact roots of the two balance equations. With J₁ + λJ₂ = 1 the
            // linear coefficient collapses to q sin φ / √λ, so the sin²φ term
            // of the radicand carries q²/(4λ).
            let radicand = cos_phi * cos_phi + q * q / (4.0 * lambda) * sin_phi * sin_phi - q * q * j1 * j2;
            if radicand < 0.0 {
                return Err(Error::NegativeRadicand { value: radicand });
            }
            // sign(cos φ) makes both roots reduce to the first-order forms
            let root = cos_phi.signum() * radicand.sqrt();
            let h = -q / (2.0 * s) * sin_phi + root;
            let g = (-q * j1 + 0.5 * q * sin_phi * sin_phi - s * sin_phi * root) / cos_phi;
            Ok((h, g))
        }
    }
}

/// 2J₁ − 1 for the (2/π)sin²t barrier, written so that the removable
/// singularity at λ = 1 is harmless.
pub fn sin2_two_j1_minus_one(lambda: f64) -> f64 {
    let s = lambda.sqrt();
    let x = 2.0 * PI * (s - 1.0);
    let sinc = if x.abs() < 1e-4 { 1.0 - x * x / 6.0 + x * x * x * x / 120.0 } else { x.sin() / x };
    -sinc / (s * (s + 1.0))
}

/// ∫₀^π cos(2st) Q̂ dt = 2J₁ − 1 at λ = s².
fn cos_moment(s: f64, shape: &BarrierShape) -> f64 {
    match shape {
        BarrierShape::Sin2 => sin2_two_j1_minus_one(s * s),
        BarrierShape::DeltaMidpoint => (s * PI).cos(),
        _ => shape.integrate_weighted(|t| (2.0 * s * t).cos()),
    }
}

/// Limiting J at √λ = k + ½.
fn j_lhopital(k: u64, shape: &BarrierShape) -> f64 {
    let m = (2 * k + 1) as f64;
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * 2.0 / PI * shape.integrate_weighted(|t| t * (m * t).sin())
}

/// J = (2J₁ − 1)/cos φ, continuous through the zeros of cos φ.
pub fn j_factor(lambda: f64, shape: &BarrierShape) -> f64 {
    if shape.is_delta() {
        return 1.0;
    }
    let s = lambda.sqrt();
    let cos_phi = (s * PI).cos();
    if cos_phi.abs() >= COS_PHI_DEGENERACY {
        return cos_moment(s, shape) / cos_phi;
    }
    let k = (s - 0.5).round().max(0.0);
    let s0 = k + 0.5;
    let limit = j_lhopital(k as u64, shape);
    if (lambda - s0 * s0).abs() <= LHOPITAL_WINDOW {
        return limit;
    }
    // linear bridge in √λ from the limit to the edge of the annulus
    let delta = COS_PHI_DEGENERACY.asin() / PI;
    let edge = if s > s0 { s0 + delta } else { s0 - delta };
    let at_edge = cos_moment(edge, shape) / (edge * PI).cos();
    limit + (at_edge - limit) * (s - s0) / (edge - s0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::simpson_by;

    const TOL: f64 = 1e-10;

    fn sol(lambda: f64, q: f64, shape: &BarrierShape) -> CycleSolution {
        integrate_cycle(&HillParams::new(lambda, q).unwrap(), shape, TOL).unwrap()
    }

    #[test]
    fn free_oscillation_closed_form() {
        let c = sol(0.5, 0.0, &BarrierShape::Sin2);
        let phi = 0.5f64.sqrt() * PI;
        assert!((c.h - phi.cos()).abs() < 1e-10);
        assert!((c.g + 0.5f64.sqrt() * phi.sin()).abs() < 1e-10);
        assert!((c.h + 0.605_699_867_078_813).abs() < 1e-6);
        assert!((c.g + 0.562_640_058_572_400).abs() < 1e-6);
        let [i1, i2, j1, j2] = zeroth_order_moments(0.5, &BarrierShape::Sin2);
        assert!((c.i1 - i1).abs() < 1e-9 && (c.i2 - i2).abs() < 1e-9);
        assert!((c.j1 - j1).abs() < 1e-9 && (c.j2 - j2).abs() < 1e-9);
        assert_eq!(c.sampled_y0.len(), SAMPLE_INTERVALS + 1);
    }

    #[test]
    fn delta_jump_matches_first_order_formula() {
        let c = sol(0.5, 0.5, &BarrierShape::DeltaMidpoint);
        let s = 0.5f64.sqrt();
        let phi = s * PI;
        let expect = phi.cos() - 0.5 / (2.0 * s) * phi.sin();
        assert!((c.h - expect).abs() < 1e-12);
        assert!((c.h + 0.887_02).abs() < 1e-5);
        let free = sol(0.5, 0.0, &BarrierShape::DeltaMidpoint);
        assert!((free.j1 - (phi / 2.0).cos().powi(2)).abs() < 1e-14);
        assert!((c.wronskian() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn delta_moments_match_dense_quadrature() {
        let c = sol(2.3, 0.7, &BarrierShape::DeltaMidpoint);
        let dx = c.sample_step();
        let i1 = simpson_by(SAMPLE_INTERVALS, dx, |i| c.sampled_y0[i][0].powi(2));
        // y² has a kink at π/2, a grid node, so Simpson is still high order
        assert!((i1 - c.i1).abs() < 1e-9, "{i1} vs {}", c.i1);
    }

    #[test]
    fn tabulated_triangle_is_integrated_across_kinks() {
        let tri = BarrierShape::tabulated_normalized(&[(0.0, 0.0), (FRAC_PI_2, 1.0), (PI, 0.0)]).unwrap();
        let c = sol(0.8, 1.3, &tri);
        assert!((c.wronskian() - 1.0).abs() < 1e-9);
        assert!(c.symmetry_residual() < 1e-8);
    }

    #[test]
    fn rejects_bad_lambda() {
        let p = HillParams { lambda: -1.0, q: 0.0 };
        assert!(matches!(integrate_cycle(&p, &BarrierShape::Sin2, TOL), Err(Error::Domain { .. })));
        assert!(matches!(cycle_elements(&p, &BarrierShape::Sin2, TOL), Err(Error::Domain { .. })));
    }

    #[test]
    fn lean_path_agrees_with_full_path() {
        for shape in [BarrierShape::Sin2, BarrierShape::Sin4, BarrierShape::DeltaMidpoint] {
            let p = HillParams::new(1.7, 0.4).unwrap();
            let full = integrate_cycle(&p, &shape, TOL).unwrap();
            let (h, g) = cycle_elements(&p, &shape, TOL).unwrap();
            assert!((h - full.h).abs() < 1e-9 && (g - full.g).abs() < 1e-9);
        }
    }

    #[test]
    fn substitution_example() {
        let c = coeffs_from_moments(0.5, 1.0, [1.0; 4]).unwrap();
        assert_eq!(c, FirstOrderCoeffs { x: -0.875, y: -0.875, w: 0.25, z: 0.25 });
    }

    #[test]
    fn degenerate_bases() {
        assert!(matches!(coeffs_from_moments(0.5, 0.0, [1.0; 4]), Err(Error::DegenerateBase { element: "g0", .. })));
        assert!(matches!(coeffs_from_moments(1e-9, 1.0, [1.0; 4]), Err(Error::DegenerateBase { element: "h0", .. })));
    }

    #[test]
    fn moment_form_matches_direct_quadrature() {
        let c = sol(0.5, 0.0, &BarrierShape::Sin2);
        let k = first_order_coeffs(&c).unwrap();
        let (h0, g0) = (c.h, c.g);
        let dx = c.sample_step();
        let q = |i: usize| BarrierShape::Sin2.value_unchecked(i as f64 * dx);
        let f = |i: usize, a: f64| {
            let y = &c.sampled_y0[i];
            a * y[0] * y[0] - g0 * g0 * y[2] * y[2]
        };
        let x = simpson_by(SAMPLE_INTERVALS, dx, |i| f(i, h0 * h0 - 1.0)) / (2.0 * g0);
        let y = simpson_by(SAMPLE_INTERVALS, dx, |i| q(i) * f(i, h0 * h0 - 1.0)) / (2.0 * g0);
        let w = simpson_by(SAMPLE_INTERVALS, dx, |i| f(i, h0 * h0 + 1.0)) / (2.0 * h0);
        let z = simpson_by(SAMPLE_INTERVALS, dx, |i| q(i) * f(i, h0 * h0 + 1.0)) / (2.0 * h0);
        for (a, b) in [(k.x, x), (k.y, y), (k.w, w), (k.z, z)] {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }

    #[test]
    fn perturbed_identity_and_small_q_reduction() {
        let c = sol(0.5, 0.0, &BarrierShape::Sin2);
        let k = first_order_coeffs(&c).unwrap();
        assert_eq!(perturbed_elements(&c, &k, 0.0, 0.0), (c.h, c.g));
        let eps = 1e-3;
        let (h, g) = perturbed_elements(&c, &k, 0.0, eps);
        let (hs, gs) = small_q_elements(0.5, eps, &BarrierShape::Sin2, SmallQMode::FirstOrder).unwrap();
        assert!((h - hs).abs() < 1e-9 && (g - gs).abs() < 1e-9);
    }

    #[test]
    fn small_q_examples() {
        let s = 0.5f64.sqrt();
        let phi = s * PI;
        let (h, g) = small_q_elements(0.5, 0.0, &BarrierShape::Sin2, SmallQMode::FirstOrder).unwrap();
        assert!((h - phi.cos()).abs() < 1e-15 && (g + s * phi.sin()).abs() < 1e-15);
        let (h, g) = small_q_elements(0.5, 0.0, &BarrierShape::Sin2, SmallQMode::Generalized).unwrap();
        assert!((h - phi.cos()).abs() < 1e-15 && (g + s * phi.sin()).abs() < 1e-15);

        let exact = sol(0.5, 0.5, &BarrierShape::DeltaMidpoint);
        let (h, g) = small_q_elements(0.5, 0.5, &BarrierShape::DeltaMidpoint, SmallQMode::FirstOrder).unwrap();
        assert!((h - exact.h).abs() < 1e-12);
        assert!((g - exact.g).abs() < 1e-12);

        let exact = sol(0.5, 0.5, &BarrierShape::Sin2);
        let (h1, _) = small_q_elements(0.5, 0.5, &BarrierShape::Sin2, SmallQMode::FirstOrder).unwrap();
        let (h2, _) = small_q_elements(0.5, 0.5, &BarrierShape::Sin2, SmallQMode::Generalized).unwrap();
        assert!((h2 - exact.h).abs() < (h1 - exact.h).abs());

        assert!(matches!(
            small_q_elements(0.25, 0.1, &BarrierShape::Sin2, SmallQMode::FirstOrder),
            Err(Error::NearDegenerate { .. })
        ));
    }

    #[test]
    fn j_factor_sin2_example() {
        let lambda = 0.5;
        let s = lambda.sqrt();
        let phi = s * PI;
        let printed = -(2.0 * phi).sin() / (2.0 * PI * s * (lambda - 1.0));
        assert!((sin2_two_j1_minus_one(lambda) - printed).abs() < 1e-15);
        assert!((printed + 0.433_91).abs() < 1e-5);
        let j = j_factor(lambda, &BarrierShape::Sin2);
        assert!((j - printed / phi.cos()).abs() < 1e-14);
        assert!((j - 0.716_37).abs() < 1e-5);
        assert!((sin2_two_j1_minus_one(1.0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn j_factor_limits() {
        for shape in [BarrierShape::Sin2, BarrierShape::Sin4] {
            let exact = 2.0 / PI * shape.integrate_weighted(|t| t * t.sin());
            assert!((j_factor(0.25, &shape) - exact).abs() < 1e-12);
            // continuity across the annulus and the bridge
            for d in [1e-9, 1e-7, 1e-5, 1e-3] {
                let a = j_factor((0.5 + d).powi(2), &shape);
                let b = j_factor((0.5 - d).powi(2), &shape);
                assert!((a - exact).abs() < 20.0 * d + 1e-9, "{d}: {a} {exact}");
                assert!((b - exact).abs() < 20.0 * d + 1e-9, "{d}: {b} {exact}");
            }
            // k = 1 uses the negative sign
            let exact1 = -2.0 / PI * shape.integrate_weighted(|t| t * (3.0 * t).sin());
            assert!((j_factor(2.25, &shape) - exact1).abs() < 1e-12);
            assert!((j_factor(2.25 + 1e-8, &shape) - exact1).abs() < 1e-6);
        }
        assert_eq!(j_factor(0.25, &BarrierShape::DeltaMidpoint), 1.0);
        assert!(j_factor(1e4, &BarrierShape::Sin2).abs() < 1e-4);
    }

    #[test]
    fn sin2_closed_form_matches_quadrature() {
        for i in 0..200 {
            let lambda = 0.1 + i as f64 * 0.25;
            let s = lambda.sqrt();
            let quad = BarrierShape::Sin2.integrate_weighted(|t| (2.0 * s * t).cos());
            assert!((quad - sin2_two_j1_minus_one(lambda)).abs() < 1e-12, "{lambda}");
        }
    }
}
