//! Application adapters: Hill parameters extracted from orbits in a
//! triaxial ρ ∝ 1/ϖ potential, and the preheating mode equation.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::model::{BarrierShape, HillParams, RunConfig};
use crate::stochastic::{NoiseConfig, NoiseCoupling, NoiseForm};

/// Segments with q_k below this carry no forcing and get no shape.
pub const ZERO_FORCING: f64 = 1e-14;
/// Uniform intervals of the rescaled [0, π] grid each segment is resampled on.
pub const SEGMENT_INTERVALS: usize = 256;
/// Relative radial range below which an orbit is treated as circular.
pub const CIRCULAR_TOL: f64 = 1e-9;
/// Cycle count and seed given to preset run configs.
pub const PRESET_CYCLES: u64 = 100_000;

/// Semi-axes of the density ellipsoids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRatios {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl AxisRatios {
    /// Requires a ≥ b ≥ c > 0; equal axes give the spherical limit.
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(c > 0.0 && b >= c && a >= b && a.is_finite()) {
            return Err(Error::Config { field: "axes", reason: "need a >= b >= c > 0" });
        }
        Ok(Self { a, b, c })
    }

    pub fn spherical() -> Self {
        Self { a: 1.0, b: 1.0, c: 1.0 }
    }

    /// Ellipsoidal radius ϖ = √(x²/a² + y²/b² + z²/c²).
    pub fn varpi(&self, x: f64, y: f64, z: f64) -> f64 {
        ((x / self.a).powi(2) + (y / self.b).powi(2) + (z / self.c).powi(2)).sqrt()
    }
}

/// Ω_y² = (4/b) / (√(c²x² + a²z²) + b√(x² + z²)), the restoring frequency of
/// small excursions out of the (x, z) plane.
pub fn omega_y_sq(axes: &AxisRatios, x: f64, z: f64) -> Result<f64> {
    if x == 0.0 && z == 0.0 {
        return Err(Error::OriginSingularity);
    }
    let AxisRatios { a, b, c } = *axes;
    Ok((4.0 / b) / ((c * c * x * x + a * a * z * z).sqrt() + b * x.hypot(z)))
}

/// An in-plane orbit sampled as rows (t, x, z).
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitTrace {
    rows: Vec<[f64; 3]>,
}

impl OrbitTrace {
    pub fn new(rows: Vec<[f64; 3]>) -> Result<Self> {
        if rows.len() < 3 {
            return Err(Error::InvalidTrace("need at least three rows"));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTrace("non-finite value"));
        }
        if rows.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(Error::InvalidTrace("times must be strictly increasing"));
        }
        if rows.iter().any(|r| r[1] == 0.0 && r[2] == 0.0) {
            return Err(Error::InvalidTrace("orbit passes through the origin"));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[[f64; 3]] {
        &self.rows
    }
}

/// One orbit crossing mapped onto a Hill cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSegment {
    pub t_start: f64,
    pub t_end: f64,
    /// Minimum of Ω_y² over the segment.
    pub lambda: f64,
    /// ∫₀^π (Ω_y² − λ) dτ on the rescaled time τ.
    pub q: f64,
    /// Q̂ = (Ω_y² − λ)/q on the rescaled grid; `None` for a zero-forcing
    /// segment.
    pub shape: Option<BarrierShape>,
    /// max |Q̂(τ) − Q̂(π − τ)|, reported but not enforced.
    pub symmetry_residual: f64,
}

impl OrbitSegment {
    pub fn is_zero_forcing(&self) -> bool {
        self.shape.is_none()
    }
}

/// Per-segment parameters plus the average shape over forced segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub segments: Vec<OrbitSegment>,
    pub pooled_shape: Option<BarrierShape>,
}

/// Parabola vertex through three points, clamped to their span.
fn parabolic_peak(t: [f64; 3], r: [f64; 3]) -> f64 {
    let (d0, d2) = (t[1] - t[0], t[1] - t[2]);
    let num = d0 * d0 * (r[1] - r[2]) - d2 * d2 * (r[1] - r[0]);
    let den = d0 * (r[1] - r[2]) - d2 * (r[1] - r[0]);
    if den == 0.0 {
        return t[1];
    }
    (t[1] - 0.5 * num / den).clamp(t[0], t[2])
}

fn interp(ts: &[f64], vs: &[f64], t: f64) -> f64 {
    let n = ts.len();
    let i = match ts.partition_point(|&s| s <= t) {
        0 => 0,
        i if i >= n => n - 2,
        i => i - 1,
    };
    let w = (t - ts[i]) / (ts[i + 1] - ts[i]);
    vs[i] + w * (vs[i + 1] - vs[i])
}

/// Outer turning points: local maxima of the in-plane radius, refined by a
/// parabola through the neighbouring samples.
fn turning_points(ts: &[f64], r: &[f64]) -> Vec<f64> {
    (1..r.len() - 1)
        .filter(|&i| r[i] > r[i - 1] && r[i] >= r[i + 1])
        .map(|i| parabolic_peak([ts[i - 1], ts[i], ts[i + 1]], [r[i - 1], r[i], r[i + 1]]))
        .collect()
}

/// Segment boundaries of a circular orbit: every half turn of the polar
/// angle, the spacing of outer turning points of a slightly eccentric orbit.
fn half_turns(rows: &[[f64; 3]]) -> Vec<f64> {
    let mut unwrapped = Vec::with_capacity(rows.len());
    let mut prev = rows[0][2].atan2(rows[0][1]);
    let mut acc = prev;
    for row in rows {
        let a = row[2].atan2(row[1]);
        let mut d = a - prev;
        if d > PI {
            d -= 2.0 * PI;
        } else if d < -PI {
            d += 2.0 * PI;
        }
        acc += d;
        prev = a;
        unwrapped.push(acc);
    }
    let (start, end) = (unwrapped[0], unwrapped[unwrapped.len() - 1]);
    let dir = if end >= start { 1.0 } else { -1.0 };
    let turns = ((end - start).abs() / PI).floor() as usize;
    (0..=turns)
        .map(|k| {
            let target = start + dir * k as f64 * PI;
            // the angle is monotone for a circular orbit
            let i = unwrapped
                .windows(2)
                .position(|w| (w[0] - target) * (w[1] - target) <= 0.0 && w[0] != w[1])
                .unwrap_or(0);
            let (a0, a1) = (unwrapped[i], unwrapped[i + 1]);
            let w = if a1 == a0 { 0.0 } else { (target - a0) / (a1 - a0) };
            rows[i][0] + w * (rows[i + 1][0] - rows[i][0])
        })
        .collect()
}

/// Splits an orbit into crossings between outer turning points and maps
/// each onto (λ_k, q_k, Q̂_k) on the rescaled time τ ∈ [0, π].
pub fn extract_cycles(trace: &OrbitTrace, axes: &AxisRatios) -> Result<Extraction> {
    let rows = trace.rows();
    let ts: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let radius: Vec<f64> = rows.iter().map(|r| r[1].hypot(r[2])).collect();
    let omega: Vec<f64> = rows.iter().map(|r| omega_y_sq(axes, r[1], r[2])).collect::<Result<_>>()?;

    // rounding noise on a circular orbit would pass for turning points
    let (lo, hi) = radius.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    let bounds = if hi - lo <= CIRCULAR_TOL * hi { half_turns(rows) } else { turning_points(&ts, &radius) };
    if bounds.len() < 2 {
        return Err(Error::InsufficientTrace { turning_points: bounds.len() });
    }

    let m = SEGMENT_INTERVALS;
    let dtau = PI / m as f64;
    let taus: Vec<f64> = (0..=m).map(|i| i as f64 * dtau).collect();
    let mut segments = Vec::with_capacity(bounds.len() - 1);
    let mut pooled = alloc::vec![0.0; m + 1];
    let mut forced = 0usize;
    for w in bounds.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let values: Vec<f64> = taus.iter().map(|tau| interp(&ts, &omega, t0 + (t1 - t0) * tau / PI)).collect();
        let lambda = values.iter().copied().fold(f64::INFINITY, f64::min);
        let resid: Vec<f64> = values.iter().map(|v| v - lambda).collect();
        // trapezoid, so the piecewise-linear table integrates to exactly one
        let q = dtau * (resid.iter().sum::<f64>() - 0.5 * (resid[0] + resid[m]));
        let (shape, symmetry_residual) = if q < ZERO_FORCING {
            (None, 0.0)
        } else {
            let qhat: Vec<f64> = resid.iter().map(|v| v / q).collect();
            let sym = (0..=m).map(|i| (qhat[i] - qhat[m - i]).abs()).fold(0.0, f64::max);
            for (p, v) in pooled.iter_mut().zip(&qhat) {
                *p += v;
            }
            forced += 1;
            let samples: Vec<(f64, f64)> = taus.iter().copied().zip(qhat).collect();
            (Some(BarrierShape::tabulated(&samples)?), sym)
        };
        segments.push(OrbitSegment { t_start: t0, t_end: t1, lambda, q, shape, symmetry_residual });
    }
    let pooled_shape = if forced > 0 {
        let samples: Vec<(f64, f64)> = taus.iter().copied().zip(pooled).collect();
        Some(BarrierShape::tabulated_normalized(&samples)?)
    } else {
        None
    };
    Ok(Extraction { segments, pooled_shape })
}

/// Preheating mode equation χ'' + [Ω² + qQ̂(t) + ξ]χ = 0 as a stochastic
/// run: λ = Ω², the barrier carries q, and ξ couples through a unit profile.
pub fn preheat_preset(
    omega_ell_sq: f64,
    q: f64,
    shape: BarrierShape,
    noise: NoiseConfig,
) -> Result<(RunConfig, NoiseConfig)> {
    let params = HillParams::new(omega_ell_sq, q)?;
    let noise = NoiseConfig { form: NoiseForm::Multiplicative, coupling: NoiseCoupling::Unit, ..noise };
    Ok((RunConfig::new(params, shape, PRESET_CYCLES, 0), noise))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::barrier_residuals;

    #[test]
    fn omega_examples() {
        let s = AxisRatios::spherical();
        assert!((omega_y_sq(&s, 3.0, 4.0).unwrap() - 0.4).abs() < 1e-15);
        assert!((omega_y_sq(&s, 0.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(omega_y_sq(&s, 0.0, 0.0), Err(Error::OriginSingularity));
    }

    #[test]
    fn omega_is_scale_covariant() {
        let ax = AxisRatios::new(1.4, 1.0, 0.6).unwrap();
        for (x, z, s) in [(0.3, 0.7, 2.0), (1.1, -0.2, 0.125), (-0.5, 0.0, 4.0)] {
            let w = omega_y_sq(&ax, x, z).unwrap();
            let ws = omega_y_sq(&ax, s * x, s * z).unwrap();
            assert!((ws * s / w - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn axes_validation() {
        assert!(AxisRatios::new(1.0, 2.0, 0.5).is_err());
        assert!(AxisRatios::new(1.0, 0.5, 0.0).is_err());
        assert!(AxisRatios::new(2.0, 1.0, 0.5).is_ok());
    }

    #[test]
    fn trace_validation() {
        assert!(OrbitTrace::new(alloc::vec![[0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]).is_err());
        assert!(OrbitTrace::new(alloc::vec![[0.0, 1.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]).is_err());
        assert!(OrbitTrace::new(alloc::vec![[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [2.0, 1.0, 0.0]]).is_err());
    }

    #[test]
    fn parabola_vertex() {
        // r = −(t − 0.3)²
        let f = |t: f64| -(t - 0.3) * (t - 0.3);
        let t = [0.0, 0.5, 1.2];
        assert!((parabolic_peak(t, [f(t[0]), f(t[1]), f(t[2])]) - 0.3).abs() < 1e-14);
    }

    #[test]
    fn circular_orbit_gives_unforced_segments() {
        let r = 2.5;
        let rows = (0..2000).map(|i| {
            let t = i as f64 * 0.01;
            [t, r * t.cos(), r * t.sin()]
        });
        let trace = OrbitTrace::new(rows.collect()).unwrap();
        let ex = extract_cycles(&trace, &AxisRatios::spherical()).unwrap();
        assert!(ex.segments.len() >= 5);
        for s in &ex.segments {
            assert!((s.lambda - 2.0 / r).abs() < 1e-12);
            assert!(s.is_zero_forcing());
            assert!((s.t_end - s.t_start - PI).abs() < 1e-9);
        }
        assert!(ex.pooled_shape.is_none());
    }

    #[test]
    fn radial_oscillation_round_trip() {
        let (lambda, q) = (0.8, 0.3);
        let ax = AxisRatios::new(1.5, 1.0, 0.7).unwrap();
        let psi: f64 = 0.4;
        let g = (ax.c * ax.c * psi.cos().powi(2) + ax.a * ax.a * psi.sin().powi(2)).sqrt();
        // crossings of unequal duration, sampled at 300 points each
        // the first and last crossings are partial: their outer ends are the
        // trace endpoints, which are not detected as turning points
        let periods = [1.5, 2.0, 2.6, 1.7, 2.2, 1.9];
        let mut rows = Vec::new();
        let mut t0 = 0.0;
        for (k, period) in periods.iter().enumerate() {
            let start = if k == 0 { 0 } else { 1 };
            for i in start..=300 {
                let tau = PI * i as f64 / 300.0;
                let w = lambda + q * 2.0 / PI * tau.sin().powi(2);
                let r = 4.0 / (ax.b * w * (g + ax.b));
                rows.push([t0 + period * tau / PI, r * psi.cos(), r * psi.sin()]);
            }
            t0 += period;
        }
        let ex = extract_cycles(&OrbitTrace::new(rows).unwrap(), &ax).unwrap();
        assert_eq!(ex.segments.len(), 4);
        for s in &ex.segments {
            assert!((s.lambda / lambda - 1.0).abs() < 0.01, "{}", s.lambda);
            assert!((s.q / q - 1.0).abs() < 0.01, "{}", s.q);
            let shape = s.shape.as_ref().unwrap();
            assert!(barrier_residuals(shape).normalization < 1e-6);
            for i in 0..=64 {
                let t = PI * i as f64 / 64.0;
                let want = 2.0 / PI * t.sin().powi(2);
                let got = crate::model::barrier_eval(shape, t).unwrap();
                assert!((got - want).abs() < 0.02 * 2.0 / PI, "{t} {got} {want}");
            }
        }
        assert!(ex.pooled_shape.is_some());
    }

    #[test]
    fn short_trace_is_rejected() {
        let rows = (0..50).map(|i| {
            let t = i as f64 * 0.05;
            [t, 1.0 + 0.2 * t.cos(), 0.1]
        });
        let r = extract_cycles(&OrbitTrace::new(rows.collect()).unwrap(), &AxisRatios::spherical());
        assert!(matches!(r, Err(Error::InsufficientTrace { .. })));
    }

    #[test]
    fn preheat_preset_is_a_valid_unit_coupled_run() {
        let noise = NoiseConfig::multiplicative(0.2, 0.02);
        let (run, n) = preheat_preset(0.5, 0.1, BarrierShape::Sin2, noise).unwrap();
        run.validate().unwrap();
        n.validate().unwrap();
        assert_eq!(run.params, HillParams { lambda: 0.5, q: 0.1 });
        assert_eq!(n.coupling, NoiseCoupling::Unit);
        assert_eq!(n.form, NoiseForm::Multiplicative);
        assert!(preheat_preset(0.0, 0.1, BarrierShape::Sin2, noise).is_err());
    }

    #[test]
    fn quiet_preset_has_zero_growth() {
        use crate::stochastic::{growth_stochastic, StochasticMethod, StochasticRun};
        let (run, n) = preheat_preset(0.5, 0.1, BarrierShape::Sin2, NoiseConfig::multiplicative(0.2, 0.0)).unwrap();
        let sr = StochasticRun::new(run.params, run.barrier, n, run.integrator_tol).unwrap();
        let g = growth_stochastic(&sr, 512, 3, StochasticMethod::Direct).unwrap();
        assert!(g.gamma.abs() <= 3.0 * g.stderr + 1e-12, "{g:?}");
    }
}
