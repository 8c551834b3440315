//! Barrier shapes, parameter distributions and run configuration.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::quad::{GaussLegendre, GL_ORDER};

/// Tolerance used by [`barrier_validate`].
pub const BARRIER_TOL: f64 = 1e-8;
pub const DEFAULT_RENORM_EVERY: usize = 16;
pub const DEFAULT_INTEGRATOR_TOL: f64 = 1e-10;

const SIN2_NORM: f64 = 2.0 / PI;
const SIN4_NORM: f64 = 8.0 / (3.0 * PI);

/// Normalized, midpoint-symmetric forcing profile Q̂ on [0, π].
#[derive(Debug, Clone, PartialEq)]
pub enum BarrierShape {
    /// (2/π) sin² t
    Sin2,
    /// (8/(3π)) sin⁴ t
    Sin4,
    /// δ(t − π/2); no pointwise value, handled by the jump rule.
    DeltaMidpoint,
    /// Piecewise-linear table.
    Tabulated(Table),
}

/// Knots of a piecewise-linear barrier, covering [0, π].
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    t: Vec<f64>,
    v: Vec<f64>,
}

impl Table {
    pub fn knots(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.t.len();
        let i = match self.t.partition_point(|&k| k <= t) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        };
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let w = (t - t0) / (t1 - t0);
        self.v[i] + w * (self.v[i + 1] - self.v[i])
    }

    /// Exact integral of the interpolant.
    fn integral(&self) -> f64 {
        self.t.windows(2).zip(self.v.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
    }
}

impl BarrierShape {
    /// A table used exactly as given (no renormalization).
    ///
    /// Knots must be strictly increasing, start at 0 and end at π (within
    /// 1e-9); values must be finite.
    pub fn tabulated(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidTable("need at least two samples"));
        }
        if samples.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidTable("non-finite sample"));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidTable("times must be strictly increasing"));
        }
        let first = samples[0].0;
        let last = samples[samples.len() - 1].0;
        if first.abs() > 1e-9 || (last - PI).abs() > 1e-9 {
            return Err(Error::InvalidTable("samples must span [0, pi]"));
        }
        let mut t: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let n = t.len();
        t[0] = 0.0;
        t[n - 1] = PI;
        let v = samples.iter().map(|s| s.1).collect();
        Ok(Self::Tabulated(Table { t, v }))
    }

    /// A table rescaled so that its integral over [0, π] is exactly one.
    pub fn tabulated_normalized(samples: &[(f64, f64)]) -> Result<Self> {
        let Self::Tabulated(mut table) = Self::tabulated(samples)? else { unreachable!() };
        let area = table.integral();
        if !(area.abs() > 1e-300) {
            return Err(Error::InvalidTable("table integrates to zero"));
        }
        for v in &mut table.v {
            *v /= area;
        }
        Ok(Self::Tabulated(table))
    }

    pub fn is_delta(&self) -> bool {
        matches!(self, Self::DeltaMidpoint)
    }

    /// Points in (0, π) where Q̂ is not smooth.
    pub fn breakpoints(&self) -> &[f64] {
        match self {
            Self::Tabulated(table) => {
                let n = table.t.len();
                &table.t[1..n - 1]
            }
            _ => &[],
        }
    }

    /// Q̂(t) without domain checks; `t` is assumed to lie in [0, π]. The
    /// delta shape evaluates to zero here, which is what the smooth part of
    /// the right-hand side needs.
    pub(crate) fn value_unchecked(&self, t: f64) -> f64 {
        match self {
            Self::Sin2 => {
                let s = t.sin();
                SIN2_NORM * s * s
            }
            Self::Sin4 => {
                let s = t.sin();
                let s2 = s * s;
                SIN4_NORM * s2 * s2
            }
            Self::DeltaMidpoint => 0.0,
            Self::Tabulated(table) => table.eval(t),
        }
    }

    /// ∫₀^π f(t) Q̂(t) dt by high-order quadrature; exact sampling for the
    /// delta shape.
    pub fn integrate_weighted<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let gl = GaussLegendre::<GL_ORDER>::new();
        match self {
            Self::DeltaMidpoint => f(PI / 2.0),
            Self::Tabulated(table) => {
                table.t.windows(2).map(|w| gl.integrate(w[0], w[1], 1, |t| f(t) * table.eval(t))).sum()
            }
            _ => gl.integrate(0.0, PI, 16, |t| f(t) * self.value_unchecked(t)),
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            Self::Sin2 => SIN2_NORM,
            Self::Sin4 => SIN4_NORM,
            Self::DeltaMidpoint => f64::INFINITY,
            Self::Tabulated(table) => table.v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Q̂(t) for `t` in [0, π].
pub fn barrier_eval(shape: &BarrierShape, t: f64) -> Result<f64> {
    if shape.is_delta() {
        return Err(Error::NoPointwiseValue);
    }
    if !(0.0..=PI).contains(&t) {
        return Err(Error::Domain { what: "t", value: t });
    }
    Ok(shape.value_unchecked(t))
}

/// Which barrier invariant failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invariant {
    Symmetry,
    Normalization,
    Nonnegativity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub invariant: Invariant,
    pub residual: f64,
}

/// Measured residuals of all three barrier invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierResiduals {
    /// max |Q̂(t) − Q̂(π − t)| over the sampled points
    pub symmetry: f64,
    /// |∫Q̂ − 1|
    pub normalization: f64,
    /// min Q̂ over the sampled points (negative means a violation)
    pub min_value: f64,
}

pub fn barrier_residuals(shape: &BarrierShape) -> BarrierResiduals {
    match shape {
        BarrierShape::DeltaMidpoint => BarrierResiduals { symmetry: 0.0, normalization: 0.0, min_value: 0.0 },
        BarrierShape::Tabulated(table) => {
            let mut symmetry: f64 = 0.0;
            for &t in &table.t {
                symmetry = symmetry.max((table.eval(t) - table.eval(PI - t)).abs());
            }
            let min_value = table.v.iter().copied().fold(f64::INFINITY, f64::min);
            BarrierResiduals { symmetry, normalization: (table.integral() - 1.0).abs(), min_value }
        }
        _ => {
            let n = 1024;
            let mut symmetry: f64 = 0.0;
            let mut min_value = f64::INFINITY;
            for i in 0..=n {
                let t = PI * i as f64 / n as f64;
                let v = shape.value_unchecked(t);
                symmetry = symmetry.max((v - shape.value_unchecked(PI - t)).abs());
                min_value = min_value.min(v);
            }
            let area = shape.integrate_weighted(|_| 1.0);
            BarrierResiduals { symmetry, normalization: (area - 1.0).abs(), min_value }
        }
    }
}

/// Checks symmetry, normalization and nonnegativity (in that order) at
/// [`BARRIER_TOL`] and reports the first violation with its residual.
pub fn barrier_validate(shape: &BarrierShape) -> core::result::Result<(), Violation> {
    let r = barrier_residuals(shape);
    if r.symmetry > BARRIER_TOL {
        return Err(Violation { invariant: Invariant::Symmetry, residual: r.symmetry });
    }
    if r.normalization > BARRIER_TOL {
        return Err(Violation { invariant: Invariant::Normalization, residual: r.normalization });
    }
    if r.min_value < -BARRIER_TOL {
        return Err(Violation { invariant: Invariant::Nonnegativity, residual: -r.min_value });
    }
    Ok(())
}

/// Constant (λ, q) of one Hill's equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HillParams {
    pub lambda: f64,
    pub q: f64,
}

impl HillParams {
    pub fn new(lambda: f64, q: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain { what: "lambda", value: lambda });
        }
        if !q.is_finite() {
            return Err(Error::Domain { what: "q", value: q });
        }
        Ok(Self { lambda, q })
    }
}

/// Zero-mean distribution of the per-cycle perturbations ℓ_k or p_k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationDist {
    /// Uniform on [−A, A].
    UniformSymmetric { amplitude: f64 },
    /// Normal(0, s²).
    Gaussian { std_dev: f64 },
    /// ±A with equal probability.
    TwoPoint { amplitude: f64 },
}

impl PerturbationDist {
    pub const ZERO: Self = Self::TwoPoint { amplitude: 0.0 };

    /// Uniform distribution with the requested variance.
    pub fn uniform_with_variance(var: f64) -> Self {
        Self::UniformSymmetric { amplitude: (3.0 * var).sqrt() }
    }

    pub fn scale(&self) -> f64 {
        match *self {
            Self::UniformSymmetric { amplitude } | Self::TwoPoint { amplitude } => amplitude,
            Self::Gaussian { std_dev } => std_dev,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.scale();
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::Config { field: "scale", reason: "must be finite and non-negative" });
        }
        Ok(())
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            Self::UniformSymmetric { amplitude } => amplitude * amplitude / 3.0,
            Self::Gaussian { std_dev } => std_dev * std_dev,
            Self::TwoPoint { amplitude } => amplitude * amplitude,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::UniformSymmetric { amplitude } => amplitude * (2.0 * rng.random::<f64>() - 1.0),
            Self::Gaussian { std_dev } => {
                let z: f64 = StandardNormal.sample(rng);
                std_dev * z
            }
            Self::TwoPoint { amplitude } => {
                if rng.random::<bool>() {
                    amplitude
                } else {
                    -amplitude
                }
            }
        }
    }
}

/// Everything a seeded random-Hill run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: HillParams,
    pub barrier: BarrierShape,
    pub ell_dist: PerturbationDist,
    pub p_dist: PerturbationDist,
    pub n_cycles: u64,
    pub master_seed: u64,
    pub integrator_tol: f64,
    pub renorm_every: usize,
}

impl RunConfig {
    pub fn new(params: HillParams, barrier: BarrierShape, n_cycles: u64, master_seed: u64) -> Self {
        Self {
            params,
            barrier,
            ell_dist: PerturbationDist::ZERO,
            p_dist: PerturbationDist::ZERO,
            n_cycles,
            master_seed,
            integrator_tol: DEFAULT_INTEGRATOR_TOL,
            renorm_every: DEFAULT_RENORM_EVERY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        HillParams::new(self.params.lambda, self.params.q)
            .map_err(|_| Error::Config { field: "lambda", reason: "must be positive and finite" })?;
        self.ell_dist.validate().map_err(|_| Error::Config { field: "ell_dist", reason: "invalid scale" })?;
        self.p_dist.validate().map_err(|_| Error::Config { field: "p_dist", reason: "invalid scale" })?;
        if self.n_cycles < 1 {
            return Err(Error::Config { field: "n_cycles", reason: "must be at least 1" });
        }
        if !(self.integrator_tol > 0.0 && self.integrator_tol <= 1e-3) {
            return Err(Error::Config { field: "integrator_tol", reason: "must lie in (0, 1e-3]" });
        }
        if self.renorm_every < 1 {
            return Err(Error::Config { field: "renorm_every", reason: "must be at least 1" });
        }
        if barrier_validate(&self.barrier).is_err() {
            return Err(Error::Config { field: "barrier", reason: "fails shape validation" });
        }
        Ok(())
    }
}
