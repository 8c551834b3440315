//! Stochastic Hill's equation: coloured-noise paths, the Ξ moments, the map
//! onto equivalent random perturbations, and growth rates by either route.
//!
//! The noise is a stationary Ornstein–Uhlenbeck process sampled on a
//! uniform grid over the cycle and interpolated linearly in between, so
//! every realization is continuous and ordinary calculus applies.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

#[allow(unused_imports)]
use num_traits::Float;

use rand_distr::{Distribution, StandardNormal};

use crate::cycle::{first_order_coeffs, integrate_cycle, perturbed_elements, CycleSolution, FirstOrderCoeffs};
use crate::error::{Error, Result};
use crate::model::{BarrierShape, HillParams};
use crate::random::growth_small_fluctuation_cov;
use crate::rng;
use crate::xfer::{growth_product_cv, matrix_from_elements, GrowthEstimate, GrowthOptions, TransferMatrix};

/// Largest tolerated |det − 1| of a directly integrated noisy cycle.
pub const DET_DRIFT_TOL: f64 = 1e-7;
/// Relative size of I₁J₂ − I₂J₁ below which the moment system is singular.
pub const MOMENT_DEGENERACY: f64 = 1e-12;
/// Coarsest allowed sampling step.
pub const MAX_DT: f64 = PI / 256.0;

/// Where the noise enters the equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseForm {
    /// y'' + [λ + qQ̂]y = ξ
    Additive,
    /// y'' + [λ + (q + ξ)Q̂]y = 0
    Multiplicative,
}

/// The profile multiplying ξ in the multiplicative form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseCoupling {
    /// ξ rides on the barrier shape Q̂.
    Barrier,
    /// ξ enters the bracket directly (coupling profile ≡ 1).
    Unit,
}

/// Statistical parameters of the Ornstein–Uhlenbeck noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub tau_c: f64,
    pub sigma: f64,
    pub dt: f64,
    pub form: NoiseForm,
    pub coupling: NoiseCoupling,
}

impl NoiseConfig {
    pub fn new(tau_c: f64, sigma: f64, dt: f64, form: NoiseForm) -> Self {
        Self { tau_c, sigma, dt, form, coupling: NoiseCoupling::Barrier }
    }

    /// Multiplicative, barrier-coupled noise with the step picked by
    /// [`dt_for_tau`].
    pub fn multiplicative(tau_c: f64, sigma: f64) -> Self {
        Self::new(tau_c, sigma, dt_for_tau(tau_c), NoiseForm::Multiplicative)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_c > 0.0 && self.tau_c.is_finite()) {
            return Err(Error::Config { field: "tau_c", reason: "must be positive and finite" });
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config { field: "sigma", reason: "must be non-negative and finite" });
        }
        let slack = 1.0 + 1e-12;
        if !(self.dt > 0.0) || self.dt > self.tau_c / 4.0 * slack || self.dt > MAX_DT * slack {
            return Err(Error::Config { field: "dt", reason: "must satisfy 0 < dt <= min(tau_c/4, pi/256)" });
        }
        let n = PI / self.dt;
        if (n - n.round()).abs() > 1e-9 * n {
            return Err(Error::Config { field: "dt", reason: "pi/dt must be an integer" });
        }
        Ok(())
    }

    /// Number of sampling intervals per cycle.
    pub fn intervals(&self) -> usize {
        (PI / self.dt).round() as usize
    }

    /// The profile ξ multiplies, given the run's barrier.
    pub fn coupling_shape(&self, barrier: &BarrierShape) -> BarrierShape {
        match self.coupling {
            NoiseCoupling::Barrier => barrier.clone(),
            NoiseCoupling::Unit => unit_coupling(),
        }
    }
}

/// The largest step π/2ᵏ (k ≥ 8) not exceeding τ_c/4; these grids nest
/// with the dense base grid.
pub fn dt_for_tau(tau_c: f64) -> f64 {
    let mut dt = MAX_DT;
    while dt > tau_c / 4.0 && dt > 1e-6 {
        dt *= 0.5;
    }
    dt
}

/// The constant profile Q ≡ 1.
pub fn unit_coupling() -> BarrierShape {
    BarrierShape::tabulated(&[(0.0, 1.0), (PI, 1.0)]).expect("constant table is valid")
}

/// One cycle's noise realization on the grid t_i = iπ/n.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub samples: Vec<f64>,
    pub master_seed: u64,
    pub cycle: u64,
}

impl NoisePath {
    /// A path from explicit samples (grid spacing π/(len − 1)).
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Config { field: "samples", reason: "need at least two samples" });
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config { field: "samples", reason: "non-finite sample" });
        }
        Ok(Self { samples, master_seed: 0, cycle: 0 })
    }

    pub fn intervals(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn step(&self) -> f64 {
        PI / self.intervals() as f64
    }

    /// Linear interpolation of the samples at `t` in [0, π].
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.intervals();
        let x = (t / PI * n as f64).clamp(0.0, n as f64);
        let i = (x.floor() as usize).min(n - 1);
        let w = x - i as f64;
        self.samples[i] + w * (self.samples[i + 1] - self.samples[i])
    }

    /// ½[ξ(t) + ξ(π − t)], the part of the path seen by symmetric functionals.
    pub fn symmetrized(&self) -> Self {
        let n = self.samples.len();
        let samples = (0..n).map(|i| 0.5 * (self.samples[i] + self.samples[n - 1 - i])).collect();
        Self { samples, ..*self }
    }
}

/// Stationary OU path by exact discretization: ξ₀ ~ N(0, σ²), then
/// ξ_{n+1} = aξ_n + σ√(1−a²)·N(0, 1) with a = e^{−dt/τ_c}.
pub fn ou_path(config: &NoiseConfig, master_seed: u64, cycle: u64) -> NoisePath {
    let n = config.intervals();
    let mut samples = Vec::with_capacity(n + 1);
    if config.sigma == 0.0 {
        samples.resize(n + 1, 0.0);
        return NoisePath { samples, master_seed, cycle };
    }
    let mut rng = rng::stream(master_seed, rng::domain::NOISE, cycle);
    let a = (-config.dt / config.tau_c).exp();
    let b = config.sigma * (-(-2.0 * config.dt / config.tau_c).exp_m1()).sqrt();
    let z: f64 = StandardNormal.sample(&mut rng);
    let mut x = config.sigma * z;
    samples.push(x);
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(&mut rng);
        x = a * x + b * z;
        samples.push(x);
    }
    NoisePath { samples, master_seed, cycle }
}

/// The two stochastic moments (Ξ₁, Ξ₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiMoments {
    pub xi1: f64,
    pub xi2: f64,
}

impl XiMoments {
    pub fn scale(self, k: f64) -> Self {
        Self { xi1: self.xi1 * k, xi2: self.xi2 * k }
    }
}

/// Cubic Hermite interpolation of the base samples, with a parabola on the
/// one interval whose right-end derivative is a post-jump limit.
struct BaseInterp<'a> {
    base: &'a [[f64; 4]],
    h_base: f64,
    jump_node: Option<usize>,
}

impl BaseInterp<'_> {
    /// (y₀₁, y₀₂) at `t`.
    fn y0(&self, t: f64) -> (f64, f64) {
        let nb = self.base.len() - 1;
        let x = (t / self.h_base).clamp(0.0, nb as f64);
        let i = (x.floor() as usize).min(nb - 1);
        let s = x - i as f64;
        if s == 0.0 {
            return (self.base[i][0], self.base[i][2]);
        }
        if self.jump_node == Some(i + 1) && i >= 1 {
            let quad = |c: usize| {
                let (a, b, d) = (self.base[i - 1][c], self.base[i][c], self.base[i + 1][c]);
                let u = s + 1.0;
                a * (u - 1.0) * (u - 2.0) / 2.0 - b * u * (u - 2.0) + d * u * (u - 1.0) / 2.0
            };
            return (quad(0), quad(2));
        }
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let (a, b) = (&self.base[i], &self.base[i + 1]);
        let hb = self.h_base;
        (
            h00 * a[0] + h10 * hb * a[1] + h01 * b[0] + h11 * hb * b[1],
            h00 * a[2] + h10 * hb * a[3] + h01 * b[2] + h11 * hb * b[3],
        )
    }
}

/// Ξ as linear functionals of the path samples: Ξⱼ = Σᵢ aⱼ[i] ξᵢ.
///
/// The weights come from composite Simpson on a grid whose panels each span
/// one interval of the finer of the path and base grids, with ξ linear
/// between path nodes and y₀ⱼ Hermite-interpolated between base nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentKernel {
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
}

impl MomentKernel {
    /// Weights for paths with `path_intervals` intervals. Additive:
    /// Ξⱼ = ∫ y₀ⱼ ξ; multiplicative: Ξⱼ = −∫ C y₀ⱼ² ξ.
    pub fn new(base: &CycleSolution, coupling: &BarrierShape, form: NoiseForm, path_intervals: usize) -> Result<Self> {
        let m = path_intervals;
        let nb = base.sampled_y0.len() - 1;
        if m == 0 || !(nb.is_multiple_of(m) || m.is_multiple_of(nb)) {
            return Err(Error::GridMismatch { path: m, base: nb });
        }
        let mut a1 = alloc::vec![0.0; m + 1];
        let mut a2 = alloc::vec![0.0; m + 1];
        let mut spread = |t: f64, f1: f64, f2: f64| {
            let x = (t / PI * m as f64).clamp(0.0, m as f64);
            let i = (x.floor() as usize).min(m - 1);
            let w = x - i as f64;
            a1[i] += (1.0 - w) * f1;
            a1[i + 1] += w * f1;
            a2[i] += (1.0 - w) * f2;
            a2[i + 1] += w * f2;
        };
        if form == NoiseForm::Multiplicative && coupling.is_delta() {
            let mid = &base.sampled_y0[nb / 2];
            spread(FRAC_PI_2, -mid[0] * mid[0], -mid[2] * mid[2]);
            return Ok(Self { a1, a2 });
        }
        let interp = BaseInterp {
            base: &base.sampled_y0,
            h_base: base.sample_step(),
            jump_node: (nb.is_multiple_of(2) && jump_at_mid(base)).then_some(nb / 2),
        };
        let n = 2 * m.max(nb);
        let dx = PI / n as f64;
        for i in 0..=n {
            let t = i as f64 * dx;
            let sw = dx / 3.0
                * if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
            let (y1, y2) = interp.y0(t);
            match form {
                NoiseForm::Additive => spread(t, sw * y1, sw * y2),
                NoiseForm::Multiplicative => {
                    let c = -sw * coupling.value_unchecked(t);
                    spread(t, c * y1 * y1, c * y2 * y2)
                }
            }
        }
        Ok(Self { a1, a2 })
    }

    pub fn intervals(&self) -> usize {
        self.a1.len() - 1
    }

    pub fn apply(&self, path: &NoisePath) -> Result<XiMoments> {
        if path.samples.len() != self.a1.len() {
            return Err(Error::GridMismatch { path: path.intervals(), base: self.intervals() });
        }
        let dot = |a: &[f64]| a.iter().zip(&path.samples).map(|(w, x)| w * x).sum::<f64>();
        Ok(XiMoments { xi1: dot(&self.a1), xi2: dot(&self.a2) })
    }

    /// Exact covariance [[⟨Ξ₁²⟩, ⟨Ξ₁Ξ₂⟩], [·, ⟨Ξ₂²⟩]] of the moments under
    /// stationary OU noise with the given σ and τ_c.
    pub fn covariance(&self, sigma: f64, tau_c: f64) -> [[f64; 2]; 2] {
        let m = self.intervals();
        let r = (-PI / m as f64 / tau_c).exp();
        // Σ_ik aᵢ bₖ r^|i−k| via forward/backward recursions
        let cross = |a: &[f64], b: &[f64]| {
            let mut fwd = 0.0;
            let mut total = 0.0;
            for k in 0..=m {
                fwd = fwd * r + a[k];
                total += fwd * b[k];
            }
            let mut bwd = 0.0;
            for k in (0..=m).rev() {
                total += bwd * b[k];
                bwd = (bwd + a[k]) * r;
            }
            sigma * sigma * total
        };
        let c11 = cross(&self.a1, &self.a1);
        let c22 = cross(&self.a2, &self.a2);
        let c12 = cross(&self.a1, &self.a2);
        [[c11, c12], [c12, c22]]
    }
}

/// Ξⱼ = ∫ y₀ⱼ ξ dt (additive) or Ξⱼ = −∫ C y₀ⱼ² ξ dt (multiplicative, with
/// coupling profile C). See [`MomentKernel`] for the quadrature.
pub fn xi_moments(
    path: &NoisePath,
    base: &CycleSolution,
    coupling: &BarrierShape,
    form: NoiseForm,
) -> Result<XiMoments> {
    MomentKernel::new(base, coupling, form, path.intervals())?.apply(path)
}

/// Whether the base derivatives jump at π/2 (delta barrier with q ≠ 0).
fn jump_at_mid(base: &CycleSolution) -> bool {
    let s = &base.sampled_y0;
    let mid = (s.len() - 1) / 2;
    if mid < 2 {
        return false;
    }
    // compare the stored (right) derivative with a one-sided left estimate
    let h = base.sample_step();
    let left = (3.0 * s[mid][0] - 4.0 * s[mid - 1][0] + s[mid - 2][0]) / (2.0 * h);
    (left - s[mid][1]).abs() > 1e-3 * (1.0 + s[mid][1].abs())
}

/// Solves ℓIⱼ + pJⱼ = Ξⱼ for (ℓ, p).
pub fn equivalent_perturbations(xi: XiMoments, base: &CycleSolution) -> Result<(f64, f64)> {
    let d = base.i1 * base.j2 - base.i2 * base.j1;
    if !(d.abs() >= MOMENT_DEGENERACY * (base.i1 * base.j2).abs()) || d == 0.0 {
        return Err(Error::DegenerateMoments { det: d });
    }
    let ell = (base.j2 * xi.xi1 - base.j1 * xi.xi2) / d;
    let p = (base.i1 * xi.xi2 - base.i2 * xi.xi1) / d;
    Ok((ell, p))
}

/// The (ℓ, p) whose first-order random cycle reproduces the noisy cycle.
///
/// Integrating the noisy and random equations against the base solutions
/// gives boundary terms balanced by +Ξⱼ and by −(ℓIⱼ + pJⱼ) respectively,
/// so the matching perturbations solve ℓIⱼ + pJⱼ = −Ξⱼ.
pub fn induced_perturbations(xi: XiMoments, base: &CycleSolution) -> Result<(f64, f64)> {
    equivalent_perturbations(xi.scale(-1.0), base)
}

struct NoisyHill<'a> {
    lambda: f64,
    q: f64,
    shape: &'a BarrierShape,
    coupling: &'a BarrierShape,
    path: &'a NoisePath,
}

impl crate::ode::OdeSystem<4> for NoisyHill<'_> {
    fn rhs(&self, t: f64, s: &[f64; 4], d: &mut [f64; 4]) {
        let k = self.lambda
            + self.q * self.shape.value_unchecked(t)
            + self.path.value_at(t) * self.coupling.value_unchecked(t);
        d[0] = s[1];
        d[1] = -k * s[0];
        d[2] = s[3];
        d[3] = -k * s[2];
    }
}

/// Monodromy matrix [[y₁, y₂], [ẏ₁, ẏ₂]](π) of y'' + [λ + qQ̂ + ξC]y = 0,
/// with C the coupling profile and ξ interpolated linearly from the path.
pub fn integrate_stochastic_cycle(
    params: &HillParams,
    shape: &BarrierShape,
    coupling: &BarrierShape,
    path: &NoisePath,
    form: NoiseForm,
    tol: f64,
) -> Result<TransferMatrix> {
    if form == NoiseForm::Additive {
        return Err(Error::UnsupportedForm);
    }
    let n = path.intervals();
    let mut breaks: Vec<f64> = (1..n).map(|i| PI * i as f64 / n as f64).collect();
    breaks.extend_from_slice(shape.breakpoints());
    breaks.extend_from_slice(coupling.breakpoints());
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-13);

    let sys = NoisyHill { lambda: params.lambda, q: params.q, shape, coupling, path };
    let solver = crate::ode::Dop853::new(tol);
    let kick = if shape.is_delta() { params.q } else { 0.0 }
        + if coupling.is_delta() { path.value_at(FRAC_PI_2) } else { 0.0 };
    let start = [1.0, 0.0, 0.0, 1.0];
    let end = if shape.is_delta() || coupling.is_delta() {
        let (left, right): (Vec<f64>, Vec<f64>) = breaks.iter().partition(|&&b| b < FRAC_PI_2);
        let mut s = solver.integrate(&sys, 0.0, FRAC_PI_2, start, &left)?;
        s[1] -= kick * s[0];
        s[3] -= kick * s[2];
        solver.integrate(&sys, FRAC_PI_2, PI, s, &right)?
    } else {
        solver.integrate(&sys, 0.0, PI, start, &breaks)?
    };
    let m = TransferMatrix::new(end[0], end[2], end[1], end[3]);
    let drift = (m.det() - 1.0).abs();
    if !(drift <= DET_DRIFT_TOL) {
        return Err(Error::Accuracy { drift });
    }
    Ok(m)
}

/// Growth-rate route for the stochastic equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StochasticMethod {
    /// Map each path to (ℓ_k, p_k) and multiply first-order random matrices.
    Equivalence,
    /// Integrate every noisy cycle directly.
    Direct,
}

/// A stochastic Hill's equation with its base cycle precomputed.
#[derive(Debug, Clone)]
pub struct StochasticRun {
    pub params: HillParams,
    pub shape: BarrierShape,
    pub coupling: BarrierShape,
    pub noise: NoiseConfig,
    pub base: CycleSolution,
    /// `None` for a degenerate base, where only the direct route works.
    pub coeffs: Option<FirstOrderCoeffs>,
    pub kernel: MomentKernel,
    pub tol: f64,
}

impl StochasticRun {
    pub fn new(params: HillParams, shape: BarrierShape, noise: NoiseConfig, tol: f64) -> Result<Self> {
        noise.validate()?;
        let base = integrate_cycle(&params, &shape, tol)?;
        let coeffs = first_order_coeffs(&base).ok();
        let coupling = noise.coupling_shape(&shape);
        let kernel = MomentKernel::new(&base, &coupling, noise.form, noise.intervals())?;
        Ok(Self { params, shape, coupling, noise, base, coeffs, kernel, tol })
    }

    pub fn path(&self, seed: u64, k: u64) -> NoisePath {
        ou_path(&self.noise, seed, k)
    }

    pub fn moments(&self, path: &NoisePath) -> Result<XiMoments> {
        self.kernel.apply(path)
    }

    /// Exact (⟨ℓ²⟩, ⟨p²⟩, ⟨ℓp⟩) of the induced perturbations.
    pub fn perturbation_covariance(&self) -> Result<(f64, f64, f64)> {
        let b = &self.base;
        let d = b.i1 * b.j2 - b.i2 * b.j1;
        if !(d.abs() >= MOMENT_DEGENERACY * (b.i1 * b.j2).abs()) || d == 0.0 {
            return Err(Error::DegenerateMoments { det: d });
        }
        let [[c11, c12], [_, c22]] = self.kernel.covariance(self.noise.sigma, self.noise.tau_c);
        // ℓ = u·Ξ, p = v·Ξ
        let u = [b.j2 / d, -b.j1 / d];
        let v = [-b.i2 / d, b.i1 / d];
        let quad = |x: [f64; 2], y: [f64; 2]| x[0] * y[0] * c11 + (x[0] * y[1] + x[1] * y[0]) * c12 + x[1] * y[1] * c22;
        Ok((quad(u, u), quad(v, v), quad(u, v)))
    }

    /// Induced (ℓ_k, p_k) of cycle `k`.
    pub fn perturbation(&self, seed: u64, k: u64) -> Result<(f64, f64)> {
        induced_perturbations(self.moments(&self.path(seed, k))?, &self.base)
    }

    /// First-order random matrix equivalent to cycle `k`.
    pub fn equivalence_matrix(&self, seed: u64, k: u64) -> Result<TransferMatrix> {
        let coeffs = self.coeffs.as_ref().ok_or(Error::DegenerateBase {
            element: "h0 or g0",
            value: self.base.h.abs().min(self.base.g.abs()),
            threshold: crate::cycle::BASE_DEGENERACY,
        })?;
        let (ell, p) = self.perturbation(seed, k)?;
        let (h, g) = perturbed_elements(&self.base, coeffs, ell, p);
        matrix_from_elements(h, g)
    }

    /// Directly integrated noisy matrix of cycle `k`.
    pub fn direct_matrix(&self, seed: u64, k: u64) -> Result<TransferMatrix> {
        let path = self.path(seed, k);
        integrate_stochastic_cycle(&self.params, &self.shape, &self.coupling, &path, self.noise.form, self.tol)
    }

    pub fn matrix(&self, method: StochasticMethod, seed: u64, k: u64) -> Result<TransferMatrix> {
        match method {
            StochasticMethod::Equivalence => self.equivalence_matrix(seed, k),
            StochasticMethod::Direct => self.direct_matrix(seed, k),
        }
    }
}

/// Growth rate of the stochastic equation by the chosen route. Both routes
/// draw the same paths for the same seed.
pub fn growth_stochastic(
    run: &StochasticRun,
    n_cycles: u64,
    seed: u64,
    method: StochasticMethod,
) -> Result<GrowthEstimate> {
    let matrices = (0..n_cycles).map(|k| run.matrix(method, seed, k)).collect::<Result<Vec<_>>>()?;
    growth_product_cv(&matrices, seed, &GrowthOptions::default())
}

/// Sample statistics of the induced perturbations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalentStats {
    pub mean_ell: f64,
    pub mean_p: f64,
    pub se_mean_ell: f64,
    pub se_mean_p: f64,
    /// ⟨ℓ²⟩ and ⟨p²⟩ about zero (the process is zero-mean).
    pub var_ell: f64,
    pub var_p: f64,
    pub cov: f64,
    /// The small-fluctuation growth rate with the measured covariance;
    /// `None` for a degenerate base.
    pub gamma_small_fluctuation: Option<f64>,
    pub n_cycles: u64,
}

/// Moments of (ℓ_k, p_k) over `n_cycles` paths.
pub fn equivalent_statistics(run: &StochasticRun, n_cycles: u64, seed: u64) -> Result<EquivalentStats> {
    if n_cycles < 2 {
        return Err(Error::Config { field: "n_cycles", reason: "need at least two samples" });
    }
    let (mut sl, mut sp, mut sll, mut spp, mut slp) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..n_cycles {
        let (l, p) = run.perturbation(seed, k)?;
        sl += l;
        sp += p;
        sll += l * l;
        spp += p * p;
        slp += l * p;
    }
    let n = n_cycles as f64;
    let (mean_ell, mean_p) = (sl / n, sp / n);
    let (var_ell, var_p, cov) = (sll / n, spp / n, slp / n);
    let se = |m2: f64, m: f64| ((m2 - m * m).max(0.0) / (n - 1.0)).sqrt();
    let gamma_small_fluctuation = match &run.coeffs {
        Some(c) => Some(growth_small_fluctuation_cov(&run.base, c, var_ell, var_p, cov)?),
        None => None,
    };
    Ok(EquivalentStats {
        mean_ell,
        mean_p,
        se_mean_ell: se(var_ell, mean_ell),
        se_mean_p: se(var_p, mean_p),
        var_ell,
        var_p,
        cov,
        gamma_small_fluctuation,
        n_cycles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DEFAULT_INTEGRATOR_TOL as TOL;

    fn base(lambda: f64, q: f64, shape: &BarrierShape) -> CycleSolution {
        integrate_cycle(&HillParams::new(lambda, q).unwrap(), shape, TOL).unwrap()
    }

    fn ou(sigma: f64, tau: f64) -> NoiseConfig {
        NoiseConfig::new(tau, sigma, PI / 512.0, NoiseForm::Multiplicative)
    }

    #[test]
    fn config_validation() {
        assert!(ou(0.05, 0.2).validate().is_ok());
        assert!(matches!(ou(0.05, 0.01).validate(), Err(Error::Config { field: "dt", .. })));
        assert!(matches!(ou(-1.0, 0.2).validate(), Err(Error::Config { field: "sigma", .. })));
        assert!(matches!(ou(0.1, 0.0).validate(), Err(Error::Config { field: "tau_c", .. })));
        let mut c = ou(0.1, 0.2);
        c.dt = 0.005;
        assert!(matches!(c.validate(), Err(Error::Config { field: "dt", .. })));
        c.dt = PI / 100.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn dt_for_tau_nests() {
        assert_eq!(dt_for_tau(0.4), PI / 256.0);
        assert_eq!(dt_for_tau(0.1), PI / 256.0);
        assert_eq!(dt_for_tau(0.025), PI / 512.0);
        for tau in [0.4, 0.1, 0.025, 0.003] {
            let c = NoiseConfig::multiplicative(tau, 0.1);
            c.validate().unwrap();
            assert_eq!(2048 % c.intervals().min(2048), 0);
        }
    }

    #[test]
    fn zero_sigma_gives_zero_path() {
        let p = ou_path(&ou(0.0, 0.2), 3, 7);
        assert_eq!(p.samples.len(), 513);
        assert!(p.samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn ou_paths_are_reproducible() {
        let c = ou(0.1, 0.2);
        assert_eq!(ou_path(&c, 1, 2), ou_path(&c, 1, 2));
        assert_ne!(ou_path(&c, 1, 2).samples, ou_path(&c, 1, 3).samples);
    }

    #[test]
    fn constant_additive_noise_matches_closed_form() {
        for lambda in [0.5, 2.3, 7.0] {
            let b = base(lambda, 0.0, &BarrierShape::Sin2);
            for n in [256, 2048, 4096] {
                let c = 0.37;
                let path = NoisePath::from_samples(alloc::vec![c; n + 1]).unwrap();
                let xi = xi_moments(&path, &b, &BarrierShape::Sin2, NoiseForm::Additive).unwrap();
                let w = lambda.sqrt();
                assert!((xi.xi1 - c * (w * PI).sin() / w).abs() < 1e-9, "{lambda} {n}");
                assert!((xi.xi2 - c * (1.0 - (w * PI).cos()) / lambda).abs() < 1e-9, "{lambda} {n}");
            }
        }
    }

    #[test]
    fn constant_multiplicative_noise_gives_minus_moments() {
        let b = base(0.5, 0.3, &BarrierShape::Sin4);
        let path = NoisePath::from_samples(alloc::vec![2.0; 513]).unwrap();
        let xi = xi_moments(&path, &b, &BarrierShape::Sin4, NoiseForm::Multiplicative).unwrap();
        assert!((xi.xi1 + 2.0 * b.j1).abs() < 1e-9);
        assert!((xi.xi2 + 2.0 * b.j2).abs() < 1e-9);
        // so the induced perturbation is p = ξ exactly
        let (l, p) = induced_perturbations(xi, &b).unwrap();
        assert!(l.abs() < 1e-7 && (p - 2.0).abs() < 1e-7, "{l} {p}");
    }

    #[test]
    fn delta_base_additive_moments_use_continuous_values() {
        let b = base(1.7, 0.8, &BarrierShape::DeltaMidpoint);
        let path = NoisePath::from_samples(alloc::vec![1.0; 257]).unwrap();
        let xi = xi_moments(&path, &b, &BarrierShape::DeltaMidpoint, NoiseForm::Additive).unwrap();
        // ∫ y₀₁ = (ẏ₁(π) − ẏ₁(0) + q y₁(π/2)) ... via the equation: ∫(λ y) = −∫ y'' − q y(π/2)
        let mid = &b.sampled_y0[1024];
        let int_y1 = (-(b.g - 0.0) - 0.8 * mid[0]) / 1.7;
        let int_y2 = (-(b.h2 - 1.0) - 0.8 * mid[2]) / 1.7;
        assert!((xi.xi1 - int_y1).abs() < 1e-9, "{} {}", xi.xi1, int_y1);
        assert!((xi.xi2 - int_y2).abs() < 1e-9, "{} {}", xi.xi2, int_y2);
    }

    #[test]
    fn zero_path_gives_zero_moments() {
        let b = base(0.5, 0.0, &BarrierShape::Sin2);
        let path = ou_path(&ou(0.0, 0.2), 0, 0);
        for form in [NoiseForm::Additive, NoiseForm::Multiplicative] {
            let xi = xi_moments(&path, &b, &BarrierShape::Sin2, form).unwrap();
            assert_eq!(xi, XiMoments { xi1: 0.0, xi2: 0.0 });
            assert_eq!(equivalent_perturbations(xi, &b).unwrap(), (0.0, 0.0));
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let b = base(0.5, 0.0, &BarrierShape::Sin2);
        let path = NoisePath::from_samples(alloc::vec![0.0; 301]).unwrap();
        assert_eq!(
            xi_moments(&path, &b, &BarrierShape::Sin2, NoiseForm::Additive),
            Err(Error::GridMismatch { path: 300, base: 2048 })
        );
    }

    #[test]
    fn equivalent_perturbations_inverts_the_moment_system() {
        let b = base(0.5, 0.2, &BarrierShape::Sin2);
        let (l, p) = equivalent_perturbations(XiMoments { xi1: b.i1, xi2: b.i2 }, &b).unwrap();
        assert!((l - 1.0).abs() < 1e-12 && p.abs() < 1e-12);
        for (ls, ps) in [(0.3, -0.7), (-1e-3, 2e-4), (5.0, 5.0)] {
            let xi = XiMoments { xi1: ls * b.i1 + ps * b.j1, xi2: ls * b.i2 + ps * b.j2 };
            let (l, p) = equivalent_perturbations(xi, &b).unwrap();
            assert!((l - ls).abs() < 1e-12 * (1.0 + ls.abs()) && (p - ps).abs() < 1e-12 * (1.0 + ps.abs()));
        }
    }

    #[test]
    fn delta_base_has_degenerate_moments_only_when_expected() {
        // a delta barrier still yields a regular moment system
        let b = base(0.5, 0.2, &BarrierShape::DeltaMidpoint);
        assert!(equivalent_perturbations(XiMoments { xi1: 1.0, xi2: 1.0 }, &b).is_ok());
        let mut d = b.clone();
        d.j1 = d.i1;
        d.j2 = d.i2;
        assert!(matches!(
            equivalent_perturbations(XiMoments { xi1: 1.0, xi2: 1.0 }, &d),
            Err(Error::DegenerateMoments { .. })
        ));
    }

    #[test]
    fn zero_path_reproduces_base_cycle() {
        for shape in [BarrierShape::Sin2, BarrierShape::Sin4, BarrierShape::DeltaMidpoint] {
            let params = HillParams::new(0.7, 0.4).unwrap();
            let b = integrate_cycle(&params, &shape, TOL).unwrap();
            let path = ou_path(&ou(0.0, 0.2), 0, 0);
            let m = integrate_stochastic_cycle(&params, &shape, &shape, &path, NoiseForm::Multiplicative, TOL).unwrap();
            assert!((m.m11 - b.h).abs() < 1e-10 && (m.m21 - b.g).abs() < 1e-10, "{shape:?}");
            assert!((m.m22 - b.h).abs() < 1e-10 && (m.m12 - b.y2pi).abs() < 1e-10, "{shape:?}");
        }
    }

    #[test]
    fn additive_form_has_no_matrix() {
        let params = HillParams::new(0.5, 0.0).unwrap();
        let path = ou_path(&ou(0.1, 0.2), 0, 0);
        let r = integrate_stochastic_cycle(
            &params,
            &BarrierShape::Sin2,
            &BarrierShape::Sin2,
            &path,
            NoiseForm::Additive,
            TOL,
        );
        assert_eq!(r, Err(Error::UnsupportedForm));
    }

    #[test]
    fn constant_noise_shifts_q() {
        let params = HillParams::new(0.5, 0.1).unwrap();
        let path = NoisePath::from_samples(alloc::vec![0.25; 257]).unwrap();
        let m = integrate_stochastic_cycle(
            &params,
            &BarrierShape::Sin2,
            &BarrierShape::Sin2,
            &path,
            NoiseForm::Multiplicative,
            TOL,
        )
        .unwrap();
        let b = integrate_cycle(&HillParams::new(0.5, 0.35).unwrap(), &BarrierShape::Sin2, TOL).unwrap();
        assert!((m.m11 - b.h).abs() < 1e-10 && (m.m21 - b.g).abs() < 1e-10);
        let unit = integrate_stochastic_cycle(
            &params,
            &BarrierShape::Sin2,
            &unit_coupling(),
            &path,
            NoiseForm::Multiplicative,
            TOL,
        )
        .unwrap();
        let shifted = integrate_cycle(&HillParams::new(0.75, 0.1).unwrap(), &BarrierShape::Sin2, TOL).unwrap();
        assert!((unit.m11 - shifted.h).abs() < 1e-10 && (unit.m21 - shifted.g).abs() < 1e-10);
    }

    #[test]
    fn noisy_cycles_keep_unit_determinant() {
        let params = HillParams::new(0.5, 0.0).unwrap();
        let c = ou(0.05, 0.2);
        for k in 0..20 {
            let m = integrate_stochastic_cycle(
                &params,
                &BarrierShape::Sin2,
                &BarrierShape::Sin2,
                &ou_path(&c, 9, k),
                c.form,
                TOL,
            )
            .unwrap();
            assert!((m.det() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn first_order_equivalence_error_is_quadratic_in_sigma() {
        let params = HillParams::new(0.5, 0.0).unwrap();
        let shape = BarrierShape::Sin2;
        let b = integrate_cycle(&params, &shape, TOL).unwrap();
        let coeffs = first_order_coeffs(&b).unwrap();
        let unit = ou_path(&ou(1.0, 0.2), 4, 0);
        let mut errs = Vec::new();
        for sigma in [0.04, 0.02, 0.01] {
            let path = NoisePath { samples: unit.samples.iter().map(|x| x * sigma).collect(), ..unit };
            let m =
                integrate_stochastic_cycle(&params, &shape, &shape, &path, NoiseForm::Multiplicative, 1e-12).unwrap();
            let xi = xi_moments(&path, &b, &shape, NoiseForm::Multiplicative).unwrap();
            let (l, p) = induced_perturbations(xi, &b).unwrap();
            let (h, g) = perturbed_elements(&b, &coeffs, l, p);
            // the matched functional of the two matrices: h₀δg − g₀δh
            let direct = b.h * (m.m21 - b.g) - b.g * (m.m11 - b.h);
            let equiv = b.h * (g - b.g) - b.g * (h - b.h);
            errs.push((direct - equiv).abs());
        }
        for w in errs.windows(2) {
            let slope = (w[0] / w[1]).log2();
            assert!((slope - 2.0).abs() < 0.2, "{errs:?}");
        }
    }

    #[test]
    fn induced_perturbations_have_zero_mean() {
        let run =
            StochasticRun::new(HillParams::new(0.5, 0.0).unwrap(), BarrierShape::Sin2, ou(0.05, 0.2), TOL).unwrap();
        let s = equivalent_statistics(&run, 2000, 11).unwrap();
        assert!(s.mean_ell.abs() < 4.0 * s.se_mean_ell);
        assert!(s.mean_p.abs() < 4.0 * s.se_mean_p);
        assert!(s.var_ell > 0.0 && s.var_p > 0.0);
        assert!(s.gamma_small_fluctuation.unwrap() > 0.0);
    }

    #[test]
    fn kernel_covariance_matches_sampling() {
        let run =
            StochasticRun::new(HillParams::new(0.5, 0.0).unwrap(), BarrierShape::Sin2, ou(0.05, 0.2), TOL).unwrap();
        let (vl, vp, c) = run.perturbation_covariance().unwrap();
        let s = equivalent_statistics(&run, 4000, 5).unwrap();
        // sample second moments carry ~√(2/N) ≈ 2.2% relative noise
        assert!((s.var_ell / vl - 1.0).abs() < 0.1, "{} {vl}", s.var_ell);
        assert!((s.var_p / vp - 1.0).abs() < 0.1, "{} {vp}", s.var_p);
        assert!((s.cov / c - 1.0).abs() < 0.15, "{} {c}", s.cov);
    }

    #[test]
    fn white_limit_covariance_scales_with_tau() {
        // for τ_c ≪ dt-resolved cycle the kernel covariance tends to 2σ²τ_c Σ a²/dt
        let b = base(0.5, 0.0, &BarrierShape::Sin2);
        let k = MomentKernel::new(&b, &BarrierShape::Sin2, NoiseForm::Multiplicative, 2048).unwrap();
        let c1 = k.covariance(1.0, 0.02)[0][0];
        let c2 = k.covariance(1.0, 0.01)[0][0];
        assert!((c1 / c2 - 2.0).abs() < 0.05, "{}", c1 / c2);
    }

    #[test]
    fn zero_noise_growth_is_zero() {
        let run =
            StochasticRun::new(HillParams::new(0.5, 0.0).unwrap(), BarrierShape::Sin2, ou(0.0, 0.2), TOL).unwrap();
        for method in [StochasticMethod::Equivalence, StochasticMethod::Direct] {
            let g = growth_stochastic(&run, 256, 1, method).unwrap();
            assert!(g.gamma.abs() <= 3.0 * g.stderr + 1e-12, "{g:?}");
        }
    }
}
