//! Random Hill's equation: per-cycle parameter draws, the η perturbation of
//! the elliptical length parameter, closed-form growth rates and direct
//! Monte Carlo growth.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::cycle::{
    cycle_elements, first_order_coeffs, integrate_cycle, j_factor, perturbed_elements, small_q_from_moments,
    zeroth_order_moments, CycleSolution, FirstOrderCoeffs, SmallQMode, BASE_DEGENERACY,
};
use crate::error::{Error, Result};
use crate::model::{BarrierShape, HillParams, PerturbationDist};
use crate::rng;
use crate::xfer::{
    growth_from_eta, growth_product_cv, matrix_from_elements, GrowthEstimate, GrowthOptions, TransferMatrix,
};

/// How the per-cycle matrix elements are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementMode {
    /// Integrate every cycle at (λ + ℓ_k, q + p_k).
    Exact,
    /// First-order expansion about the base cycle.
    FirstOrder,
    /// Small-q formulas about the free solution, first order in q_k.
    SmallQFirstOrder,
    /// Small-q formulas keeping the q_k² terms.
    SmallQGeneralized,
}

/// A random Hill's equation: base cycle, perturbation laws and element mode.
#[derive(Debug, Clone)]
pub struct RandomHillRun {
    pub params: HillParams,
    pub shape: BarrierShape,
    pub base: CycleSolution,
    /// `None` when the base is degenerate (|h₀| or |g₀| tiny); only the exact
    /// mode works then.
    pub coeffs: Option<FirstOrderCoeffs>,
    pub ell_dist: PerturbationDist,
    pub p_dist: PerturbationDist,
    pub mode: ElementMode,
    pub tol: f64,
    free_j: (f64, f64),
}

impl RandomHillRun {
    pub fn new(
        params: HillParams,
        shape: BarrierShape,
        ell_dist: PerturbationDist,
        p_dist: PerturbationDist,
        mode: ElementMode,
        tol: f64,
    ) -> Result<Self> {
        ell_dist.validate()?;
        p_dist.validate()?;
        let base = integrate_cycle(&params, &shape, tol)?;
        let coeffs = first_order_coeffs(&base).ok();
        let mut free_j = (0.0, 0.0);
        match mode {
            ElementMode::FirstOrder => {
                first_order_coeffs(&base)?;
            }
            ElementMode::SmallQFirstOrder | ElementMode::SmallQGeneralized => {
                if ell_dist.second_moment() != 0.0 {
                    return Err(Error::Config { field: "ell_dist", reason: "small-q modes keep lambda fixed" });
                }
                let [_, _, j1, j2] = zeroth_order_moments(params.lambda, &shape);
                free_j = (j1, j2);
            }
            ElementMode::Exact => {}
        }
        Ok(Self { params, shape, base, coeffs, ell_dist, p_dist, mode, tol, free_j })
    }

    /// (ℓ_k, p_k) for cycle `k`.
    pub fn draw(&self, seed: u64, k: u64) -> (f64, f64) {
        let ell = self.ell_dist.sample(&mut rng::stream(seed, rng::domain::ELL, k));
        let p = self.p_dist.sample(&mut rng::stream(seed, rng::domain::P, k));
        (ell, p)
    }

    /// (h, g) of a cycle perturbed by (ℓ, p) under this run's mode.
    pub fn elements_for(&self, ell: f64, p: f64) -> Result<(f64, f64)> {
        match self.mode {
            ElementMode::Exact => {
                let lambda = self.params.lambda + ell;
                cycle_elements(&HillParams { lambda, q: self.params.q + p }, &self.shape, self.tol)
            }
            ElementMode::FirstOrder => {
                let coeffs = self.coeffs.as_ref().ok_or(Error::DegenerateBase {
                    element: "h0/g0",
                    value: self.base.h.abs().min(self.base.g.abs()),
                    threshold: BASE_DEGENERACY,
                })?;
                Ok(perturbed_elements(&self.base, coeffs, ell, p))
            }
            ElementMode::SmallQFirstOrder => small_q_from_moments(
                self.params.lambda,
                self.params.q + p,
                self.free_j.0,
                self.free_j.1,
                SmallQMode::FirstOrder,
            ),
            ElementMode::SmallQGeneralized => small_q_from_moments(
                self.params.lambda,
                self.params.q + p,
                self.free_j.0,
                self.free_j.1,
                SmallQMode::Generalized,
            ),
        }
    }

    /// (h_k, g_k) of cycle `k`.
    pub fn elements(&self, seed: u64, k: u64) -> Result<(f64, f64)> {
        let (ell, p) = self.draw(seed, k);
        if self.mode == ElementMode::Exact && !(self.params.lambda + ell > 0.0) {
            return Err(Error::NonPositiveDraw { cycle: k, value: self.params.lambda + ell });
        }
        self.elements_for(ell, p)
    }

    pub fn matrix(&self, seed: u64, k: u64) -> Result<TransferMatrix> {
        let (h, g) = self.elements(seed, k)?;
        matrix_from_elements(h, g)
    }
}

fn stable_base(h0: f64, g0: f64) -> Result<()> {
    if !(h0.abs() < 1.0) {
        return Err(Error::NotElliptic { h: h0 });
    }
    if h0.abs() < BASE_DEGENERACY {
        return Err(Error::DegenerateBase { element: "h0", value: h0.abs(), threshold: BASE_DEGENERACY });
    }
    if g0.abs() < BASE_DEGENERACY {
        return Err(Error::DegenerateBase { element: "g0", value: g0.abs(), threshold: BASE_DEGENERACY });
    }
    Ok(())
}

/// Sensitivities (A, B) of η to ℓ and p: η = Aℓ + Bp.
pub fn eta_sensitivities(base: &CycleSolution, coeffs: &FirstOrderCoeffs) -> Result<(f64, f64)> {
    let (h0, g0) = (base.h, base.g);
    stable_base(h0, g0)?;
    let k = h0 / (1.0 - h0 * h0);
    Ok((k * coeffs.x + coeffs.w / g0, k * coeffs.y + coeffs.z / g0))
}

/// Relative change η of the elliptical length parameter for a cycle
/// perturbed by (ℓ, p), to first order.
pub fn eta_of_perturbation(base: &CycleSolution, coeffs: &FirstOrderCoeffs, ell: f64, p: f64) -> Result<f64> {
    let (a, b) = eta_sensitivities(base, coeffs)?;
    Ok(a * ell + b * p)
}

/// Leading-order growth rate for independent ℓ_k, p_k.
pub fn growth_small_fluctuation(
    base: &CycleSolution,
    coeffs: &FirstOrderCoeffs,
    var_ell: f64,
    var_p: f64,
) -> Result<f64> {
    growth_small_fluctuation_cov(base, coeffs, var_ell, var_p, 0.0)
}

/// Leading-order growth rate ½(1 − h₀²)⟨(Aℓ + Bp)²⟩ when ℓ_k and p_k are
/// correlated with covariance `cov`.
pub fn growth_small_fluctuation_cov(
    base: &CycleSolution,
    coeffs: &FirstOrderCoeffs,
    var_ell: f64,
    var_p: f64,
    cov: f64,
) -> Result<f64> {
    if !(var_ell >= 0.0 && var_p >= 0.0) {
        return Err(Error::Domain { what: "variance", value: var_ell.min(var_p) });
    }
    let (a, b) = eta_sensitivities(base, coeffs)?;
    let h0 = base.h;
    Ok(0.5 * (1.0 - h0 * h0) * (a * a * var_ell + 2.0 * a * b * cov + b * b * var_p))
}

/// Small-q growth rate log[1 + ⟨q²⟩J²/(8λ)] at fixed λ.
pub fn growth_small_q(lambda: f64, mean_q_sq: f64, shape: &BarrierShape) -> f64 {
    let j = j_factor(lambda, shape);
    (mean_q_sq / (8.0 * lambda) * j * j).ln_1p()
}

/// Direct Monte Carlo growth rate from the product of per-cycle matrices.
pub fn growth_direct_random(run: &RandomHillRun, n_cycles: u64, seed: u64) -> Result<GrowthEstimate> {
    let matrices = (0..n_cycles).map(|k| run.matrix(seed, k)).collect::<Result<Vec<_>>>()?;
    growth_product_cv(&matrices, seed, &GrowthOptions::default())
}

/// Growth rate from sampled η_k and θ_k fed through log(1 + ½⟨η²⟩⟨sin²θ⟩).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaSampleEstimate {
    pub gamma: f64,
    pub stderr: f64,
    pub mean_eta_sq: f64,
    pub mean_sin2theta: f64,
    pub n_cycles: u64,
}

/// Samples η_k = L_k/L₀ − 1 and sin²θ_k from the run's per-cycle elements.
/// L₀ is the length parameter of the unperturbed cycle in the same mode.
pub fn growth_eta_sampled(run: &RandomHillRun, n_cycles: u64, seed: u64) -> Result<EtaSampleEstimate> {
    if n_cycles < 2 {
        return Err(Error::Config { field: "n_cycles", reason: "need at least two samples" });
    }
    let length = |h: f64, g: f64| -> Result<f64> {
        if !(h.abs() < 1.0) {
            return Err(Error::NotElliptic { h });
        }
        Ok((1.0 - h * h).sqrt() / g)
    };
    let (h0, g0) = run.elements_for(0.0, 0.0)?;
    let l0 = length(h0, g0)?;
    let (mut s_eta2, mut s_eta4, mut s_sin2) = (0.0, 0.0, 0.0);
    for k in 0..n_cycles {
        let (h, g) = run.elements(seed, k)?;
        let eta = length(h, g)? / l0 - 1.0;
        let e2 = eta * eta;
        s_eta2 += e2;
        s_eta4 += e2 * e2;
        s_sin2 += 1.0 - h * h;
    }
    let n = n_cycles as f64;
    let mean_eta_sq = s_eta2 / n;
    let mean_sin2theta = s_sin2 / n;
    let var_eta2 = (s_eta4 / n - mean_eta_sq * mean_eta_sq).max(0.0) * n / (n - 1.0);
    let gamma = growth_from_eta(mean_eta_sq, mean_sin2theta);
    // delta method on the dominant ⟨η²⟩ fluctuation
    let stderr = 0.5 * mean_sin2theta * (var_eta2 / n).sqrt() / (1.0 + 0.5 * mean_eta_sq * mean_sin2theta);
    Ok(EtaSampleEstimate { gamma, stderr, mean_eta_sq, mean_sin2theta, n_cycles })
}

/// The free-oscillation angle φ = √λ π.
pub fn phi(lambda: f64) -> f64 {
    lambda.sqrt() * PI
}
