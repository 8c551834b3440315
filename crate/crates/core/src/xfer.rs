//! Transfer matrices, the elliptical-rotation form and the growth-rate
//! engine for long matrix products.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// |g| below this cannot produce a transfer matrix.
pub const SINGULAR_G: f64 = 1e-12;
/// Batches used for the batch-means error bar.
pub const N_BATCHES: u64 = 32;

/// Unit-determinant 2×2 map acting on (y, ẏ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl TransferMatrix {
    pub const IDENTITY: Self = Self { m11: 1.0, m12: 0.0, m21: 0.0, m22: 1.0 };

    pub fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.m11 * v[0] + self.m12 * v[1], self.m21 * v[0] + self.m22 * v[1]]
    }

    /// `self · rhs`
    pub fn mul(&self, rhs: &Self) -> Self {
        Self {
            m11: self.m11 * rhs.m11 + self.m12 * rhs.m21,
            m12: self.m11 * rhs.m12 + self.m12 * rhs.m22,
            m21: self.m21 * rhs.m11 + self.m22 * rhs.m21,
            m22: self.m21 * rhs.m12 + self.m22 * rhs.m22,
        }
    }

    fn scaled(&self, k: f64) -> Self {
        Self::new(self.m11 * k, self.m12 * k, self.m21 * k, self.m22 * k)
    }

    fn inverse(&self) -> Self {
        let d = self.det();
        Self::new(self.m22 / d, -self.m12 / d, -self.m21 / d, self.m11 / d)
    }
}

/// The symmetric one-cycle map [[h, (h²−1)/g], [g, h]].
pub fn matrix_from_elements(h: f64, g: f64) -> Result<TransferMatrix> {
    if !(g.abs() >= SINGULAR_G) {
        return Err(Error::SingularMap { g });
    }
    Ok(TransferMatrix::new(h, (h * h - 1.0) / g, g, h))
}

/// M = [[cos θ, −L sin θ], [sin θ / L, cos θ]] with cos θ = h, sin θ ≥ 0
/// and the sign carried by L = sin θ / g.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticalForm {
    pub theta: f64,
    pub length: f64,
}

pub fn elliptical_decompose(m: &TransferMatrix) -> Result<EllipticalForm> {
    let h = m.m11;
    if !(h.abs() < 1.0) {
        return Err(Error::NotElliptic { h });
    }
    if !(m.m21.abs() >= SINGULAR_G) {
        return Err(Error::SingularMap { g: m.m21 });
    }
    let theta = h.acos();
    Ok(EllipticalForm { theta, length: (1.0 - h * h).sqrt() / m.m21 })
}

impl EllipticalForm {
    /// Back to (h, g).
    pub fn elements(&self) -> (f64, f64) {
        (self.theta.cos(), self.theta.sin() / self.length)
    }
}

/// Growth rate per cycle with its batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthEstimate {
    pub gamma: f64,
    pub stderr: f64,
    pub n_cycles: u64,
}

impl GrowthEstimate {
    /// Pools independent realizations, weighting by cycle count.
    pub fn combine(parts: &[GrowthEstimate]) -> Option<GrowthEstimate> {
        let n: u64 = parts.iter().map(|p| p.n_cycles).sum();
        if n == 0 {
            return None;
        }
        let nf = n as f64;
        let gamma = parts.iter().map(|p| p.gamma * p.n_cycles as f64).sum::<f64>() / nf;
        let var = parts.iter().map(|p| (p.stderr * p.n_cycles as f64).powi(2)).sum::<f64>();
        Some(GrowthEstimate { gamma, stderr: var.sqrt() / nf, n_cycles: n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Norm {
    #[default]
    Euclidean,
    Max,
}

impl Norm {
    fn of(self, v: [f64; 2]) -> f64 {
        match self {
            Norm::Euclidean => v[0].hypot(v[1]),
            Norm::Max => v[0].abs().max(v[1].abs()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrowthOptions {
    pub renorm_every: usize,
    pub norm: Norm,
    /// Leading cycles that only align the iterated vector and are excluded
    /// from γ. `None` picks `min(N/1000, 1000)`.
    pub burn_in: Option<u64>,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        Self { renorm_every: crate::model::DEFAULT_RENORM_EVERY, norm: Norm::Euclidean, burn_in: None }
    }
}

impl GrowthOptions {
    pub fn with_renorm(renorm_every: usize) -> Self {
        Self { renorm_every, ..Self::default() }
    }

    fn burn_in_for(&self, n_cycles: u64) -> u64 {
        self.burn_in.unwrap_or((n_cycles / 1000).min(1000)).min(n_cycles.saturating_sub(1))
    }
}

/// Supplies the matrix of cycle `k`.
pub trait MatrixSource {
    fn matrix(&mut self, k: u64) -> Result<TransferMatrix>;
}

impl<F: FnMut(u64) -> Result<TransferMatrix>> MatrixSource for F {
    fn matrix(&mut self, k: u64) -> Result<TransferMatrix> {
        self(k)
    }
}

/// Adapts a precomputed slice.
pub struct SliceSource<'a>(pub &'a [TransferMatrix]);

impl MatrixSource for SliceSource<'_> {
    fn matrix(&mut self, k: u64) -> Result<TransferMatrix> {
        Ok(self.0[k as usize])
    }
}

fn start_vector(seed: u64) -> [f64; 2] {
    let a = PI * rng::stream(seed, rng::domain::START, 0).random::<f64>();
    [a.cos(), a.sin()]
}

/// Accumulates log-norm increments into batches.
struct Batches {
    size: u64,
    count: u64,
    sums: Vec<f64>,
}

impl Batches {
    fn new(n_cycles: u64) -> Self {
        let count = N_BATCHES.min(n_cycles).max(1);
        Self { size: n_cycles / count, count, sums: alloc::vec![0.0; count as usize] }
    }

    /// Batch of cycle `k` (0-based); the last batch absorbs the remainder.
    fn index(&self, k: u64) -> usize {
        (k / self.size).min(self.count - 1) as usize
    }

    fn ends_batch(&self, k: u64, n: u64) -> bool {
        k + 1 == n || ((k + 1).is_multiple_of(self.size) && (k + 1) / self.size < self.count)
    }

    fn finish(self, n_cycles: u64) -> GrowthEstimate {
        let total: f64 = self.sums.iter().sum();
        let gamma = total / n_cycles as f64;
        let nb = self.count as usize;
        let stderr = if nb < 2 {
            0.0
        } else {
            let rates: Vec<f64> = self
                .sums
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let len = if i + 1 == nb { n_cycles - self.size * (nb as u64 - 1) } else { self.size };
                    s / len as f64
                })
                .collect();
            let mean = rates.iter().sum::<f64>() / nb as f64;
            let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (nb - 1) as f64;
            (var / nb as f64).sqrt()
        };
        GrowthEstimate { gamma, stderr, n_cycles }
    }
}

fn check_chain(n_cycles: u64, opts: &GrowthOptions) -> Result<()> {
    if opts.renorm_every < 1 {
        return Err(Error::Config { field: "renorm_every", reason: "must be at least 1" });
    }
    if n_cycles < opts.renorm_every as u64 {
        return Err(Error::Config { field: "n_cycles", reason: "must be at least renorm_every" });
    }
    Ok(())
}

/// γ = lim (1/N) log ‖M_N ⋯ M_1 v‖ by vector iteration with periodic
/// renormalization.
pub fn growth_product<S: MatrixSource + ?Sized>(
    source: &mut S,
    n_cycles: u64,
    seed: u64,
    opts: &GrowthOptions,
) -> Result<GrowthEstimate> {
    check_chain(n_cycles, opts)?;
    let burn = opts.burn_in_for(n_cycles);
    let mut v = start_vector(seed);
    for k in 0..burn {
        v = source.matrix(k)?.apply(v);
        let n = v[0].hypot(v[1]);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Overflow { cycle: k });
        }
        v = [v[0] / n, v[1] / n];
    }
    let v0 = opts.norm.of(v);
    v = [v[0] / v0, v[1] / v0];
    let measured = n_cycles - burn;
    let mut batches = Batches::new(measured);
    let mut since = 0usize;
    for j in 0..measured {
        let k = burn + j;
        v = source.matrix(k)?.apply(v);
        since += 1;
        if since == opts.renorm_every || batches.ends_batch(j, measured) {
            let n = opts.norm.of(v);
            if !(n.is_finite() && n > 0.0 && n < 1e300) {
                return Err(Error::Overflow { cycle: k });
            }
            let b = batches.index(j);
            batches.sums[b] += n.ln();
            v = [v[0] / n, v[1] / n];
            since = 0;
        }
    }
    Ok(batches.finish(measured))
}

/// Change of basis S that turns the unit-determinant part of `mean` into a
/// pure rotation, as the pair (S, S⁻¹). Identity when `mean` is not
/// elliptic.
pub fn rotation_frame(mean: &TransferMatrix) -> (TransferMatrix, TransferMatrix) {
    let det = mean.det();
    if det > 0.0 {
        let m = mean.scaled(1.0 / det.sqrt());
        let half_tr = 0.5 * m.trace();
        if half_tr.abs() < 1.0 - 1e-12 {
            let s = (1.0 - half_tr * half_tr).sqrt();
            let alpha = 0.5 * (m.m11 - m.m22);
            let s_inv = TransferMatrix::new(1.0, alpha / s, 0.0, m.m21 / s);
            if s_inv.det().abs() > 1e-12 {
                return (s_inv.inverse(), s_inv);
            }
        }
    }
    (TransferMatrix::IDENTITY, TransferMatrix::IDENTITY)
}

/// Variance-reduced growth rate for a stored sequence of matrices.
///
/// The chain runs in the frame where the sample-mean matrix M̄ is a rotation
/// (any fixed frame gives the same γ), and the zero-mean linear response
/// M̄v·(M_k − M̄)v/|M̄v|² is subtracted as a control variate. For small iid
/// fluctuations about an elliptic mean this cuts the Monte Carlo scatter
/// by one to two orders of magnitude.
pub fn growth_product_cv(matrices: &[TransferMatrix], seed: u64, opts: &GrowthOptions) -> Result<GrowthEstimate> {
    let n_cycles = matrices.len() as u64;
    check_chain(n_cycles, opts)?;
    let n = matrices.len() as f64;
    let mut mean = TransferMatrix::new(0.0, 0.0, 0.0, 0.0);
    for m in matrices {
        mean.m11 += m.m11 / n;
        mean.m12 += m.m12 / n;
        mean.m21 += m.m21 / n;
        mean.m22 += m.m22 / n;
    }
    let (s, s_inv) = rotation_frame(&mean);
    let mean_f = s.mul(&mean).mul(&s_inv);

    let burn = opts.burn_in_for(n_cycles);
    let mut v = start_vector(seed);
    for m in &matrices[..burn as usize] {
        v = s.mul(m).mul(&s_inv).apply(v);
        let n = v[0].hypot(v[1]);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Overflow { cycle: 0 });
        }
        v = [v[0] / n, v[1] / n];
    }
    let measured = n_cycles - burn;
    let mut batches = Batches::new(measured);
    let mut since = 0usize;
    for (j, m) in matrices[burn as usize..].iter().enumerate() {
        let j = j as u64;
        let k = burn + j;
        let mf = s.mul(m).mul(&s_inv);
        let a = mf.apply(v);
        let c = mean_f.apply(v);
        let cc = c[0] * c[0] + c[1] * c[1];
        let response = (c[0] * (a[0] - c[0]) + c[1] * (a[1] - c[1])) / cc;
        let b = batches.index(j);
        batches.sums[b] -= response;
        v = a;
        since += 1;
        if since == opts.renorm_every || batches.ends_batch(j, measured) {
            let nv = opts.norm.of(v);
            if !(nv.is_finite() && nv > 0.0 && nv < 1e300) {
                return Err(Error::Overflow { cycle: k });
            }
            batches.sums[b] += nv.ln();
            v = [v[0] / nv, v[1] / nv];
            since = 0;
        }
    }
    Ok(batches.finish(measured))
}

/// log(1 + ½⟨η²⟩⟨sin²θ⟩).
pub fn growth_from_eta(mean_eta_sq: f64, mean_sin2theta: f64) -> f64 {
    (0.5 * mean_eta_sq * mean_sin2theta).ln_1p()
}

/// |det(M_N ⋯ M_1) − 1| tracked through an orthonormalized pair of
/// iterated basis vectors.
pub fn det_drift<S: MatrixSource + ?Sized>(source: &mut S, n_cycles: u64) -> Result<f64> {
    let mut q = TransferMatrix::IDENTITY;
    let mut log_det = 0.0;
    let mut sign = 1.0;
    for k in 0..n_cycles {
        let p = source.matrix(k)?.mul(&q);
        // Gram-Schmidt on the columns: p = q r
        let r11 = p.m11.hypot(p.m21);
        let (e1, e2) = (p.m11 / r11, p.m21 / r11);
        let r12 = e1 * p.m12 + e2 * p.m22;
        let (u1, u2) = (p.m12 - r12 * e1, p.m22 - r12 * e2);
        let r22 = e1 * u2 - e2 * u1;
        log_det += (r11 * r22).abs().ln();
        sign *= r22.signum();
        if !log_det.is_finite() {
            return Err(Error::Overflow { cycle: k });
        }
        q = TransferMatrix::new(e1, -e2, e2, e1);
    }
    Ok((sign * log_det.exp() - 1.0).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(m: TransferMatrix) -> impl FnMut(u64) -> Result<TransferMatrix> {
        move |_| Ok(m)
    }

    #[test]
    fn construction_examples() {
        assert_eq!(matrix_from_elements(0.0, 1.0).unwrap(), TransferMatrix::new(0.0, -1.0, 1.0, 0.0));
        assert_eq!(matrix_from_elements(2.0, 1.0).unwrap(), TransferMatrix::new(2.0, 3.0, 1.0, 2.0));
        assert!(matches!(matrix_from_elements(0.5, 0.0), Err(Error::SingularMap { .. })));
    }

    #[test]
    fn decomposition_examples() {
        let e = elliptical_decompose(&matrix_from_elements(0.0, 1.0).unwrap()).unwrap();
        assert!((e.theta - PI / 2.0).abs() < 1e-15 && (e.length - 1.0).abs() < 1e-15);
        let s = 0.5f64.sqrt();
        let phi = s * PI;
        let e = elliptical_decompose(&matrix_from_elements(phi.cos(), -s * phi.sin()).unwrap()).unwrap();
        assert!((e.theta - phi).abs() < 1e-14);
        assert!((e.length + 2f64.sqrt()).abs() < 1e-14);
        assert!(matches!(
            elliptical_decompose(&matrix_from_elements(1.2, 1.0).unwrap()),
            Err(Error::NotElliptic { .. })
        ));
    }

    #[test]
    fn identity_and_hyperbolic_calibration() {
        let opts = GrowthOptions::default();
        let g = growth_product(&mut constant(TransferMatrix::IDENTITY), 1000, 1, &opts).unwrap();
        assert_eq!(g.gamma, 0.0);
        let m = TransferMatrix::new(2.0, 3.0, 1.0, 2.0);
        let g = growth_product(&mut constant(m), 100_000, 1, &opts).unwrap();
        assert!((g.gamma - (2.0 + 3f64.sqrt()).ln()).abs() < 1e-6, "{}", g.gamma);
    }

    #[test]
    fn elliptic_constant_has_no_growth() {
        let m = matrix_from_elements(0.3, -0.8).unwrap();
        for norm in [Norm::Euclidean, Norm::Max] {
            let opts = GrowthOptions { norm, ..GrowthOptions::default() };
            let g = growth_product(&mut constant(m), 100_000, 5, &opts).unwrap();
            assert!(g.gamma.abs() <= 3.0 * g.stderr + 1e-12, "{g:?}");
        }
    }

    #[test]
    fn overflow_is_reported() {
        let m = TransferMatrix::new(1e30, 0.0, 0.0, 1e-30);
        let opts = GrowthOptions { burn_in: Some(0), ..GrowthOptions::with_renorm(256) };
        let r = growth_product(&mut constant(m), 256 * 64, 1, &opts);
        assert!(matches!(r, Err(Error::Overflow { .. })));
    }

    #[test]
    fn rejects_short_chains() {
        let r = growth_product(&mut constant(TransferMatrix::IDENTITY), 4, 1, &GrowthOptions::default());
        assert!(matches!(r, Err(Error::Config { .. })));
    }

    #[test]
    fn frame_turns_mean_into_rotation() {
        let m = matrix_from_elements(0.3, -0.8).unwrap();
        let (s, si) = rotation_frame(&m);
        let r = s.mul(&m).mul(&si);
        assert!((r.m11 - r.m22).abs() < 1e-12);
        assert!((r.m12 + r.m21).abs() < 1e-12);
        assert!((r.det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cv_estimator_matches_plain_on_hyperbolic_constant() {
        let m = TransferMatrix::new(2.0, 3.0, 1.0, 2.0);
        let ms = alloc::vec![m; 10_000];
        let g = growth_product_cv(&ms, 3, &GrowthOptions::default()).unwrap();
        assert!((g.gamma - (2.0 + 3f64.sqrt()).ln()).abs() < 1e-3);
    }

    #[test]
    fn eta_form() {
        assert_eq!(growth_from_eta(0.0, 0.7), 0.0);
        assert!((growth_from_eta(0.02, 0.5) - 1.005f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn combine_weights_by_cycles() {
        let a = GrowthEstimate { gamma: 1.0, stderr: 0.1, n_cycles: 100 };
        let b = GrowthEstimate { gamma: 2.0, stderr: 0.1, n_cycles: 300 };
        let c = GrowthEstimate::combine(&[a, b]).unwrap();
        assert!((c.gamma - 1.75).abs() < 1e-15);
        assert_eq!(c.n_cycles, 400);
        assert!(GrowthEstimate::combine(&[]).is_none());
    }

    #[test]
    fn det_drift_stays_small() {
        let m = matrix_from_elements(0.4, 1.7).unwrap();
        assert!(det_drift(&mut constant(m), 10_000).unwrap() < 1e-10);
    }
}
