//! JSON run configuration.
//!
//! ```json
//! {
//!   "params": { "lambda": 0.5, "q": 0.0 },
//!   "barrier": { "kind": "sin2" },
//!   "ell_dist": { "kind": "two-point", "scale": 0.0 },
//!   "p_dist": { "kind": "uniform-symmetric", "scale": 0.01 },
//!   "n_cycles": 1000000,
//!   "master_seed": 42,
//!   "noise": { "tau_c": 0.2, "sigma": 0.05, "dt": 0.006135923151542565, "form": "multiplicative" }
//! }
//! ```
//!
//! `integrator_tol` (default 1e-10), `renorm_every` (default 16) and the
//! `noise` block are optional; `noise.coupling` is `barrier` (default) or
//! `unit`. Tabulated barriers give `"samples": [[t, value], ...]` and are
//! used as given.

use std::path::Path;

use serde::{Deserialize, Serialize};
use stochill_core::model::{Invariant, DEFAULT_INTEGRATOR_TOL, DEFAULT_RENORM_EVERY};
use stochill_core::{
    barrier_validate, BarrierShape, HillParams, NoiseConfig, NoiseCoupling, NoiseForm, PerturbationDist, RunConfig,
};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub params: ParamsFile,
    pub barrier: BarrierFile,
    pub ell_dist: DistFile,
    pub p_dist: DistFile,
    pub n_cycles: u64,
    pub master_seed: u64,
    #[serde(default = "default_tol")]
    pub integrator_tol: f64,
    #[serde(default = "default_renorm")]
    pub renorm_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseFile>,
}

fn default_tol() -> f64 {
    DEFAULT_INTEGRATOR_TOL
}

fn default_renorm() -> usize {
    DEFAULT_RENORM_EVERY
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub lambda: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BarrierFile {
    Sin2,
    Sin4,
    DeltaMidpoint,
    Tabulated { samples: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistFile {
    UniformSymmetric { scale: f64 },
    Gaussian { scale: f64 },
    TwoPoint { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormFile {
    Additive,
    Multiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingFile {
    #[default]
    Barrier,
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseFile {
    pub tau_c: f64,
    pub sigma: f64,
    pub dt: f64,
    pub form: FormFile,
    #[serde(default)]
    pub coupling: CouplingFile,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub run: RunConfig,
    pub noise: Option<NoiseConfig>,
}

impl BarrierFile {
    pub fn to_shape(&self) -> AppResult<BarrierShape> {
        Ok(match self {
            Self::Sin2 => BarrierShape::Sin2,
            Self::Sin4 => BarrierShape::Sin4,
            Self::DeltaMidpoint => BarrierShape::DeltaMidpoint,
            Self::Tabulated { samples } => BarrierShape::tabulated(samples)?,
        })
    }
}

impl DistFile {
    pub fn to_dist(self) -> PerturbationDist {
        match self {
            Self::UniformSymmetric { scale } => PerturbationDist::UniformSymmetric { amplitude: scale },
            Self::Gaussian { scale } => PerturbationDist::Gaussian { std_dev: scale },
            Self::TwoPoint { scale } => PerturbationDist::TwoPoint { amplitude: scale },
        }
    }
}

impl NoiseFile {
    pub fn to_noise(self) -> NoiseConfig {
        let form = match self.form {
            FormFile::Additive => NoiseForm::Additive,
            FormFile::Multiplicative => NoiseForm::Multiplicative,
        };
        let coupling = match self.coupling {
            CouplingFile::Barrier => NoiseCoupling::Barrier,
            CouplingFile::Unit => NoiseCoupling::Unit,
        };
        NoiseConfig { tau_c: self.tau_c, sigma: self.sigma, dt: self.dt, form, coupling }
    }
}

impl ConfigFile {
    pub fn from_json(text: &str) -> AppResult<Self> {
        serde_json::from_str(text).map_err(|e| AppError::config(format!("invalid config JSON: {e}")))
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| AppError::Read { path: path.into(), source })?;
        Self::from_json(&text)
    }

    /// Builds and validates the core configuration.
    pub fn resolve(&self) -> AppResult<Loaded> {
        let params = HillParams::new(self.params.lambda, self.params.q)
            .map_err(|_| AppError::config("field `params.lambda`: must be positive and finite"))?;
        let barrier = self.barrier.to_shape()?;
        check_barrier(&barrier)?;
        let run = RunConfig {
            params,
            barrier,
            ell_dist: self.ell_dist.to_dist(),
            p_dist: self.p_dist.to_dist(),
            n_cycles: self.n_cycles,
            master_seed: self.master_seed,
            integrator_tol: self.integrator_tol,
            renorm_every: self.renorm_every,
        };
        run.validate()?;
        let noise = self.noise.map(NoiseFile::to_noise);
        if let Some(n) = &noise {
            n.validate()?;
        }
        Ok(Loaded { run, noise })
    }
}

/// Rejects a barrier with the first violated invariant and its residual.
pub fn check_barrier(shape: &BarrierShape) -> AppResult<()> {
    barrier_validate(shape).map_err(|v| {
        let name = match v.invariant {
            Invariant::Symmetry => "symmetry",
            Invariant::Normalization => "normalization",
            Invariant::Nonnegativity => "nonnegativity",
        };
        AppError::config(format!("barrier violates {name}: residual {:e}", v.residual))
    })
}
