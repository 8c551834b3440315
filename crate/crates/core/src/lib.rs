//! Random and stochastic Hill's equations in the small-fluctuation regime.
//!
//! `y'' + [λ + q Q̂(t)] y = 0` on cycles of length π, with the parameters
//! redrawn every cycle (random form) or with a coloured-noise term inside the
//! bracket (stochastic form). The crate covers one-cycle integration, the
//! first-order matrix-element expansion, transfer-matrix growth rates, the
//! stochastic-to-random equivalence map and the orbit/preheating adapters.
//!
//! Everything here is `no_std` + `alloc`; file formats, the CLI and
//! parallel sweeps live in the `stochill` crate. Float math comes from
//! `num_traits::Float` (libm-backed); when std happens to be linked into the
//! build graph its inherent methods shadow the trait, hence the
//! `allow(unused_imports)` on those imports.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod apps;
pub mod cycle;
pub mod error;
pub mod model;
pub mod ode;
pub mod quad;
pub mod random;
pub mod rng;
pub mod stochastic;
pub mod xfer;

pub use apps::{extract_cycles, omega_y_sq, preheat_preset, AxisRatios, OrbitTrace};
pub use cycle::{
    first_order_coeffs, integrate_cycle, j_factor, perturbed_elements, small_q_elements, CycleSolution,
    FirstOrderCoeffs, SmallQMode,
};
pub use error::{Error, Result};
pub use model::{barrier_eval, barrier_validate, BarrierShape, HillParams, PerturbationDist, RunConfig};
pub use random::{ElementMode, RandomHillRun};
pub use stochastic::{
    equivalent_perturbations, growth_stochastic, integrate_stochastic_cycle, ou_path, xi_moments, NoiseConfig,
    NoiseCoupling, NoiseForm, NoisePath, StochasticMethod, StochasticRun, XiMoments,
};
pub use xfer::{
    elliptical_decompose, growth_from_eta, growth_product, matrix_from_elements, EllipticalForm, GrowthEstimate,
    TransferMatrix,
};
