//! File formats, parallel sweeps, figures and the command implementations
//! behind the `stochill` binary. The numerics live in `stochill_core`.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod figures;
pub mod sweep;

pub use error::{AppError, AppResult};
