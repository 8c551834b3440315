//! Sweep grids and the parallel helpers used by sweeps and Monte Carlo runs.

use std::str::FromStr;

use rayon::prelude::*;
use stochill_core::xfer::{growth_product_cv, GrowthOptions};
use stochill_core::{GrowthEstimate, RandomHillRun, Result, StochasticMethod, StochasticRun, TransferMatrix};

use crate::error::{AppError, AppResult};

/// Which parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Lambda,
    Amplitude,
    TauC,
}

/// Spacing of a generated grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// Grid points for one sweep axis; nonempty and strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub grid: Vec<f64>,
}

impl SweepSpec {
    pub fn new(axis: Axis, grid: Vec<f64>) -> AppResult<Self> {
        if grid.is_empty() {
            return Err(AppError::config("sweep grid is empty"));
        }
        if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(AppError::config("sweep grid must be finite and strictly increasing"));
        }
        Ok(Self { axis, grid })
    }

    /// `count` points from `min` to `max` inclusive.
    pub fn range(axis: Axis, min: f64, max: f64, count: usize, spacing: Spacing) -> AppResult<Self> {
        if count == 0 || !(min <= max) || (spacing == Spacing::Log && !(min > 0.0)) {
            return Err(AppError::config("invalid sweep range"));
        }
        if count == 1 {
            return Self::new(axis, vec![min]);
        }
        let grid = (0..count)
            .map(|i| {
                let f = i as f64 / (count - 1) as f64;
                match spacing {
                    Spacing::Linear => min + f * (max - min),
                    Spacing::Log => (min.ln() + f * (max.ln() - min.ln())).exp(),
                }
            })
            .collect();
        Self::new(axis, grid)
    }
}

/// Grid text as accepted on the command line: `a,b,c` (explicit list) or
/// `min:max:count[:lin|log]`.
#[derive(Debug, Clone, PartialEq)]
pub enum GridArg {
    List(Vec<f64>),
    Range { min: f64, max: f64, count: usize, spacing: Spacing },
}

impl FromStr for GridArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if !(3..=4).contains(&parts.len()) {
                return Err("range grids are min:max:count[:lin|log]".into());
            }
            let count = parts[2].trim().parse::<usize>().map_err(|e| format!("count: {e}"))?;
            let spacing = match parts.get(3).map(|t| t.trim()) {
                None | Some("lin") | Some("linear") => Spacing::Linear,
                Some("log") => Spacing::Log,
                Some(other) => return Err(format!("unknown spacing `{other}`")),
            };
            Ok(Self::Range { min: num(parts[0])?, max: num(parts[1])?, count, spacing })
        } else {
            Ok(Self::List(s.split(',').map(num).collect::<std::result::Result<_, _>>()?))
        }
    }
}

impl GridArg {
    pub fn to_spec(&self, axis: Axis) -> AppResult<SweepSpec> {
        match self {
            Self::List(v) => SweepSpec::new(axis, v.clone()),
            Self::Range { min, max, count, spacing } => SweepSpec::range(axis, *min, *max, *count, *spacing),
        }
    }
}

/// `f(0..n)` evaluated in parallel, results in index order.
pub fn par_collect<T, F>(n: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Direct Monte Carlo growth of a random run: matrices built in parallel,
/// multiplied sequentially.
pub fn growth_random(run: &RandomHillRun, n_cycles: u64, seed: u64, renorm_every: usize) -> Result<GrowthEstimate> {
    let matrices: Vec<TransferMatrix> = par_collect(n_cycles, |k| run.matrix(seed, k))?;
    growth_product_cv(&matrices, seed, &GrowthOptions::with_renorm(renorm_every))
}

/// Stochastic growth by either route, matrices built in parallel.
pub fn growth_stochastic(
    run: &StochasticRun,
    n_cycles: u64,
    seed: u64,
    method: StochasticMethod,
    renorm_every: usize,
) -> Result<GrowthEstimate> {
    let matrices: Vec<TransferMatrix> = par_collect(n_cycles, |k| run.matrix(method, seed, k))?;
    growth_product_cv(&matrices, seed, &GrowthOptions::with_renorm(renorm_every))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_parsing() {
        assert_eq!("1,2.5,4".parse::<GridArg>().unwrap(), GridArg::List(vec![1.0, 2.5, 4.0]));
        let g = "0.001:1:4:log".parse::<GridArg>().unwrap().to_spec(Axis::Amplitude).unwrap();
        for (a, b) in g.grid.iter().zip([0.001, 0.01, 0.1, 1.0]) {
            assert!((a / b - 1.0).abs() < 1e-12);
        }
        assert!("1:2".parse::<GridArg>().is_err());
        assert!("1,x".parse::<GridArg>().is_err());
        assert!("3,2".parse::<GridArg>().unwrap().to_spec(Axis::Lambda).is_err());
        assert!("0:1:5:log".parse::<GridArg>().unwrap().to_spec(Axis::Lambda).is_err());
    }

    proptest! {
        #[test]
        fn generated_grids_are_strictly_increasing(min in 1e-3f64..10.0, span in 1e-3f64..100.0, count in 2usize..300, log in any::<bool>()) {
            let spacing = if log { Spacing::Log } else { Spacing::Linear };
            let s = SweepSpec::range(Axis::Lambda, min, min + span, count, spacing).unwrap();
            prop_assert_eq!(s.grid.len(), count);
            prop_assert!((s.grid[0] - min).abs() <= 1e-12 * min);
            prop_assert!((s.grid[count - 1] - (min + span)).abs() <= 1e-9 * (min + span));
        }
    }
}
