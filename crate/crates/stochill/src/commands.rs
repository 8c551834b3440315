//! Command implementations. Each returns a [`Report`]: text for the
//! terminal plus the CSV tables to write.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use stochill_core::cycle::{first_order_coeffs, integrate_cycle, COS_PHI_DEGENERACY};
use stochill_core::model::barrier_residuals;
use stochill_core::random::{growth_eta_sampled, growth_small_fluctuation_cov, growth_small_q, phi};
use stochill_core::stochastic::equivalent_statistics;
use stochill_core::{
    elliptical_decompose, extract_cycles, matrix_from_elements, AxisRatios, BarrierShape, ElementMode, NoiseForm,
    RandomHillRun, StochasticMethod, StochasticRun,
};

use crate::config::{check_barrier, ConfigFile, Loaded};
use crate::csvio::{fmt_float, read_barrier_samples, read_trace, Cell, Table};
use crate::error::{AppError, AppResult};
use crate::figures::{self, DirectElements, PlotStyle};
use crate::sweep::{self, GridArg};

/// Cycle count of full runs.
pub const DEFAULT_CYCLES: u64 = 1_000_000;
/// Cycle count under `--fast`.
pub const FAST_CYCLES: u64 = 10_000;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Common {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub cycles: Option<u64>,
    pub out: Option<PathBuf>,
    pub fast: bool,
}

impl Common {
    /// The configuration with `--seed` and `--cycles`/`--fast` applied.
    pub fn load(&self) -> AppResult<Loaded> {
        let path = self.config.as_ref().ok_or_else(|| AppError::config("this command needs --config <path>"))?;
        let mut file = ConfigFile::load(path)?;
        if let Some(seed) = self.seed {
            file.master_seed = seed;
        }
        if let Some(n) = self.cycles {
            file.n_cycles = n;
        } else if self.fast {
            file.n_cycles = file.n_cycles.min(FAST_CYCLES);
        }
        file.resolve()
    }

    /// Cycle count for commands without a config.
    pub fn cycles_or_default(&self) -> u64 {
        self.cycles.unwrap_or(if self.fast { FAST_CYCLES } else { DEFAULT_CYCLES })
    }

    pub fn out_dir(&self) -> &Path {
        self.out.as_deref().unwrap_or(Path::new("."))
    }
}

/// Terminal text plus named CSV tables.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub text: String,
    pub tables: Vec<(String, Table)>,
}

impl Report {
    /// Writes every table into `dir` (created if needed).
    pub fn save(&self, dir: &Path) -> AppResult<()> {
        std::fs::create_dir_all(dir).map_err(|source| AppError::Write { path: dir.into(), source })?;
        for (name, table) in &self.tables {
            table.save(&dir.join(name))?;
        }
        Ok(())
    }
}

/// One-cycle diagnostics: matrix elements, moments, first-order
/// coefficients, elliptical form and invariant residuals.
pub fn cmd_cycle(loaded: &Loaded) -> AppResult<Report> {
    let run = &loaded.run;
    let c = integrate_cycle(&run.params, &run.barrier, run.integrator_tol)?;
    let mut flags = Vec::new();
    let cos_phi = phi(run.params.lambda).cos();
    if cos_phi.abs() < COS_PHI_DEGENERACY {
        flags.push("near_degenerate_cos_phi");
    }
    let coeffs = match first_order_coeffs(&c) {
        Ok(k) => Some(k),
        Err(_) => {
            flags.push("degenerate_base");
            None
        }
    };
    let ellipse = matrix_from_elements(c.h, c.g).and_then(|m| elliptical_decompose(&m));
    if ellipse.is_err() {
        flags.push("not_elliptic");
    }
    let nan = f64::NAN;
    let (x, y, w, z) = coeffs.map_or((nan, nan, nan, nan), |k| (k.x, k.y, k.w, k.z));
    let (theta, length) = ellipse.map_or((nan, nan), |e| (e.theta, e.length));
    let values = [
        ("lambda", run.params.lambda),
        ("q", run.params.q),
        ("h", c.h),
        ("g", c.g),
        ("i1", c.i1),
        ("i2", c.i2),
        ("j1", c.j1),
        ("j2", c.j2),
        ("x", x),
        ("y", y),
        ("w", w),
        ("z", z),
        ("theta", theta),
        ("length", length),
        ("wronskian_residual", (c.wronskian() - 1.0).abs()),
        ("symmetry_residual", c.symmetry_residual()),
    ];
    let flag_text = if flags.is_empty() { "ok".to_string() } else { flags.join(";") };
    let mut header: Vec<&str> = values.iter().map(|v| v.0).collect();
    header.push("flags");
    let mut table = Table::new(&header);
    let mut row: Vec<Cell> = values.iter().map(|v| v.1.into()).collect();
    row.push(flag_text.clone().into());
    table.push(row);

    let mut text = String::new();
    for (name, v) in values {
        writeln!(text, "{name:>20}  {}", fmt_float(v)).unwrap();
    }
    writeln!(text, "{:>20}  {flag_text}", "flags").unwrap();
    text.push('\n');
    text.push_str(&table.to_csv_string());
    Ok(Report { text, tables: vec![("cycle.csv".into(), table)] })
}

/// Growth-rate estimators selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthMethod {
    /// Product of integrated per-cycle matrices.
    Direct,
    /// Product of first-order per-cycle matrices.
    FirstOrder,
    /// Closed-form small-fluctuation rate from the perturbation variances.
    SmallFluctuation,
    /// Closed-form small-q rate (needs q = 0 and no λ fluctuation).
    SmallQ,
    /// log(1 + ½⟨η²⟩⟨sin²θ⟩) from sampled first-order small-q elements.
    Eta,
    /// As `Eta`, with the generalized small-q elements.
    EtaHigher,
    /// Noisy cycles integrated directly.
    StochDirect,
    /// Noisy cycles replaced by their equivalent random cycles.
    StochEquiv,
    /// Closed-form rate from the exact covariance of the equivalent
    /// perturbations.
    StochSmallFluctuation,
}

impl GrowthMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::Direct => "direct",
            Self::FirstOrder => "first-order",
            Self::SmallFluctuation => "small-fluctuation",
            Self::SmallQ => "small-q",
            Self::Eta => "eta",
            Self::EtaHigher => "eta-higher",
            Self::StochDirect => "stoch-direct",
            Self::StochEquiv => "stoch-equiv",
            Self::StochSmallFluctuation => "stoch-small-fluctuation",
        }
    }
}

fn stochastic_run(loaded: &Loaded) -> AppResult<StochasticRun> {
    let noise =
        loaded.noise.ok_or_else(|| AppError::config("stochastic methods need a `noise` block in the config"))?;
    let r = &loaded.run;
    Ok(StochasticRun::new(r.params, r.barrier.clone(), noise, r.integrator_tol)?)
}

/// (γ, stderr) of one method; stderr is zero for closed forms.
pub fn estimate(loaded: &Loaded, method: GrowthMethod) -> AppResult<(f64, f64)> {
    let r = &loaded.run;
    let (n, seed) = (r.n_cycles, r.master_seed);
    let random = |mode| RandomHillRun::new(r.params, r.barrier.clone(), r.ell_dist, r.p_dist, mode, r.integrator_tol);
    Ok(match method {
        GrowthMethod::Direct | GrowthMethod::FirstOrder => {
            let mode = if method == GrowthMethod::Direct { ElementMode::Exact } else { ElementMode::FirstOrder };
            let g = sweep::growth_random(&random(mode)?, n, seed, r.renorm_every)?;
            (g.gamma, g.stderr)
        }
        GrowthMethod::SmallFluctuation => {
            let run = random(ElementMode::FirstOrder)?;
            let coeffs = run.coeffs.as_ref().expect("first-order mode checks the coefficients");
            let g = growth_small_fluctuation_cov(
                &run.base,
                coeffs,
                r.ell_dist.second_moment(),
                r.p_dist.second_moment(),
                0.0,
            )?;
            (g, 0.0)
        }
        GrowthMethod::SmallQ => {
            if r.params.q != 0.0 || r.ell_dist.second_moment() != 0.0 {
                return Err(AppError::config("small-q needs q = 0 and a zero ell_dist"));
            }
            (growth_small_q(r.params.lambda, r.p_dist.second_moment(), &r.barrier), 0.0)
        }
        GrowthMethod::Eta | GrowthMethod::EtaHigher => {
            let mode = if method == GrowthMethod::Eta {
                ElementMode::SmallQFirstOrder
            } else {
                ElementMode::SmallQGeneralized
            };
            let g = growth_eta_sampled(&random(mode)?, n, seed)?;
            (g.gamma, g.stderr)
        }
        GrowthMethod::StochDirect | GrowthMethod::StochEquiv => {
            let run = stochastic_run(loaded)?;
            let m = if method == GrowthMethod::StochDirect {
                StochasticMethod::Direct
            } else {
                StochasticMethod::Equivalence
            };
            let g = sweep::growth_stochastic(&run, n, seed, m, r.renorm_every)?;
            (g.gamma, g.stderr)
        }
        GrowthMethod::StochSmallFluctuation => {
            let run = stochastic_run(loaded)?;
            let coeffs =
                run.coeffs.as_ref().ok_or_else(|| AppError::config("degenerate base has no small-fluctuation form"))?;
            let (vl, vp, cov) = run.perturbation_covariance()?;
            (growth_small_fluctuation_cov(&run.base, coeffs, vl, vp, cov)?, 0.0)
        }
    })
}

/// γ ± stderr for each requested method.
pub fn cmd_growth(loaded: &Loaded, methods: &[GrowthMethod]) -> AppResult<Report> {
    let mut table = Table::new(&["method", "gamma", "stderr", "n_cycles"]);
    let mut text = String::new();
    for &m in methods {
        let (g, se) = estimate(loaded, m)?;
        writeln!(text, "{:>24}  gamma = {} ± {}", m.name(), fmt_float(g), fmt_float(se)).unwrap();
        table.push(vec![m.name().into(), g.into(), se.into(), loaded.run.n_cycles.into()]);
    }
    Ok(Report { text, tables: vec![("growth.csv".into(), table)] })
}

/// Direct vs equivalence growth of the stochastic equation, with the
/// measured and exact statistics of the equivalent perturbations.
pub fn cmd_equiv(loaded: &Loaded) -> AppResult<Report> {
    let run = stochastic_run(loaded)?;
    let r = &loaded.run;
    let (n, seed) = (r.n_cycles, r.master_seed);
    let eq = sweep::growth_stochastic(&run, n, seed, StochasticMethod::Equivalence, r.renorm_every)?;
    let direct = if run.noise.form == NoiseForm::Multiplicative {
        Some(sweep::growth_stochastic(&run, n, seed, StochasticMethod::Direct, r.renorm_every)?)
    } else {
        None
    };
    let stats = equivalent_statistics(&run, n.max(2), seed)?;
    let exact = run.perturbation_covariance()?;
    let closed = match &run.coeffs {
        Some(c) => growth_small_fluctuation_cov(&run.base, c, exact.0, exact.1, exact.2)?,
        None => f64::NAN,
    };
    let (gd, sd) = direct.map_or((f64::NAN, f64::NAN), |d| (d.gamma, d.stderr));
    let combined = (sd * sd + eq.stderr * eq.stderr).sqrt();
    let gap = (gd - eq.gamma).abs() / combined;

    let mut table = Table::new(&[
        "gamma_direct",
        "stderr_direct",
        "gamma_equivalence",
        "stderr_equivalence",
        "gap_in_stderr",
        "gamma_small_fluctuation",
        "var_ell",
        "var_p",
        "cov_ell_p",
        "var_ell_exact",
        "var_p_exact",
        "cov_ell_p_exact",
        "n_cycles",
    ]);
    table.push(vec![
        gd.into(),
        sd.into(),
        eq.gamma.into(),
        eq.stderr.into(),
        gap.into(),
        closed.into(),
        stats.var_ell.into(),
        stats.var_p.into(),
        stats.cov.into(),
        exact.0.into(),
        exact.1.into(),
        exact.2.into(),
        n.into(),
    ]);
    let mut text = String::new();
    writeln!(text, "gamma_direct       = {} ± {}", fmt_float(gd), fmt_float(sd)).unwrap();
    writeln!(text, "gamma_equivalence  = {} ± {}", fmt_float(eq.gamma), fmt_float(eq.stderr)).unwrap();
    writeln!(text, "gap                = {} combined stderr", fmt_float(gap)).unwrap();
    writeln!(text, "gamma_small_fluct  = {}", fmt_float(closed)).unwrap();
    writeln!(
        text,
        "<l^2>, <p^2>, <lp> = {}, {}, {}",
        fmt_float(stats.var_ell),
        fmt_float(stats.var_p),
        fmt_float(stats.cov)
    )
    .unwrap();
    if direct.is_none() {
        writeln!(text, "additive noise: no direct route; equivalence only").unwrap();
    }
    Ok(Report { text, tables: vec![("equiv.csv".into(), table)] })
}

/// Options of the figure sweeps.
#[derive(Debug, Clone)]
pub struct FigOptions {
    pub grid: Option<GridArg>,
    pub direct: DirectElements,
}

/// Runs one figure sweep, writing `figN.csv` and `figN.svg` into `out`.
pub fn cmd_fig(which: u8, common: &Common, opts: &FigOptions) -> AppResult<Report> {
    let axis = match which {
        2 => sweep::Axis::Amplitude,
        _ => sweep::Axis::Lambda,
    };
    let spec = match &opts.grid {
        Some(g) => g.to_spec(axis)?,
        None => figures::default_grid(which),
    };
    let seed = common.seed.unwrap_or(0);
    let (table, columns, style): (Table, &[&str], PlotStyle<'_>) = match which {
        1 => (
            figures::fig1(&spec)?,
            &["h_exact", "h_first_order", "h_generalized"],
            PlotStyle {
                title: "h(lambda), q = 1/2, sin^2 barrier",
                x_label: "lambda",
                y_label: "h",
                log_x: false,
                log_y: false,
            },
        ),
        2 => (
            figures::fig2(&spec, common.cycles_or_default(), seed, opts.direct)?,
            &["gamma_direct", "gamma_eta_sampled", "gamma_small_q", "gamma_higher_order"],
            PlotStyle {
                title: "growth rate vs A_q, lambda = 1/2",
                x_label: "A_q",
                y_label: "gamma",
                log_x: true,
                log_y: true,
            },
        ),
        3 => (
            figures::fig3(&spec)?,
            &["gamma_sin4", "gamma_sin2", "gamma_delta"],
            PlotStyle {
                title: "small-q growth rate, <q^2> = 1",
                x_label: "lambda",
                y_label: "gamma",
                log_x: true,
                log_y: false,
            },
        ),
        _ => return Err(AppError::config("figures are 1, 2 or 3")),
    };
    let dir = common.out_dir();
    std::fs::create_dir_all(dir).map_err(|source| AppError::Write { path: dir.into(), source })?;
    figures::render(&table, columns, style, &dir.join(format!("fig{which}.svg")))?;
    let text = format!("fig{which}: {} rows -> {}\n", table.rows.len(), dir.join(format!("fig{which}.csv")).display());
    Ok(Report { text, tables: vec![(format!("fig{which}.csv"), table)] })
}

/// Splits an orbit trace into Hill cycles.
pub fn cmd_extract_orbit(trace: &Path, axes: AxisRatios) -> AppResult<Report> {
    let ex = extract_cycles(&read_trace(trace)?, &axes)?;
    let mut seg = Table::new(&["segment", "t_start", "t_end", "lambda", "q", "zero_forcing", "symmetry_residual"]);
    for (i, s) in ex.segments.iter().enumerate() {
        seg.push(vec![
            (i as u64).into(),
            s.t_start.into(),
            s.t_end.into(),
            s.lambda.into(),
            s.q.into(),
            (if s.is_zero_forcing() { "true" } else { "false" }).into(),
            s.symmetry_residual.into(),
        ]);
    }
    let mut tables = vec![("segments.csv".to_string(), seg)];
    let mut text = format!("{} segments\n", ex.segments.len());
    if let Some(BarrierShape::Tabulated(table)) = &ex.pooled_shape {
        let mut pooled = Table::new(&["t", "value"]);
        for (t, v) in table.knots().iter().zip(table.values()) {
            pooled.push(vec![(*t).into(), (*v).into()]);
        }
        tables.push(("pooled_shape.csv".into(), pooled));
        text.push_str("pooled shape -> pooled_shape.csv\n");
    }
    let n = ex.segments.len().max(1) as f64;
    let mean_lambda = ex.segments.iter().map(|s| s.lambda).sum::<f64>() / n;
    let mean_q = ex.segments.iter().map(|s| s.q).sum::<f64>() / n;
    writeln!(text, "mean lambda = {}, mean q = {}", fmt_float(mean_lambda), fmt_float(mean_q)).unwrap();
    Ok(Report { text, tables })
}

/// Checks a barrier (from a `t,value` CSV or the config) against the shape
/// invariants; a violation is a configuration failure.
pub fn cmd_validate_barrier(barrier: Option<&Path>, common: &Common) -> AppResult<Report> {
    let shape = match barrier {
        Some(path) => BarrierShape::tabulated(&read_barrier_samples(path)?)?,
        None => {
            let path =
                common.config.as_ref().ok_or_else(|| AppError::config("give --barrier <csv> or --config <path>"))?;
            ConfigFile::load(path)?.barrier.to_shape()?
        }
    };
    let r = barrier_residuals(&shape);
    let mut table = Table::new(&["symmetry", "normalization", "min_value"]);
    table.push(vec![r.symmetry.into(), r.normalization.into(), r.min_value.into()]);
    check_barrier(&shape)?;
    let text = format!(
        "barrier ok: symmetry {}, normalization {}, min {}\n",
        fmt_float(r.symmetry),
        fmt_float(r.normalization),
        fmt_float(r.min_value)
    );
    Ok(Report { text, tables: vec![("barrier.csv".into(), table)] })
}
