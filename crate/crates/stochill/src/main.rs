use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stochill::commands::{self, Common, FigOptions, GrowthMethod, Report};
use stochill::figures::DirectElements;
use stochill::sweep::GridArg;
use stochill::{AppError, AppResult};
use stochill_core::AxisRatios;

/// Random and stochastic Hill's equations: single-cycle diagnostics,
/// growth rates, the stochastic-to-random equivalence and figure sweeps.
#[derive(Parser, Debug)]
#[command(name = "stochill", version)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cycle count (overrides the config and --fast).
    #[arg(long, global = true)]
    cycles: Option<u64>,
    /// Output directory for CSV and plot files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap Monte Carlo runs at 10^4 cycles.
    #[arg(long, global = true)]
    fast: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One-cycle matrix elements, moments and invariant residuals.
    Cycle,
    /// Growth rate by one or more methods.
    Growth {
        /// Comma-separated methods.
        #[arg(long, value_enum, value_delimiter = ',', default_value = "direct")]
        method: Vec<MethodArg>,
    },
    /// Stochastic cycles integrated directly vs their equivalent random cycles.
    Equiv,
    /// h(λ) at q = 1/2: integrated vs the two small-q approximations.
    Fig1(FigArgs),
    /// Growth rate vs fluctuation amplitude at λ = 1/2.
    Fig2(FigArgs),
    /// Small-q growth rate vs λ for the three barrier shapes.
    Fig3(FigArgs),
    /// Splits an orbit trace (CSV t,x,z) into Hill cycles.
    ExtractOrbit {
        #[arg(long)]
        trace: PathBuf,
        /// Axis ratios a,b,c with a >= b >= c > 0.
        #[arg(long, default_value = "1,1,1")]
        axes: String,
    },
    /// Checks a barrier against symmetry, normalization and nonnegativity.
    ValidateBarrier {
        /// Barrier samples (CSV t,value); defaults to the config's barrier.
        #[arg(long)]
        barrier: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct FigArgs {
    /// Sweep grid: `a,b,c` or `min:max:count[:lin|log]`.
    #[arg(long)]
    grid: Option<GridArg>,
    /// Per-cycle elements of the Monte Carlo column (fig2).
    #[arg(long, value_enum, default_value = "exact")]
    direct_elements: DirectArg,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum DirectArg {
    Exact,
    FirstOrder,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MethodArg {
    Direct,
    FirstOrder,
    SmallFluctuation,
    SmallQ,
    Eta,
    EtaHigher,
    StochDirect,
    StochEquiv,
    StochSmallFluctuation,
}

impl From<MethodArg> for GrowthMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Direct => Self::Direct,
            MethodArg::FirstOrder => Self::FirstOrder,
            MethodArg::SmallFluctuation => Self::SmallFluctuation,
            MethodArg::SmallQ => Self::SmallQ,
            MethodArg::Eta => Self::Eta,
            MethodArg::EtaHigher => Self::EtaHigher,
            MethodArg::StochDirect => Self::StochDirect,
            MethodArg::StochEquiv => Self::StochEquiv,
            MethodArg::StochSmallFluctuation => Self::StochSmallFluctuation,
        }
    }
}

fn parse_axes(text: &str) -> AppResult<AxisRatios> {
    let v: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| AppError::config(format!("--axes: {e}")))?;
    match v[..] {
        [a, b, c] => Ok(AxisRatios::new(a, b, c)?),
        _ => Err(AppError::config("--axes takes three values a,b,c")),
    }
}

fn run(cli: Cli) -> AppResult<()> {
    let c = cli.common;
    let common = Common { config: c.config, seed: c.seed, cycles: c.cycles, out: c.out, fast: c.fast };
    let (report, save_dir): (Report, Option<PathBuf>) = match cli.command {
        Command::Cycle => (commands::cmd_cycle(&common.load()?)?, common.out.clone()),
        Command::Growth { method } => {
            let methods: Vec<GrowthMethod> = method.into_iter().map(Into::into).collect();
            (commands::cmd_growth(&common.load()?, &methods)?, common.out.clone())
        }
        Command::Equiv => (commands::cmd_equiv(&common.load()?)?, common.out.clone()),
        Command::Fig1(f) => fig(1, f, &common)?,
        Command::Fig2(f) => fig(2, f, &common)?,
        Command::Fig3(f) => fig(3, f, &common)?,
        Command::ExtractOrbit { trace, axes } => {
            (commands::cmd_extract_orbit(&trace, parse_axes(&axes)?)?, Some(common.out_dir().to_path_buf()))
        }
        Command::ValidateBarrier { barrier } => (commands::cmd_validate_barrier(barrier.as_deref(), &common)?, None),
    };
    if let Some(dir) = save_dir {
        report.save(&dir)?;
    }
    print!("{}", report.text);
    Ok(())
}

fn fig(which: u8, f: FigArgs, common: &Common) -> AppResult<(Report, Option<PathBuf>)> {
    let direct = match f.direct_elements {
        DirectArg::Exact => DirectElements::Exact,
        DirectArg::FirstOrder => DirectElements::FirstOrder,
    };
    let report = commands::cmd_fig(which, common, &FigOptions { grid: f.grid, direct })?;
    Ok((report, Some(common.out_dir().to_path_buf())))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
