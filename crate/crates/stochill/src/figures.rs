//! The three figure sweeps and their line-chart rendering.

use std::path::Path;

use plotters::prelude::*;
use rayon::prelude::*;
use stochill_core::cycle::cycle_elements;
use stochill_core::model::DEFAULT_INTEGRATOR_TOL;
use stochill_core::random::{growth_eta_sampled, growth_small_q};
use stochill_core::{
    small_q_elements, BarrierShape, ElementMode, HillParams, PerturbationDist, RandomHillRun, SmallQMode,
};

use crate::csvio::{Cell, Table};
use crate::error::{AppError, AppResult};
use crate::sweep::{growth_random, Axis, Spacing, SweepSpec};

/// q of the matrix-element comparison.
pub const FIG1_Q: f64 = 0.5;
/// λ of the growth-rate comparison.
pub const FIG2_LAMBDA: f64 = 0.5;
/// ⟨q²⟩ of the shape comparison.
pub const FIG3_MEAN_Q_SQ: f64 = 1.0;

pub fn default_grid(which: u8) -> SweepSpec {
    let spec = match which {
        1 => SweepSpec::range(Axis::Lambda, 0.26, 10.0, 200, Spacing::Linear),
        2 => SweepSpec::range(Axis::Amplitude, 1e-3, 1.0, 13, Spacing::Log),
        _ => SweepSpec::range(Axis::Lambda, 0.26, 100.0, 200, Spacing::Log),
    };
    spec.expect("default grids are valid")
}

fn nan_on_err<T>(r: stochill_core::Result<T>, f: impl FnOnce(T) -> f64) -> f64 {
    r.map(f).unwrap_or(f64::NAN)
}

/// h(λ) at q = ½ for the sin² barrier: integrated, small-q first order and
/// small-q generalized.
pub fn fig1(spec: &SweepSpec) -> AppResult<Table> {
    let rows: Vec<AppResult<Vec<Cell>>> = spec
        .grid
        .par_iter()
        .map(|&lambda| {
            let params = HillParams::new(lambda, FIG1_Q)?;
            let (h, _) = cycle_elements(&params, &BarrierShape::Sin2, DEFAULT_INTEGRATOR_TOL)?;
            let first =
                nan_on_err(small_q_elements(lambda, FIG1_Q, &BarrierShape::Sin2, SmallQMode::FirstOrder), |e| e.0);
            let gen =
                nan_on_err(small_q_elements(lambda, FIG1_Q, &BarrierShape::Sin2, SmallQMode::Generalized), |e| e.0);
            Ok(vec![lambda.into(), h.into(), first.into(), gen.into()])
        })
        .collect();
    let mut t = Table::new(&["lambda", "h_exact", "h_first_order", "h_generalized"]);
    for r in rows {
        t.push(r?);
    }
    Ok(t)
}

/// Which per-cycle elements the Monte Carlo column of [`fig2`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectElements {
    Exact,
    FirstOrder,
}

/// γ(A_q) at λ = ½, sin² barrier, q_k uniform on [−A_q, A_q]: matrix
/// products, log(1 + ½⟨η²⟩⟨sin²θ⟩) from sampled first-order and generalized
/// small-q elements, and the small-q closed form.
pub fn fig2(spec: &SweepSpec, n_cycles: u64, seed: u64, direct: DirectElements) -> AppResult<Table> {
    let mut t = Table::new(&[
        "A_q",
        "gamma_direct",
        "stderr_direct",
        "gamma_eta_sampled",
        "stderr_eta_sampled",
        "gamma_small_q",
        "gamma_higher_order",
        "stderr_higher_order",
    ]);
    let params = HillParams::new(FIG2_LAMBDA, 0.0)?;
    for &amp in &spec.grid {
        let dist = PerturbationDist::UniformSymmetric { amplitude: amp };
        let make = |mode| {
            RandomHillRun::new(params, BarrierShape::Sin2, PerturbationDist::ZERO, dist, mode, DEFAULT_INTEGRATOR_TOL)
        };
        let direct_mode = match direct {
            DirectElements::Exact => ElementMode::Exact,
            DirectElements::FirstOrder => ElementMode::FirstOrder,
        };
        let (gd, sd) = match growth_random(&make(direct_mode)?, n_cycles, seed, 16) {
            Ok(g) => (g.gamma, g.stderr),
            Err(e) => {
                eprintln!("warning: A_q = {amp}: direct estimate failed: {e}");
                (f64::NAN, f64::NAN)
            }
        };
        let sampled = |mode| match growth_eta_sampled(&make(mode)?, n_cycles, seed) {
            Ok(g) => Ok((g.gamma, g.stderr)),
            Err(e) => {
                eprintln!("warning: A_q = {amp}: sampled estimate failed: {e}");
                Ok::<_, AppError>((f64::NAN, f64::NAN))
            }
        };
        let (ge, se) = sampled(ElementMode::SmallQFirstOrder)?;
        let (gh, sh) = sampled(ElementMode::SmallQGeneralized)?;
        let g_small_q = growth_small_q(FIG2_LAMBDA, dist.second_moment(), &BarrierShape::Sin2);
        t.push(vec![amp.into(), gd.into(), sd.into(), ge.into(), se.into(), g_small_q.into(), gh.into(), sh.into()]);
    }
    Ok(t)
}

/// Small-q growth rate vs λ at ⟨q²⟩ = 1 for the three catalog shapes.
pub fn fig3(spec: &SweepSpec) -> AppResult<Table> {
    let mut t = Table::new(&["lambda", "gamma_sin4", "gamma_sin2", "gamma_delta"]);
    for &lambda in &spec.grid {
        if !(lambda > 0.0) {
            return Err(AppError::config("lambda must be positive"));
        }
        let g = |s: &BarrierShape| growth_small_q(lambda, FIG3_MEAN_Q_SQ, s);
        t.push(vec![
            lambda.into(),
            g(&BarrierShape::Sin4).into(),
            g(&BarrierShape::Sin2).into(),
            g(&BarrierShape::DeltaMidpoint).into(),
        ]);
    }
    Ok(t)
}

/// Axis options for [`render`].
#[derive(Debug, Clone, Copy)]
pub struct PlotStyle<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log_x: bool,
    pub log_y: bool,
}

const COLORS: [RGBColor; 5] = [BLACK, RED, BLUE, GREEN, MAGENTA];

/// Line chart of every named column against the first column, as SVG.
pub fn render(table: &Table, columns: &[&str], style: PlotStyle<'_>, path: &Path) -> AppResult<()> {
    let x = table.column(&table.header[0]).unwrap_or_default();
    let ok = |v: f64, log: bool| v.is_finite() && (!log || v > 0.0);
    let series: Vec<(&str, Vec<(f64, f64)>)> = columns
        .iter()
        .map(|c| {
            let y = table.column(c).unwrap_or_default();
            let pts = x
                .iter()
                .zip(y)
                .filter(|(a, b)| ok(**a, style.log_x) && ok(*b, style.log_y))
                .map(|(a, b)| (*a, b))
                .collect();
            (*c, pts)
        })
        .collect();
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.1.iter().copied()).collect();
    if all.is_empty() {
        return Err(AppError::config("nothing to plot: every value is missing"));
    }
    let bounds = |vals: &mut dyn Iterator<Item = f64>, log: bool| {
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if hi > lo {
            (lo, hi)
        } else if log {
            (lo / 2.0, hi * 2.0)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x0, x1) = bounds(&mut all.iter().map(|p| p.0), style.log_x);
    let (y0, y1) = bounds(&mut all.iter().map(|p| p.1), style.log_y);

    let draw = || -> Result<(), Box<dyn std::error::Error>> {
        let root = SVGBackend::new(path, (800, 560)).into_drawing_area();
        root.fill(&WHITE)?;
        let mut builder = ChartBuilder::on(&root);
        builder.caption(style.title, ("sans-serif", 20)).margin(12).x_label_area_size(40).y_label_area_size(70);
        macro_rules! finish {
            ($chart:expr) => {{
                let mut chart = $chart;
                chart.configure_mesh().x_desc(style.x_label).y_desc(style.y_label).draw()?;
                for (i, (name, pts)) in series.iter().enumerate() {
                    let color = COLORS[i % COLORS.len()];
                    chart
                        .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))?
                        .label(*name)
                        .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
                }
                chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw()?;
            }};
        }
        match (style.log_x, style.log_y) {
            (false, false) => finish!(builder.build_cartesian_2d(x0..x1, y0..y1)?),
            (true, false) => finish!(builder.build_cartesian_2d((x0..x1).log_scale(), y0..y1)?),
            (false, true) => finish!(builder.build_cartesian_2d(x0..x1, (y0..y1).log_scale())?),
            (true, true) => finish!(builder.build_cartesian_2d((x0..x1).log_scale(), (y0..y1).log_scale())?),
        }
        root.present()?;
        Ok(())
    };
    draw().map_err(|e| AppError::Write { path: path.into(), source: std::io::Error::other(e.to_string()) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig3_columns_follow_the_shapes() {
        let t = fig3(&SweepSpec::new(Axis::Lambda, vec![0.5, 64.0]).unwrap()).unwrap();
        let sin2 = t.column("gamma_sin2").unwrap();
        let delta = t.column("gamma_delta").unwrap();
        assert!(sin2[1] / sin2[0] < 1e-3);
        assert!(delta[1] > sin2[1]);
        assert!((delta[1] - (1.0f64 / 512.0).ln_1p()).abs() < 1e-15);
    }

    #[test]
    fn fig1_small_lambda_row() {
        let t = fig1(&SweepSpec::new(Axis::Lambda, vec![0.5]).unwrap()).unwrap();
        let h = t.column("h_exact").unwrap()[0];
        let f = t.column("h_first_order").unwrap()[0];
        let phi = std::f64::consts::PI * 0.5f64.sqrt();
        assert!((f - (phi.cos() - 0.5 / (2.0 * 0.5f64.sqrt()) * phi.sin())).abs() < 1e-14);
        assert!((h - f).abs() < 0.05);
    }

    #[test]
    fn render_writes_svg() {
        let dir = tempfile::tempdir().unwrap();
        let t = fig3(&SweepSpec::range(Axis::Lambda, 0.3, 50.0, 20, Spacing::Log).unwrap()).unwrap();
        let path = dir.path().join("f.svg");
        let style = PlotStyle { title: "t", x_label: "lambda", y_label: "gamma", log_x: true, log_y: false };
        render(&t, &["gamma_sin2", "gamma_delta"], style, &path).unwrap();
        let svg = std::fs::read_to_string(&path).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    }
}
