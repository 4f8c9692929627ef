//! The subcommands. Each returns its files and checks; `main` decides the
//! exit status.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use stlw_core::grid::io::{read_grid, write_grid};
use stlw_core::grid::{GridFamily, SpaceTimeGrid};
use stlw_core::initial::InitialData;
use stlw_core::numerics::{verify_flux_properties, BiasedFlux, NumericalFlux, PropertyOptions, PropertyReport};
use stlw_core::geometry::Point;
use stlw_core::quadrature::FaceQuadrature;
use stlw_core::solver::march;
use stlw_core::verify::{
    convergence_study, default_battery, divergence_defect, log_log_svg, moment_defect, residual_report, table_csv,
    table_summary, ConvergenceTable, ResidualContext, StudyRow, TestFunction,
};

use crate::build;
use crate::bundled;
use crate::config::{Assertion, ExperimentConfig, Family, FluxVariant};
use crate::error::{io_err, CliError, Context, Result};
use crate::output::OutputDir;

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Doubles every quadrature segment count.
    pub quad_refine: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
    /// Human-readable summary, also written to disk.
    pub report: String,
}

impl Outcome {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// A config path, or the name of a bundled config.
pub fn load_config(arg: &str) -> Result<ExperimentConfig> {
    let path = Path::new(arg);
    let src = if path.exists() {
        std::fs::read_to_string(path).map_err(io_err(path))?
    } else if let Some(b) = bundled::find(arg) {
        b.source.to_string()
    } else {
        return Err(CliError::Usage(format!(
            "`{arg}` is neither a file nor a bundled config (try `stlw list`)"
        )));
    };
    ExperimentConfig::parse(&src)
}

fn out_dir(cfg: &ExperimentConfig, opts: &Options) -> PathBuf {
    opts.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out").join(&cfg.name))
}

fn with_seed(cfg: &ExperimentConfig, opts: &Options) -> ExperimentConfig {
    let mut c = cfg.clone();
    if let Some(s) = opts.seed {
        c.seed = s;
    }
    c
}

/// Flux property report at `h`; `short` truncates the slab to a few steps,
/// which is enough for these local checks.
fn audit(cfg: &ExperimentConfig, h: f64, short: bool) -> Result<PropertyReport<f64>> {
    let mut c = cfg.clone();
    if short {
        let dt = match (c.grid.family, c.grid.dt) {
            (Family::Staggered, Some(step)) => step.dt(h),
            _ => c.grid.lambda * h,
        };
        c.t_end = c.t_end.min(16.0 * dt);
    }
    let model = build::model(&c)?;
    let grid = build::grid(&c, h)?;
    let u0 = InitialData::scalar(c.u0.clone());
    let scheme = build::scheme(&c, model.as_ref(), &grid, &u0)?;
    let opts = PropertyOptions { seed: c.seed, ..PropertyOptions::default() };
    let biased;
    let flux: &dyn NumericalFlux<f64> = match c.scheme.flux {
        FluxVariant::Exact => scheme.flux.as_ref(),
        FluxVariant::Biased => {
            biased = BiasedFlux { inner: scheme.flux.clone(), bias: h * h };
            &biased
        }
    };
    verify_flux_properties(&scheme, flux, opts).within(&c.name)
}

fn flux_checks(r: &PropertyReport<f64>) -> Vec<Check> {
    let c = |name: &str, passed: bool, detail: String| Check { name: name.into(), passed, detail };
    vec![
        c("consistency", r.consistent(), format!("{:.3e} <= 1e-12", r.consistency_error)),
        c("conservation", r.conservative(), format!("{:.3e} <= 1e-12", r.conservation_defect)),
        c(
            "stencil",
            r.stencil_ok() && r.probed_radius <= 1.5,
            format!("probed {:.3} h_max, declared {:.3} h_max, leaks {}", r.probed_radius, r.stencil_radius, r.stencil_leaks),
        ),
        c("bounded", r.bounded(), format!("{:.3e}", r.bound)),
    ]
}

fn flux_csv(r: &PropertyReport<f64>) -> String {
    let mut s = String::from("metric,value\n");
    let mut row = |k: &str, v: String| {
        let _ = writeln!(s, "{k},{v}");
    };
    row("consistency_error", format!("{:e}", r.consistency_error));
    row("conservation_defect", format!("{:e}", r.conservation_defect));
    row("stencil_radius", format!("{:e}", r.stencil_radius));
    row("probed_radius", format!("{:e}", r.probed_radius));
    row("stencil_leaks", r.stencil_leaks.to_string());
    row("bound", format!("{:e}", r.bound));
    for (d, m) in &r.continuity {
        row(&format!("continuity_{d:e}"), format!("{m:e}"));
    }
    s
}

pub fn verify_flux(cfg: &ExperimentConfig, opts: &Options) -> Result<Outcome> {
    let cfg = with_seed(cfg, opts);
    let h = cfg.grid.hs[0];
    let report = audit(&cfg, h, false)?;
    let mut out = OutputDir::create(&out_dir(&cfg, opts))?;
    let mut text = format!("experiment {}\nh = {h}, seed = {}\n", cfg.name, cfg.seed);
    text.push_str(&report.summary());
    let checks = flux_checks(&report);
    push_checks(&mut text, &checks);
    out.write(&format!("{}_flux.txt", cfg.name), &text)?;
    out.write(&format!("{}_flux.csv", cfg.name), &flux_csv(&report))?;
    Ok(Outcome { files: out.finish()?, checks, report: text })
}

fn push_checks(text: &mut String, checks: &[Check]) {
    if checks.is_empty() {
        return;
    }
    text.push_str("checks\n");
    for c in checks {
        let _ = writeln!(text, "  {:<4} {:<24} {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
    }
}

fn e(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

pub const CONVERGENCE_HEADER: &str =
    "experiment,h,h_max,quasi_ratio,l1_error,l1_truth,weak_max,entropy_max,mass_drift,rate,quad_defect";

/// One row per mesh width.
pub fn convergence_csv(t: &ConvergenceTable<f64>) -> String {
    let mut s = format!("{CONVERGENCE_HEADER}\n");
    for r in &t.rows {
        let _ = writeln!(
            s,
            "{},{:e},{:e},{:e},{},{},{},{},{:e},{},{}",
            t.experiment,
            r.h,
            r.h_max,
            r.quasi_ratio,
            e(r.l1_error),
            e(r.l1_truth),
            e(r.max_weak()),
            e(r.max_entropy()),
            r.mass_drift,
            e(r.rate),
            e(r.residuals.as_ref().map(|x| x.refinement_defect)),
        );
    }
    s
}

fn plot(t: &ConvergenceTable<f64>) -> String {
    let col = |f: &dyn Fn(&StudyRow<f64>) -> Option<f64>| -> Vec<(f64, f64)> {
        t.rows.iter().filter_map(|r| f(r).map(|v| (r.h, v.abs()))).collect()
    };
    let mut series: Vec<(&str, Vec<(f64, f64)>)> = Vec::new();
    for (name, s) in [
        ("l1_error", col(&|r| r.l1_error)),
        ("l1_truth", col(&|r| r.l1_truth)),
        ("weak_residual", col(&|r| r.max_weak())),
    ] {
        if !s.is_empty() {
            series.push((name, s));
        }
    }
    log_log_svg(&t.experiment, &series)
}

/// Row assertions fail as "not available" when the run has no such column
/// (or no rows at all).
fn assertion_checks(asserts: &[Assertion], t: &ConvergenceTable<f64>, flux: Option<&PropertyReport<f64>>) -> Vec<Check> {
    let rows = &t.rows;
    let all = |f: &dyn Fn(&StudyRow<f64>) -> Option<f64>| -> Option<Vec<f64>> {
        if rows.is_empty() {
            return None;
        }
        rows.iter().map(f).collect()
    };
    let seq = |v: &Option<Vec<f64>>| match v {
        Some(v) => v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", "),
        None => "not available".into(),
    };
    let mut out = Vec::new();
    let mut push = |name: String, passed: bool, detail: String| out.push(Check { name, passed, detail });
    for a in asserts {
        match *a {
            Assertion::FluxProperties => match flux {
                Some(f) => push("flux_properties".into(), f.passes(), format!("first h: {}", if f.passes() { "all pass" } else { "violated" })),
                None => push("flux_properties".into(), false, "no scheme on this grid".into()),
            },
            Assertion::MassDriftMax(x) => {
                let v = all(&|r| Some(r.mass_drift));
                push(format!("mass_drift <= {x:e}"), v.as_ref().is_some_and(|v| v.iter().all(|d| *d <= x)), seq(&v));
            }
            Assertion::L1Max(x) => {
                let v = all(&|r| r.l1_error);
                push(format!("l1_error <= {x:e}"), v.as_ref().is_some_and(|v| v.iter().all(|d| *d <= x)), seq(&v));
            }
            Assertion::L1FinalMax(x) => {
                let v = all(&|r| r.l1_error);
                let ok = v.as_ref().and_then(|v| v.last()).is_some_and(|d| *d <= x);
                push(format!("final l1_error <= {x:e}"), ok, seq(&v));
            }
            Assertion::L1RatioMin(x) => {
                let v = all(&|r| r.l1_error);
                let ok = v.as_ref().is_some_and(|v| v.windows(2).all(|w| w[0] >= x * w[1]));
                push(format!("l1_error ratio >= {x}"), ok, seq(&v));
            }
            Assertion::RateMin(x) => {
                let v: Option<Vec<f64>> = rows.iter().skip(1).map(|r| r.rate).collect();
                let ok = v.as_ref().is_some_and(|v| !v.is_empty() && v.iter().all(|r| *r >= x));
                push(format!("rate >= {x}"), ok, seq(&v));
            }
            Assertion::WeakDecreasing => {
                let v = all(&|r| r.max_weak());
                let ok = v.as_ref().is_some_and(|v| v.windows(2).all(|w| w[1] < w[0]));
                push("weak residual decreasing".into(), ok, seq(&v));
            }
            Assertion::WeakFinalRatioMax(x) => {
                let v = all(&|r| r.max_weak());
                let ok = v.as_ref().is_some_and(|v| v.len() > 1 && v[v.len() - 1] <= x * v[0]);
                push(format!("weak final / initial <= {x}"), ok, seq(&v));
            }
            Assertion::EntropyMax(x) => {
                let v = all(&|r| r.max_entropy());
                push(format!("entropy residual <= {x:e}"), v.as_ref().is_some_and(|v| v.iter().all(|d| *d <= x)), seq(&v));
            }
            Assertion::TruthFinalMin(x) => {
                let v = all(&|r| r.l1_truth);
                let ok = v.as_ref().and_then(|v| v.last()).is_some_and(|d| *d >= x);
                push(format!("final l1_truth >= {x}"), ok, seq(&v));
            }
            Assertion::TruthNondecreasing => {
                let v = all(&|r| r.l1_truth);
                let ok = v.as_ref().is_some_and(|v| v.windows(2).all(|w| w[1] >= w[0]));
                push("l1_truth non-decreasing".into(), ok, seq(&v));
            }
            Assertion::QuadDefectMax(x) => {
                let v = all(&|r| r.residuals.as_ref().map(|x| x.refinement_defect));
                push(format!("quadrature defect <= {x:e}"), v.as_ref().is_some_and(|v| v.iter().all(|d| *d <= x)), seq(&v));
            }
        }
    }
    out
}

fn header(cfg: &ExperimentConfig, q: FaceQuadrature) -> String {
    let mut text = String::new();
    if !cfg.description.is_empty() {
        let _ = writeln!(text, "{}", cfg.description);
    }
    let _ = writeln!(text, "battery {}, seed {}, quadrature {} points x {} segments", cfg.battery, cfg.seed, q.points, q.segments);
    text
}

fn quadrature(opts: &Options) -> FaceQuadrature {
    let q = FaceQuadrature::default();
    if opts.quad_refine {
        q.refined()
    } else {
        q
    }
}

/// Convergence study for the families the study supports, a plain march per
/// mesh width for the others, and a geometry report for perturbed grids.
pub fn run(cfg: &ExperimentConfig, opts: &Options) -> Result<Outcome> {
    let cfg = with_seed(cfg, opts);
    if build::is_study(&cfg) {
        run_study(&cfg, opts)
    } else if cfg.grid.family == Family::Perturbed {
        run_geometry(&cfg, opts)
    } else {
        run_march(&cfg, opts)
    }
}

fn run_study(cfg: &ExperimentConfig, opts: &Options) -> Result<Outcome> {
    let exp = build::experiment(cfg, opts.quad_refine)?;
    let flux = audit(cfg, cfg.grid.hs[0], true)?;
    let table = convergence_study(&exp, &cfg.grid.hs).within(&cfg.name)?;
    let checks = assertion_checks(&cfg.asserts, &table, Some(&flux));

    let mut text = header(cfg, exp.quadrature);
    text.push_str(&table_summary(&table));
    if table.rows.iter().any(|r| r.l1_truth.is_some()) {
        text.push_str("distance to the true solution\n");
        for r in &table.rows {
            let _ = writeln!(text, "  h = {:.4e}: {}", r.h, r.l1_truth.map(|v| format!("{v:.4e}")).unwrap_or_default());
        }
    }
    text.push_str(&flux.summary());
    push_checks(&mut text, &checks);

    let mut out = OutputDir::create(&out_dir(cfg, opts))?;
    out.write(&format!("{}_convergence.csv", cfg.name), &convergence_csv(&table))?;
    out.write(&format!("{}_residuals.csv", cfg.name), &table_csv(&table))?;
    out.write(&format!("{}_summary.txt", cfg.name), &text)?;
    out.write(&format!("{}.svg", cfg.name), &plot(&table))?;
    Ok(Outcome { files: out.finish()?, checks, report: text })
}

/// Bumps supported strictly after `t = 0`; the divergence identity needs
/// `φ = 0` on the slab boundary.
fn interior(battery: &[TestFunction<f64>]) -> impl Iterator<Item = &TestFunction<f64>> {
    battery.iter().filter(|phi| phi.bbox().0 > 0.0)
}

struct MarchRow {
    cells: usize,
    balance: f64,
    divergence: f64,
}

fn march_once(cfg: &ExperimentConfig, h: f64, q: FaceQuadrature) -> Result<(StudyRow<f64>, MarchRow)> {
    let name = cfg.name.as_str();
    let model = build::model(cfg)?;
    let grid = build::grid(cfg, h)?;
    let u0 = InitialData::scalar(cfg.u0.clone());
    let scheme = build::scheme(cfg, model.as_ref(), &grid, &u0)?;
    let r = march(&scheme).within(name)?;
    let d = grid.domain;
    let (l, rt) = cfg.u0.tails();
    let (mut fl, mut fr) = ([0.0], [0.0]);
    model.flux(&[l], Point::new(0.0, d.x_lo), &mut fl);
    model.flux(&[rt], Point::new(0.0, d.x_hi), &mut fr);
    // sub-steps leave the coarse cells one step behind: compare at the
    // synchronised times only
    let coarse = match grid.family {
        GridFamily::LocalTimestep { h, lambda, .. } => Some(lambda * h),
        _ => None,
    };
    let synced = |t: f64| coarse.is_none_or(|dt| ((t / dt).round() * dt - t).abs() <= 1e-9 * dt);
    let m0 = r.per_layer_mass[0];
    let drift = grid
        .layer_times
        .iter()
        .zip(&r.per_layer_mass)
        .filter(|(&t, _)| synced(t))
        .map(|(&t, &m)| (m - m0 - t * (fl[0] - fr[0])).abs())
        .fold(0.0, f64::max);
    let battery = default_battery(cfg.t_end, cfg.window.0, cfg.window.1);
    let residuals = if cfg.residuals {
        let ctx = ResidualContext::new(&grid, model.as_ref(), &u0, &r.solution).excluding(&r.flagged).with_quadrature(q);
        Some(residual_report(&ctx, &battery, &cfg.entropy).within(name)?)
    } else {
        None
    };
    let divergence = interior(&battery).map(|phi| divergence_defect(&grid, phi, q)).fold(0.0, f64::max);
    let m = grid.metrics();
    let row = StudyRow {
        h,
        h_max: m.h_max,
        quasi_ratio: m.quasi_ratio,
        l1_error: None,
        l1_truth: None,
        residuals,
        mass_drift: drift,
        rate: None,
    };
    Ok((row, MarchRow { cells: grid.n_cells(), balance: r.max_balance_residual, divergence }))
}

fn run_march(cfg: &ExperimentConfig, opts: &Options) -> Result<Outcome> {
    let q = quadrature(opts);
    let flux = audit(cfg, cfg.grid.hs[0], true)?;
    let mut rows = Vec::new();
    let mut extra = Vec::new();
    for &h in &cfg.grid.hs {
        let (r, x) = march_once(cfg, h, q)?;
        rows.push(r);
        extra.push(x);
    }
    let table = ConvergenceTable {
        experiment: cfg.name.clone(),
        rows,
        battery: default_battery(cfg.t_end, cfg.window.0, cfg.window.1),
    };
    let checks = assertion_checks(&cfg.asserts, &table, Some(&flux));

    let mut text = header(cfg, q);
    text.push_str(&table_summary(&table));
    let mut grid_csv = String::from("experiment,h,cells,balance_max,divergence_max\n");
    text.push_str("march\n");
    for (r, x) in table.rows.iter().zip(&extra) {
        let _ = writeln!(
            text,
            "  h = {:.4e}: {} cells, cell balance {:.3e}, divergence identity {:.3e}",
            r.h, x.cells, x.balance, x.divergence
        );
        let _ = writeln!(grid_csv, "{},{:e},{},{:e},{:e}", cfg.name, r.h, x.cells, x.balance, x.divergence);
    }
    text.push_str(&flux.summary());
    push_checks(&mut text, &checks);

    let mut out = OutputDir::create(&out_dir(cfg, opts))?;
    out.write(&format!("{}_convergence.csv", cfg.name), &convergence_csv(&table))?;
    out.write(&format!("{}_residuals.csv", cfg.name), &table_csv(&table))?;
    out.write(&format!("{}_grid.csv", cfg.name), &grid_csv)?;
    out.write(&format!("{}_summary.txt", cfg.name), &text)?;
    out.write(&format!("{}.svg", cfg.name), &plot(&table))?;
    Ok(Outcome { files: out.finish()?, checks, report: text })
}

/// Perturbed grids carry no scheme: metrics and the divergence identity only.
fn run_geometry(cfg: &ExperimentConfig, opts: &Options) -> Result<Outcome> {
    let q = quadrature(opts);
    let battery = default_battery(cfg.t_end, cfg.window.0, cfg.window.1);
    let mut csv = String::from("experiment,h,h_max,quasi_ratio,surface_ratio,cells,divergence_max,moment_max\n");
    let mut text = format!("experiment {}\n", cfg.name);
    text.push_str(&header(cfg, q));
    text.push_str("geometry\n");
    for &h in &cfg.grid.hs {
        let g = build::grid(cfg, h)?;
        let m = g.metrics();
        let div = interior(&battery).map(|phi| divergence_defect(&g, phi, q)).fold(0.0, f64::max);
        let mom = battery.iter().map(|phi| moment_defect(&g, phi, q)).fold(0.0, f64::max);
        let _ = writeln!(
            csv,
            "{},{:e},{:e},{:e},{:e},{},{:e},{:e}",
            cfg.name,
            h,
            m.h_max,
            m.quasi_ratio,
            m.surface_ratio,
            g.n_cells(),
            div,
            mom
        );
        let _ = writeln!(
            text,
            "  h = {h:.4e}: {} cells, h_max {:.4e}, quasi ratio {:.4e}, divergence identity {div:.3e}, cell moments {mom:.3e}",
            g.n_cells(),
            m.h_max,
            m.quasi_ratio
        );
    }
    let table = ConvergenceTable { experiment: cfg.name.clone(), rows: Vec::new(), battery };
    let checks = assertion_checks(&cfg.asserts, &table, None);
    push_checks(&mut text, &checks);

    let mut out = OutputDir::create(&out_dir(cfg, opts))?;
    out.write(&format!("{}_geometry.csv", cfg.name), &csv)?;
    out.write(&format!("{}_summary.txt", cfg.name), &text)?;
    Ok(Outcome { files: out.finish()?, checks, report: text })
}

fn metrics_text(g: &SpaceTimeGrid<f64>) -> String {
    let m = g.metrics();
    format!(
        "cells {}\nfaces {}\nlayers {}\nh_max {:e}\nquasi_ratio {:e}\nsurface_ratio {:e}\ncells_per_layer {}..{}\n",
        g.n_cells(),
        g.faces.len(),
        g.n_layers(),
        m.h_max,
        m.quasi_ratio,
        m.surface_ratio,
        m.cells_per_layer_min,
        m.cells_per_layer_max
    )
}

/// Writes the grid of the config at `h` (default: the first mesh width).
pub fn grid_dump(cfg: &ExperimentConfig, h: Option<f64>, path: &Path) -> Result<String> {
    let g = build::grid(cfg, h.unwrap_or(cfg.grid.hs[0]))?;
    write_grid(&g, path).within(&cfg.name)?;
    Ok(metrics_text(&g))
}

pub fn grid_load(path: &Path) -> Result<String> {
    let g = read_grid::<f64>(path).map_err(|source| CliError::File { path: path.to_path_buf(), source })?;
    Ok(metrics_text(&g))
}

pub fn list() -> String {
    let mut s = String::new();
    for b in bundled::BUNDLED {
        let desc = ExperimentConfig::parse(b.source).map(|c| c.description).unwrap_or_default();
        let _ = writeln!(s, "{:<28} {desc}", b.name);
    }
    s
}
