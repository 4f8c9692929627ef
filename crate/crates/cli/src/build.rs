//! Turns a config into core objects: model, grid, scheme and experiment.

use std::f64::consts::PI;

use stlw_core::grid::{
    build_local_timestep_grid, build_moving_vertex_grid, build_perturbed_grid, build_staggered_grid,
    build_uniform_grid, insert_remap_layer, GridFamily, SpaceTimeGrid,
};
use stlw_core::model::{Advection, Burgers, PhysicalModel, Selfsimilar, Trivial};
use stlw_core::numerics::{lf_scheme, spacetime_lf_scheme, staggered_lf_scheme, NumericalScheme, SpacetimeOptions};
use stlw_core::quadrature::FaceQuadrature;
use stlw_core::verify::{Experiment, ModelKind, ReferenceKind, SchemeKind};

use crate::config::{ExperimentConfig, Family, ModelSpec, Reference, SchemeName};
use crate::error::{CliError, Context, Result};

/// Admissible box: the data range padded by half its width plus one half.
pub fn model(cfg: &ExperimentConfig) -> Result<Box<dyn PhysicalModel<f64>>> {
    let (lo, hi) = cfg.u0.range();
    let pad = 0.5 * (hi - lo) + 0.5;
    let (lo, hi) = (lo - pad, hi + pad);
    let m: Box<dyn PhysicalModel<f64>> = match cfg.model {
        ModelSpec::Burgers => Box::new(Burgers::new(lo, hi).within(&cfg.name)?),
        ModelSpec::Advection { c } => Box::new(Advection::new(c, lo, hi).within(&cfg.name)?),
        ModelSpec::Trivial => Box::new(Trivial::new(lo, hi).within(&cfg.name)?),
        ModelSpec::Selfsimilar { d } => Box::new(Selfsimilar { base: Box::new(Burgers::new(lo, hi).within(&cfg.name)?), d }),
    };
    Ok(m)
}

pub fn grid(cfg: &ExperimentConfig, h: f64) -> Result<SpaceTimeGrid<f64>> {
    let g = &cfg.grid;
    let (x_lo, x_hi) = cfg.x_range;
    let t = cfg.t_end;
    let name = cfg.name.as_str();
    match g.family {
        Family::Uniform => build_uniform_grid(h, g.lambda, t, x_lo, x_hi).within(name),
        Family::Staggered => {
            let dt = g.dt.expect("validated: staggered grids carry dt").dt(h);
            build_staggered_grid(h, dt, t, x_lo, x_hi).within(name)
        }
        Family::LocalTimestep => {
            let region = g.refine.expect("validated: local time stepping carries a region");
            build_local_timestep_grid(h, g.lambda, region, t, x_lo, x_hi).within(name)
        }
        Family::MovingVertex => {
            let (amp, w) = (g.velocity, x_hi - x_lo);
            build_moving_vertex_grid(h, g.lambda, t, x_lo, x_hi, move |_, x| amp * (PI * (x - x_lo) / w).sin()).within(name)
        }
        Family::Remap => {
            let spec = g.remap.expect("validated: remap grids carry a spec");
            let base = build_uniform_grid(h, g.lambda, t, x_lo, x_hi).within(name)?;
            // snap onto the nearest layer boundary
            let t_remap = base
                .layer_times
                .iter()
                .copied()
                .skip(1)
                .min_by(|a, b| (a - spec.t).abs().total_cmp(&(b - spec.t).abs()))
                .ok_or_else(|| CliError::Usage(format!("{name}: the grid has a single layer, nothing to remap")))?;
            let n = ((spec.ratio * (x_hi - x_lo) / h).round() as usize).max(1);
            let breaks: Vec<f64> =
                (0..=n).map(|i| x_lo + (x_hi - x_lo) * (i as f64 / n as f64).powf(spec.grading)).collect();
            insert_remap_layer(&base, t_remap, &breaks).within(name)
        }
        Family::Perturbed => {
            build_perturbed_grid(h, t, x_lo, x_hi, g.perturbation, g.triangulate, cfg.seed).within(name)
        }
    }
}

pub fn scheme<'a>(
    cfg: &ExperimentConfig,
    model: &'a dyn PhysicalModel<f64>,
    grid: &'a SpaceTimeGrid<f64>,
    u0: &'a stlw_core::initial::InitialData<f64>,
) -> Result<NumericalScheme<'a, f64>> {
    if cfg.grid.family == Family::Perturbed {
        return Err(CliError::Usage(format!("{}: perturbed grids are geometry only and cannot be marched", cfg.name)));
    }
    let s = &cfg.scheme;
    match s.name {
        SchemeName::LaxFriedrichs => {
            let GridFamily::Uniform { lambda, .. } = grid.family else {
                return Err(CliError::Usage(format!("{}: lax-friedrichs needs the uniform family", cfg.name)));
            };
            lf_scheme(model, grid, u0, lambda).within(&cfg.name)
        }
        SchemeName::StaggeredLf => staggered_lf_scheme(model, grid, u0).within(&cfg.name),
        SchemeName::SpacetimeLf => {
            let opts = SpacetimeOptions {
                alpha: s.alpha.unwrap_or(1.0 / cfg.grid.lambda),
                reconstruction: s.reconstruction,
                quadrature: FaceQuadrature::default(),
            };
            spacetime_lf_scheme(model, grid, u0, opts).within(&cfg.name)
        }
    }
}

/// Whether `run` can hand the config to the convergence study.
pub fn is_study(cfg: &ExperimentConfig) -> bool {
    !matches!(cfg.model, ModelSpec::Selfsimilar { .. })
        && matches!(
            (cfg.scheme.name, cfg.grid.family),
            (SchemeName::LaxFriedrichs, Family::Uniform) | (SchemeName::StaggeredLf, Family::Staggered)
        )
}

/// The convergence experiment behind `run`; only Lax-Friedrichs on uniform
/// grids and staggered LF on staggered grids are studied.
pub fn experiment(cfg: &ExperimentConfig, quad_refine: bool) -> Result<Experiment<f64>> {
    let unsupported = |what: String| Err(CliError::Usage(format!("{}: `run` does not support {what}", cfg.name)));
    let model = match cfg.model {
        ModelSpec::Burgers => ModelKind::Burgers,
        ModelSpec::Advection { c } => ModelKind::Advection { c },
        ModelSpec::Trivial => ModelKind::Trivial,
        ModelSpec::Selfsimilar { .. } => return unsupported("the selfsimilar model (use verify-flux)".into()),
    };
    let scheme = match (cfg.scheme.name, cfg.grid.family) {
        (SchemeName::LaxFriedrichs, Family::Uniform) => SchemeKind::LaxFriedrichs { lambda: cfg.grid.lambda },
        (SchemeName::StaggeredLf, Family::Staggered) => {
            SchemeKind::StaggeredLf { step: cfg.grid.dt.expect("validated: staggered grids carry dt") }
        }
        (s, f) => return unsupported(format!("{s:?} on the {f:?} family (use verify-flux or grid)")),
    };
    let mut e = Experiment::new(&cfg.name, model, scheme, cfg.u0.clone(), cfg.t_end, cfg.x_range);
    e.window = cfg.window;
    e.reference = cfg.reference.clone().map(|r| match r {
        Reference::Exact(p) => ReferenceKind::Exact(p),
        Reference::Smoothed => ReferenceKind::Smoothed,
    });
    e.truth = cfg.truth.clone();
    e.entropy_levels = cfg.entropy.clone();
    e.residuals = cfg.residuals;
    if quad_refine {
        e.quadrature = e.quadrature.refined();
    }
    Ok(e)
}
