//! Lax-Friedrichs type schemes on layered space-time grids.
//!
//! Every cell `B` with faces above it closes its balance through them. Its
//! provisional top state is
//!
//! ```text
//! ũ_B = u_B + ((S_b - S_t) u_B - Σ_side E_{B->N} - E_lateral + G_B) / S_t
//! ```
//!
//! with `S_b`, `S_t` the total measure of the faces below and above `B`.
//! A time face `B -> A` that is the only face above `B` and the only face
//! below `A` carries `S(F) u_A` and the update sets `u_A = ũ_B`. Any other
//! time face (staggered or remap layers) carries `∫_F v_B`, where `v_B` is a
//! reconstruction of the provisional states with mean `ũ_B` over the top of
//! `B`, and `u_A` is the measure-weighted mean of those integrals.
//!
//! Side faces carry `(I_L + I_R)/2 + α S(F) (u_L - u_R)/2` where `I_w` is the
//! exact flux integral of the constant state `w`. On an axis-aligned grid with
//! `α = 1/λ` this is the classical Lax-Friedrichs flux.

use std::sync::Arc;

use rayon::prelude::*;

use super::remap::{minmod, Reconstruction};
use super::source::{ModelSource, ZeroSource};
use super::{
    exact_face_integral, initial_face_integral, CflReport, LayerUpdate, NumericalFlux, NumericalScheme,
    NumericalSource,
};
use crate::error::{invalid, Error, Result};
use crate::geometry::Point;
use crate::grid::{FaceKind, GridFamily, GridFunction, SpaceTimeGrid};
use crate::initial::InitialData;
use crate::model::PhysicalModel;
use crate::quadrature::{FaceQuadrature, SegmentRule};
use crate::scalar::Real;

/// Cells per layer above which the update runs in parallel.
const PAR_THRESHOLD: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpacetimeOptions<S> {
    /// Numerical viscosity; `1 / λ` gives Lax-Friedrichs on a uniform grid.
    pub alpha: S,
    pub reconstruction: Reconstruction,
    pub quadrature: FaceQuadrature,
}

impl<S: Real> SpacetimeOptions<S> {
    pub fn new(alpha: S) -> Self {
        Self { alpha, reconstruction: Reconstruction::Constant, quadrature: FaceQuadrature::default() }
    }
}

#[derive(Clone, Copy, Debug)]
struct LateralEdge<S> {
    a: Point<S>,
    b: Point<S>,
    /// Outward unit normal.
    n: Point<S>,
}

pub struct ClosureFlux<'a, S: Real> {
    name: String,
    grid: &'a SpaceTimeGrid<S>,
    model: &'a dyn PhysicalModel<S>,
    u0: &'a InitialData<S>,
    source: Arc<dyn NumericalSource<S> + 'a>,
    alpha: S,
    recon: Reconstruction,
    rule: SegmentRule<S>,
    m: usize,
    s_below: Vec<S>,
    s_above: Vec<S>,
    /// `x` extent of the top of each cell.
    top_extent: Vec<(S, S)>,
    lateral: Vec<Vec<LateralEdge<S>>>,
    /// Time faces that are the only face above their lower cell and the only
    /// face below their upper cell.
    simple: Vec<bool>,
    /// Left and right neighbour in the layer row (rectangular layer plans only).
    row: Vec<(Option<usize>, Option<usize>)>,
}

impl<'a, S: Real> ClosureFlux<'a, S> {
    pub fn new(
        name: impl Into<String>,
        grid: &'a SpaceTimeGrid<S>,
        model: &'a dyn PhysicalModel<S>,
        u0: &'a InitialData<S>,
        source: Arc<dyn NumericalSource<S> + 'a>,
        opts: SpacetimeOptions<S>,
    ) -> Result<Self> {
        if u0.m() != model.m() || source.m() != model.m() {
            return Err(Error::Incompatible(format!(
                "model has m = {}, initial data {}, source {}",
                model.m(),
                u0.m(),
                source.m()
            )));
        }
        if !(opts.alpha >= S::zero()) || !opts.alpha.is_finite() {
            return invalid(format!("viscosity alpha must be finite and >= 0, got {}", opts.alpha));
        }
        check_layered(grid)?;
        let n = grid.n_cells();
        let measure = |ids: &[usize]| crate::scalar::csum(ids.iter().map(|&f| grid.faces[f].measure));
        let s_below: Vec<S> = (0..n).map(|c| measure(&grid.cell_faces[c].below)).collect();
        let s_above: Vec<S> = (0..n).map(|c| measure(&grid.cell_faces[c].above)).collect();
        let top_extent = (0..n)
            .map(|c| {
                grid.cell_faces[c].above.iter().fold((S::infinity(), S::neg_infinity()), |(lo, hi), &f| {
                    let (a, b) = grid.faces[f].x_range();
                    (lo.min(a), hi.max(b))
                })
            })
            .collect();
        let simple = grid
            .faces
            .iter()
            .map(|f| match (f.kind, f.left, f.right) {
                (FaceKind::Interior, Some(l), Some(r)) if f.is_time_face() => {
                    grid.cell_faces[l].above.len() == 1 && grid.cell_faces[r].below.len() == 1
                }
                _ => false,
            })
            .collect::<Vec<bool>>();
        let mut row = vec![(None, None); n];
        if opts.reconstruction == Reconstruction::Minmod {
            if grid.plan.is_none() {
                return Err(Error::Incompatible(
                    "minmod reconstruction needs a grid built from rectangular layers".into(),
                ));
            }
            for ids in &grid.layers {
                for (i, &c) in ids.iter().enumerate() {
                    row[c] = (i.checked_sub(1).map(|j| ids[j]), ids.get(i + 1).copied());
                }
            }
        }
        let tol = S::lit(1e-12) * (grid.domain.width() + grid.domain.t_end);
        let on_side = |p: Point<S>, q: Point<S>, x: S| (p.x - x).abs() <= tol && (q.x - x).abs() <= tol;
        let lateral = grid
            .cells
            .iter()
            .map(|c| {
                if !c.lateral {
                    return Vec::new();
                }
                let k = c.vertices.len();
                (0..k)
                    .filter_map(|i| {
                        let (a, b) = (c.vertices[i], c.vertices[(i + 1) % k]);
                        let d = grid.domain;
                        if on_side(a, b, d.x_lo) || on_side(a, b, d.x_hi) {
                            let e = b.sub(a);
                            let len = e.norm();
                            Some(LateralEdge { a, b, n: Point::new(e.x / len, -e.t / len) })
                        } else {
                            None
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            name: name.into(),
            grid,
            model,
            u0,
            source,
            alpha: opts.alpha,
            recon: opts.reconstruction,
            rule: SegmentRule::new(opts.quadrature),
            m: model.m(),
            s_below,
            s_above,
            top_extent,
            lateral,
            simple,
            row,
        })
    }

    fn side_flux(&self, face: usize, u: &GridFunction<S>, out: &mut [S]) {
        let f = &self.grid.faces[face];
        let (l, r) = (f.left.expect("interior"), f.right.expect("interior"));
        let (ul, ur) = (u.get(l), u.get(r));
        let mut ir = vec![S::zero(); self.m];
        exact_face_integral(self.model, f.a, f.b, f.normal, ul, &self.rule, out);
        exact_face_integral(self.model, f.a, f.b, f.normal, ur, &self.rule, &mut ir);
        let visc = self.alpha * f.measure * S::half();
        for k in 0..self.m {
            out[k] = (out[k] + ir[k]) * S::half() + visc * (ul[k] - ur[k]);
        }
    }

    /// Provisional top state `ũ_B`.
    pub fn provisional(&self, b: usize, u: &GridFunction<S>, out: &mut [S]) {
        let m = self.m;
        let mut acc = vec![S::zero(); m];
        self.source.evaluate(b, u, &mut acc);
        let mut e = vec![S::zero(); m];
        for &f in &self.grid.cell_faces[b].sides {
            self.outgoing(f, b, self.grid, u, &mut e);
            for k in 0..m {
                acc[k] -= e[k];
            }
        }
        self.lateral(b, u, &mut e);
        let ub = u.get(b);
        let st = self.s_above[b];
        let growth = self.s_below[b] - st;
        for k in 0..m {
            acc[k] = acc[k] - e[k] + growth * ub[k];
            out[k] = ub[k] + acc[k] / st;
        }
    }

    /// Mean of the reconstruction of `B` over `[p, q]`.
    fn face_mean(&self, b: usize, p: S, q: S, u: &GridFunction<S>, out: &mut [S]) {
        self.provisional(b, u, out);
        if self.recon == Reconstruction::Constant {
            return;
        }
        let m = self.m;
        let mid = |c: usize| {
            let (lo, hi) = self.top_extent[c];
            (lo + hi) * S::half()
        };
        let (left, right) = self.row[b];
        let (Some(l), Some(r)) = (left, right) else { return };
        let (mut vl, mut vr) = (vec![S::zero(); m], vec![S::zero(); m]);
        self.provisional(l, u, &mut vl);
        self.provisional(r, u, &mut vr);
        let (xl, xc, xr) = (mid(l), mid(b), mid(r));
        let at = (p + q) * S::half() - xc;
        for k in 0..m {
            let s = minmod((out[k] - vl[k]) / (xc - xl), (vr[k] - out[k]) / (xr - xc));
            out[k] += s * at;
        }
    }

    /// Value of `A` implied by the faces below it.
    fn closed_value(&self, a: usize, u: &GridFunction<S>, out: &mut [S]) {
        let g = self.grid;
        let below = &g.cell_faces[a].below;
        if below.len() == 1 && self.simple[below[0]] {
            let b = g.faces[below[0]].left.expect("interior time face");
            self.provisional(b, u, out);
            return;
        }
        let m = self.m;
        let mut v = vec![S::zero(); m];
        let mut base = vec![S::zero(); m];
        let total = self.s_below[a];
        for (i, &f) in below.iter().enumerate() {
            let face = &g.faces[f];
            let b = face.left.expect("interior time face");
            let (p, q) = face.x_range();
            self.face_mean(b, p, q, u, &mut v);
            if i == 0 {
                base.copy_from_slice(&v);
                out.copy_from_slice(&v);
            } else {
                let w = face.measure / total;
                for k in 0..m {
                    out[k] += w * (v[k] - base[k]);
                }
            }
        }
    }

    /// Monotonicity check for every cell that closes a balance: `ũ_B` must be
    /// nondecreasing in `u_B` and in every side neighbour, for any wave speed
    /// in the model's range.
    fn cfl_report(&self) -> CflReport {
        let g = self.grid;
        let (smin, smax) = self.model.wave_speed_range(&g.domain);
        let slack = S::one() + S::lit(1e-12);
        let mut per_layer = vec![0usize; g.n_layers()];
        for c in 0..g.n_cells() {
            let topo = &g.cell_faces[c];
            if topo.above.is_empty() {
                continue;
            }
            let mut ok = true;
            let mut diag = S::zero();
            let mut nx = S::zero();
            for &f in &topo.sides {
                let face = &g.faces[f];
                let n = face.normal_from(c);
                let speed = (n.t + smin * n.x).abs().max((n.t + smax * n.x).abs());
                if self.alpha * slack < speed {
                    ok = false;
                }
                diag += face.measure * (self.alpha + n.t) * S::half();
                nx += face.measure * n.x * S::half();
            }
            for e in &self.lateral[c] {
                nx += e.a.dist(e.b) * e.n.x;
            }
            let worst = (smin * nx).max(smax * nx);
            if diag + worst > self.s_below[c] * slack {
                ok = false;
            }
            if !ok {
                per_layer[g.cells[c].layer] += 1;
            }
        }
        CflReport { layers: per_layer.into_iter().enumerate().filter(|l| l.1 > 0).collect() }
    }
}

impl<S: Real> NumericalFlux<S> for ClosureFlux<'_, S> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn m(&self) -> usize {
        self.m
    }

    fn evaluate(&self, face: usize, u: &GridFunction<S>, out: &mut [S]) {
        let f = &self.grid.faces[face];
        if f.kind == FaceKind::Initial {
            initial_face_integral(self.u0, f, out);
        } else if !f.is_time_face() {
            self.side_flux(face, u, out);
        } else if self.simple[face] {
            let ua = u.get(f.right.expect("interior"));
            for k in 0..self.m {
                out[k] = f.measure * ua[k];
            }
        } else {
            let (p, q) = f.x_range();
            self.face_mean(f.left.expect("interior"), p, q, u, out);
            out.iter_mut().for_each(|v| *v *= f.measure);
        }
    }

    fn stencil(&self, face: usize) -> Vec<usize> {
        let g = self.grid;
        let f = &g.faces[face];
        let mut s = Vec::new();
        if f.kind == FaceKind::Initial || (f.is_time_face() && self.simple[face]) {
            s.push(f.right.expect("cell above"));
        } else if !f.is_time_face() {
            s.extend(f.left);
            s.extend(f.right);
        } else {
            let b = f.left.expect("interior");
            let mut closing = vec![b];
            if self.recon == Reconstruction::Minmod {
                let (l, r) = self.row[b];
                closing.extend(l);
                closing.extend(r);
            }
            for c in closing {
                s.push(c);
                s.extend(self.source.stencil(c));
                for &sf in &g.cell_faces[c].sides {
                    s.extend(g.faces[sf].other(c));
                }
            }
        }
        s.sort_unstable();
        s.dedup();
        s
    }

    fn lateral(&self, cell: usize, u: &GridFunction<S>, out: &mut [S]) {
        out.iter_mut().for_each(|v| *v = S::zero());
        let edges = &self.lateral[cell];
        if edges.is_empty() {
            return;
        }
        let mut e = vec![S::zero(); self.m];
        for edge in edges {
            exact_face_integral(self.model, edge.a, edge.b, edge.n, u.get(cell), &self.rule, &mut e);
            for k in 0..self.m {
                out[k] += e[k];
            }
        }
    }
}

impl<S: Real> LayerUpdate<S> for ClosureFlux<'_, S> {
    fn fill_layer(&self, layer: usize, u: &mut GridFunction<S>) -> Result<()> {
        let ids = &self.grid.layers[layer];
        let m = self.m;
        let compute = |&a: &usize| {
            let mut v = vec![S::zero(); m];
            self.closed_value(a, u, &mut v);
            v
        };
        let values: Vec<Vec<S>> =
            if ids.len() >= PAR_THRESHOLD { ids.par_iter().map(compute).collect() } else { ids.iter().map(compute).collect() };
        for (&a, v) in ids.iter().zip(values) {
            u.set(a, &v);
        }
        Ok(())
    }
}

/// Checks that marching layer by layer can close every balance.
fn check_layered<S: Real>(grid: &SpaceTimeGrid<S>) -> Result<()> {
    let not_layered = |msg: String| Err(Error::Incompatible(format!("grid is not layered: {msg}")));
    for c in &grid.cells {
        let topo = &grid.cell_faces[c.id];
        let initial = topo.below.iter().filter(|&&f| grid.faces[f].kind == FaceKind::Initial).count();
        if topo.below.is_empty() {
            return not_layered(format!("cell {} has no face below it", c.id));
        }
        if initial > 0 && (initial != topo.below.len() || c.layer != 0) {
            return not_layered(format!("cell {} mixes initial and interior faces below, or is above layer 0", c.id));
        }
        if initial == 0 && c.layer == 0 {
            return not_layered(format!("layer-0 cell {} does not start at t = 0", c.id));
        }
        if topo.above.is_empty() && !c.top {
            return not_layered(format!("cell {} has no face above and is not at t = T", c.id));
        }
        for &f in &topo.below {
            let Some(b) = grid.faces[f].left else { continue };
            if grid.cells[b].layer >= c.layer {
                return not_layered(format!("cell {b} below cell {} is not in an earlier layer", c.id));
            }
            for &sf in &grid.cell_faces[b].sides {
                if let Some(nb) = grid.faces[sf].other(b) {
                    if grid.cells[nb].layer >= c.layer {
                        return not_layered(format!(
                            "closing cell {} needs cell {nb}, which is not in a layer before {}",
                            c.id, c.layer
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

fn default_source<'a, S: Real>(
    grid: &'a SpaceTimeGrid<S>,
    model: &'a dyn PhysicalModel<S>,
) -> Arc<dyn NumericalSource<S> + 'a> {
    if model.has_source() {
        Arc::new(ModelSource::new(grid, model))
    } else {
        Arc::new(ZeroSource { m: model.m() })
    }
}

/// Lax-Friedrichs on a uniform grid with `dt = lambda h`.
pub fn lf_scheme<'a, S: Real>(
    model: &'a dyn PhysicalModel<S>,
    grid: &'a SpaceTimeGrid<S>,
    u0: &'a InitialData<S>,
    lambda: S,
) -> Result<NumericalScheme<'a, S>> {
    let GridFamily::Uniform { h, lambda: lg, .. } = grid.family else {
        return Err(Error::Incompatible("Lax-Friedrichs needs a uniform grid".into()));
    };
    if (lg - lambda).abs() > S::lit(1e-9) * lambda {
        return Err(Error::Incompatible(format!("scheme lambda {lambda} does not match grid lambda {lg}")));
    }
    let speed = model.wave_speed_bound(&grid.domain);
    if lg * speed > S::one() + S::lit(1e-12) {
        return invalid(format!("CFL violated: lambda max|f'| = {} > 1", lg * speed));
    }
    let source = default_source(grid, model);
    let flux = Arc::new(ClosureFlux::new(
        "lax-friedrichs",
        grid,
        model,
        u0,
        source.clone(),
        SpacetimeOptions::new(S::one() / lg),
    )?);
    let cfl = flux.cfl_report();
    Ok(NumericalScheme {
        name: "lax-friedrichs".into(),
        grid,
        model,
        u0,
        flux: flux.clone(),
        source,
        cfl_bound: if speed > S::zero() { S::one() / speed } else { S::infinity() },
        cfl,
        reach: h,
        update: flux,
    })
}

/// Lax-Friedrichs type scheme on any layered grid (moving vertices, local
/// time steps, remap layers, staggered layers).
pub fn spacetime_lf_scheme<'a, S: Real>(
    model: &'a dyn PhysicalModel<S>,
    grid: &'a SpaceTimeGrid<S>,
    u0: &'a InitialData<S>,
    opts: SpacetimeOptions<S>,
) -> Result<NumericalScheme<'a, S>> {
    let source = default_source(grid, model);
    let flux = Arc::new(ClosureFlux::new("spacetime-lf", grid, model, u0, source.clone(), opts)?);
    let cfl = flux.cfl_report();
    let speed = model.wave_speed_bound(&grid.domain);
    let reach = grid.cells.iter().map(|c| c.bbox.3 - c.bbox.2).fold(S::zero(), S::max);
    Ok(NumericalScheme {
        name: "spacetime-lf".into(),
        grid,
        model,
        u0,
        flux: flux.clone(),
        source,
        cfl_bound: if speed > S::zero() { S::one() / speed } else { S::infinity() },
        cfl,
        reach,
        update: flux,
    })
}
