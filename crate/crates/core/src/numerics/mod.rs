//! Numerical fluxes, sources and the built-in schemes.
//!
//! A flux assigns to every face `F = C -> N` a value `E_F(u)`; the scheme's
//! update rule marches layer by layer so that every closed cell balance
//! `Σ_N E_{C->N}(u) = G_C(u)` holds up to rounding.

mod closure;
mod entropy;
mod properties;
mod remap;
mod source;
mod staggered;

use std::sync::Arc;

pub use closure::{lf_scheme, spacetime_lf_scheme, ClosureFlux, SpacetimeOptions};
pub use entropy::{kruzkov_entropy_fluxes, KruzkovFlux};
pub use properties::{verify_flux_properties, BiasedFlux, PropertyOptions, PropertyReport};
pub use remap::{remap_operator, Reconstruction, RemapFace, RemapResult};
pub use source::{selfsimilar_source, ModelSource, SelfsimilarSource, ZeroSource};
pub use staggered::{staggered_lf_scheme, StaggeredFlux};

use crate::error::Result;
use crate::geometry::Point;
use crate::grid::{Face, FaceKind, GridFunction, SpaceTimeGrid};
use crate::initial::InitialData;
use crate::model::{EntropyPair, PhysicalModel};
use crate::quadrature::{FaceQuadrature, SegmentRule};
use crate::scalar::Real;

pub trait NumericalFlux<S: Real>: Send + Sync {
    fn name(&self) -> String;

    /// Components per face value.
    fn m(&self) -> usize;

    /// `E_{left -> right}`; on initial faces `E_{∂ -> right}`.
    fn evaluate(&self, face: usize, u: &GridFunction<S>, out: &mut [S]);

    /// `E_{from -> other}` for `from` on either side of `face`.
    fn outgoing(&self, face: usize, from: usize, grid: &SpaceTimeGrid<S>, u: &GridFunction<S>, out: &mut [S]) {
        self.evaluate(face, u, out);
        if grid.faces[face].left != Some(from) {
            out.iter_mut().for_each(|v| *v = -*v);
        }
    }

    /// Cells whose values may influence `E_F`.
    fn stencil(&self, face: usize) -> Vec<usize>;

    /// Outgoing flux through the lateral slab edges of `cell` (ghost closure).
    fn lateral(&self, cell: usize, u: &GridFunction<S>, out: &mut [S]) {
        let _ = (cell, u);
        out.iter_mut().for_each(|v| *v = S::zero());
    }
}

pub trait NumericalSource<S: Real>: Send + Sync {
    fn name(&self) -> String;
    fn m(&self) -> usize;
    /// `G_C(u)`.
    fn evaluate(&self, cell: usize, u: &GridFunction<S>, out: &mut [S]);
    fn stencil(&self, cell: usize) -> Vec<usize>;
    fn is_zero(&self) -> bool {
        false
    }
}

/// Fills one layer given every earlier layer.
pub trait LayerUpdate<S: Real>: Send + Sync {
    fn fill_layer(&self, layer: usize, u: &mut GridFunction<S>) -> Result<()>;
}

/// Per-layer record of cells whose monotonicity condition failed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CflReport {
    /// `(layer, number of offending cells)`, ascending layer.
    pub layers: Vec<(usize, usize)>,
}

impl CflReport {
    pub fn total(&self) -> usize {
        self.layers.iter().map(|l| l.1).sum()
    }
}

/// A flux, a source and the explicit rule that satisfies their balance.
pub struct NumericalScheme<'a, S: Real> {
    pub name: String,
    pub grid: &'a SpaceTimeGrid<S>,
    pub model: &'a dyn PhysicalModel<S>,
    pub u0: &'a InitialData<S>,
    pub flux: Arc<dyn NumericalFlux<S> + 'a>,
    pub source: Arc<dyn NumericalSource<S> + 'a>,
    /// Largest admissible `dt / dx` for this scheme and model.
    pub cfl_bound: S,
    pub cfl: CflReport,
    /// How far in `x` one layer step can carry information.
    pub reach: S,
    pub(crate) update: Arc<dyn LayerUpdate<S> + 'a>,
}

impl<'a, S: Real> NumericalScheme<'a, S> {
    pub fn fill_layer(&self, layer: usize, u: &mut GridFunction<S>) -> Result<()> {
        self.update.fill_layer(layer, u)
    }

    /// Cells whose balance the update closes: every cell with a face above it.
    pub fn closes(&self, cell: usize) -> bool {
        !self.grid.cell_faces[cell].above.is_empty()
    }
}

/// `∫_F (w n_t + f(w, y) n_x) dS` along the segment `a -> b` with unit normal `n`.
#[allow(clippy::too_many_arguments)]
pub fn exact_face_integral<S: Real>(
    model: &dyn PhysicalModel<S>,
    a: Point<S>,
    b: Point<S>,
    n: Point<S>,
    w: &[S],
    rule: &SegmentRule<S>,
    out: &mut [S],
) {
    let m = w.len();
    let mut f = vec![S::zero(); m];
    if !model.position_dependent() {
        let len = a.dist(b);
        model.flux(w, a.lerp(b, S::half()), &mut f);
        for k in 0..m {
            out[k] = len * (w[k] * n.t + f[k] * n.x);
        }
        return;
    }
    let mut acc = vec![Vec::new(); m];
    rule.for_each_point(a, b, |y, wt| {
        model.flux(w, y, &mut f);
        for k in 0..m {
            acc[k].push(wt * (w[k] * n.t + f[k] * n.x));
        }
    });
    for k in 0..m {
        out[k] = crate::scalar::csum(acc[k].drain(..));
    }
}

/// `∫_F (eta0(w) n_t + eta1(w) n_x) dS`.
pub fn exact_entropy_face_integral<S: Real>(
    pair: &dyn EntropyPair<S>,
    a: Point<S>,
    b: Point<S>,
    n: Point<S>,
    w: &[S],
    rule: &SegmentRule<S>,
) -> S {
    rule.integrate(a, b, |y| pair.eta0(w, y) * n.t + pair.eta1(w, y) * n.x)
}

/// Face version of [`exact_face_integral`].
pub fn face_integral<S: Real>(
    model: &dyn PhysicalModel<S>,
    face: &Face<S>,
    w: &[S],
    rule: &SegmentRule<S>,
    out: &mut [S],
) {
    exact_face_integral(model, face.a, face.b, face.normal, w, rule, out)
}

/// `∫_F u0 dx` over an initial face.
pub fn initial_face_integral<S: Real>(u0: &InitialData<S>, face: &Face<S>, out: &mut [S]) {
    let (lo, hi) = face.x_range();
    u0.integral(lo, hi, out);
}

/// Exact averages of `u0` over the initial faces of each layer-0 cell;
/// every other cell is left undefined.
///
/// For data that is constant on a cell the average equals that constant bit
/// for bit.
pub fn initial_cell_averages<S: Real>(grid: &SpaceTimeGrid<S>, u0: &InitialData<S>) -> GridFunction<S> {
    let m = u0.m();
    let mut u = GridFunction::undefined(grid.n_cells(), m);
    let mut avg = vec![S::zero(); m];
    for c in 0..grid.n_cells() {
        let init: Vec<&Face<S>> =
            grid.cell_faces[c].below.iter().map(|&f| &grid.faces[f]).filter(|f| f.kind == FaceKind::Initial).collect();
        if init.is_empty() {
            continue;
        }
        // base + Σ w_i (avg_i - base) keeps constants exact
        let total = crate::scalar::csum(init.iter().map(|f| f.measure));
        let mut base = vec![S::zero(); m];
        let mut acc = vec![S::zero(); m];
        for (i, f) in init.iter().enumerate() {
            let (lo, hi) = f.x_range();
            for k in 0..m {
                avg[k] = u0.component(k).average(lo, hi);
            }
            if i == 0 {
                base.copy_from_slice(&avg);
                acc.copy_from_slice(&avg);
            } else {
                let w = f.measure / total;
                for k in 0..m {
                    acc[k] += w * (avg[k] - base[k]);
                }
            }
        }
        u.set(c, &acc);
    }
    u
}

pub(crate) fn default_rule<S: Real>() -> SegmentRule<S> {
    SegmentRule::new(FaceQuadrature::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_uniform_grid;
    use crate::initial::Piecewise;
    use crate::model::{Advection, Burgers};

    #[test]
    fn face_integral_examples() {
        let rule = default_rule::<f64>();
        let b = Burgers::new(-2.0, 2.0).unwrap();
        let mut out = [0.0];
        // time face of length h, identity time flux
        exact_face_integral(&b, Point::new(0.0, 0.0), Point::new(0.0, 0.1), Point::new(1.0, 0.0), &[0.7], &rule, &mut out);
        assert!((out[0] - 0.07).abs() < 1e-14);
        // space face of length lambda h
        exact_face_integral(&b, Point::new(0.0, 0.0), Point::new(0.05, 0.0), Point::new(0.0, 1.0), &[1.0], &rule, &mut out);
        assert!((out[0] - 0.025).abs() < 1e-14);
        // slanted face moving with the advection speed carries nothing
        let c = 0.75f64;
        let a = Advection::new(c, -1.0, 1.0).unwrap();
        let s = (1.0 + c * c).sqrt();
        exact_face_integral(&a, Point::new(0.0, 0.0), Point::new(0.1, 0.1 * c), Point::new(-c / s, 1.0 / s), &[0.3], &rule, &mut out);
        assert!(out[0].abs() < 1e-14);
    }

    #[test]
    fn initial_averages_are_exact() {
        let g = build_uniform_grid(0.3, 0.5, 0.3, -0.3, 1.2).unwrap();
        let u0 = InitialData::scalar(Piecewise::indicator(0.0, 1.0, 1.0).unwrap());
        let u = initial_cell_averages(&g, &u0);
        let mass: f64 = g.layers[0].iter().map(|&c| 0.3 * u.scalar(c)).sum();
        assert!((mass - 1.0).abs() < 1e-14);
        let k = InitialData::scalar(Piecewise::constant(0.1));
        let u = initial_cell_averages(&g, &k);
        assert!(g.layers[0].iter().all(|&c| u.scalar(c) == 0.1));
        assert!(g.layers[1].iter().all(|&c| !u.is_defined(c)));
    }
}
