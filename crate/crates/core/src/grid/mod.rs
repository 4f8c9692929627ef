//! Space-time grids on a slab `[0, T] x [x_lo, x_hi]`.
//!
//! Cells are simple polygons in the `(t, x)` plane listed counterclockwise.
//! Faces are derived by matching polygon edges exactly: two cells share a
//! face iff one lists the edge `a -> b` and the other `b -> a`. Generators
//! therefore insert the breakpoints of neighbouring layers (and hanging
//! vertices) as collinear polygon vertices, so every face has exactly one
//! cell on each side.

mod cluster;
mod function;
mod generators;
pub mod io;

use std::collections::HashMap;

pub use cluster::{clustering_diagnostics, cube_clustering, ClusteringDiagnostics, CubeApproximation, CubeIndex};
pub use function::GridFunction;
pub use generators::{
    build_local_timestep_grid, build_moving_vertex_grid, build_perturbed_grid, build_staggered_grid,
    build_uniform_grid, insert_remap_layer, LayerPlan, RefineRegion,
};

use crate::error::{invalid, Error, Result};
use crate::geometry::{self, Point};
use crate::scalar::{csum, Real};

/// Relative tolerance used to decide that a vertex lies on the slab boundary.
const BOUNDARY_TOL: f64 = 1e-12;

/// The slab `[0, t_end] x [x_lo, x_hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain<S> {
    pub t_end: S,
    pub x_lo: S,
    pub x_hi: S,
}

impl<S: Real> Domain<S> {
    pub fn new(t_end: S, x_lo: S, x_hi: S) -> Result<Self> {
        if !(t_end > S::zero()) || !(x_hi > x_lo) || !t_end.is_finite() || !x_lo.is_finite() || !x_hi.is_finite() {
            return invalid(format!("degenerate domain T={t_end}, x=[{x_lo}, {x_hi}]"));
        }
        Ok(Self { t_end, x_lo, x_hi })
    }

    pub fn width(&self) -> S {
        self.x_hi - self.x_lo
    }

    pub fn area(&self) -> S {
        self.t_end * self.width()
    }

    fn tol(&self) -> S {
        S::lit(BOUNDARY_TOL) * (self.t_end.abs() + self.x_lo.abs() + self.x_hi.abs())
    }
}

/// Which generator produced a grid; schemes use it to check compatibility.
#[derive(Clone, Debug, PartialEq)]
pub enum GridFamily<S> {
    Uniform { h: S, lambda: S, nx: usize, nt: usize },
    Staggered { h: S, dt: S, nx: usize, nt: usize },
    LocalTimestep { h: S, lambda: S, region: (S, S), factor: usize },
    MovingVertex { h: S, lambda: S },
    Perturbed { h: S, amplitude: S },
    Remapped { base: Box<GridFamily<S>>, t_remap: S },
    /// Loaded from a dump or assembled by hand.
    Unstructured,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FaceKind {
    Interior,
    Initial,
}

#[derive(Clone, Debug)]
pub struct Cell<S> {
    pub id: usize,
    pub vertices: Vec<Point<S>>,
    pub layer: usize,
    pub volume: S,
    pub centroid: Point<S>,
    pub diameter: S,
    pub perimeter: S,
    /// `(t_min, t_max, x_min, x_max)`.
    pub bbox: (S, S, S, S),
    /// Some edge lies on `x = x_lo` or `x = x_hi`.
    pub lateral: bool,
    /// Some edge lies on `t = T`.
    pub top: bool,
}

impl<S: Real> Cell<S> {
    /// Width of the horizontal slice at time `t`.
    pub fn width_at(&self, t: S) -> S {
        geometry::slice_width(&self.vertices, t)
    }

    /// Time span `[t_min, t_max)` contains `t`.
    pub fn alive_at(&self, t: S) -> bool {
        self.bbox.0 <= t && t < self.bbox.1
    }
}

#[derive(Clone, Debug)]
pub struct Face<S> {
    pub id: usize,
    /// Endpoints, in the counterclockwise order of `left` (or of `right` for initial faces).
    pub a: Point<S>,
    pub b: Point<S>,
    /// `None` is the initial boundary.
    pub left: Option<usize>,
    pub right: Option<usize>,
    /// Unit normal pointing from `left` into `right`.
    pub normal: Point<S>,
    pub measure: S,
    pub kind: FaceKind,
}

impl<S: Real> Face<S> {
    /// Horizontal face (constant `t`): separates earlier from later cells.
    pub fn is_time_face(&self) -> bool {
        self.a.t == self.b.t
    }

    pub fn midpoint(&self) -> Point<S> {
        self.a.lerp(self.b, S::half())
    }

    /// The cell on the other side of `cell`, `None` for the initial boundary.
    pub fn other(&self, cell: usize) -> Option<usize> {
        if self.left == Some(cell) {
            self.right
        } else {
            self.left
        }
    }

    /// Outward normal seen from `cell`.
    pub fn normal_from(&self, cell: usize) -> Point<S> {
        if self.left == Some(cell) {
            self.normal
        } else {
            self.normal.scale(-S::one())
        }
    }

    /// `(x_min, x_max)` of the segment.
    pub fn x_range(&self) -> (S, S) {
        (self.a.x.min(self.b.x), self.a.x.max(self.b.x))
    }
}

/// Faces of one cell grouped by role.
#[derive(Clone, Debug, Default)]
pub struct CellTopology {
    /// Time faces below the cell (including initial faces).
    pub below: Vec<usize>,
    /// Time faces above the cell.
    pub above: Vec<usize>,
    /// Non-horizontal faces.
    pub sides: Vec<usize>,
}

impl CellTopology {
    pub fn all(&self) -> impl Iterator<Item = usize> + '_ {
        self.below.iter().chain(&self.above).chain(&self.sides).copied()
    }
}

#[derive(Clone, Debug)]
pub struct SpaceTimeGrid<S> {
    pub cells: Vec<Cell<S>>,
    pub faces: Vec<Face<S>>,
    pub cell_faces: Vec<CellTopology>,
    /// Cell ids per marching layer.
    pub layers: Vec<Vec<usize>>,
    /// Start time of each layer.
    pub layer_times: Vec<S>,
    pub domain: Domain<S>,
    /// Declared (nominal) mesh parameter.
    pub h: S,
    pub family: GridFamily<S>,
    /// Rectangular layer description, kept for families that support remapping.
    pub plan: Option<Vec<LayerPlan<S>>>,
}

/// Measured quality of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMetrics<S> {
    pub h_max: S,
    /// `min V(C) / h_max^2` over cells away from the lateral boundary.
    pub quasi_ratio: S,
    /// `max S(dC) / h_max` over cells away from the lateral boundary.
    pub surface_ratio: S,
    pub cells_per_layer_min: usize,
    pub cells_per_layer_max: usize,
    pub cells_per_layer_mean: S,
}

impl<S: Real> SpaceTimeGrid<S> {
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn cell(&self, id: usize) -> &Cell<S> {
        &self.cells[id]
    }

    pub fn face(&self, id: usize) -> &Face<S> {
        &self.faces[id]
    }

    pub fn topology(&self, cell: usize) -> &CellTopology {
        &self.cell_faces[cell]
    }

    pub fn initial_faces(&self) -> impl Iterator<Item = &Face<S>> {
        self.faces.iter().filter(|f| f.kind == FaceKind::Initial)
    }

    /// Cells whose time span contains `t`, ascending id.
    pub fn cells_alive_at(&self, t: S) -> Vec<usize> {
        self.cells.iter().filter(|c| c.alive_at(t)).map(|c| c.id).collect()
    }

    /// Smallest layer whose start time is `>= t - tol`.
    pub fn layer_starting_at(&self, t: S) -> Option<usize> {
        let tol = self.domain.tol() * S::lit(1e3);
        self.layer_times.iter().position(|&s| (s - t).abs() <= tol)
    }

    pub fn metrics(&self) -> GridMetrics<S> {
        grid_metrics(self)
    }
}

/// Quality metrics of a grid.
///
/// Lateral closure cells (half cells of staggered layers, cells clipped by
/// the slab edge) are excluded from the ratio statistics unless every cell
/// touches the lateral boundary.
pub fn grid_metrics<S: Real>(grid: &SpaceTimeGrid<S>) -> GridMetrics<S> {
    let h_max = grid.cells.iter().map(|c| c.diameter).fold(S::zero(), S::max);
    let interior: Vec<&Cell<S>> = grid.cells.iter().filter(|c| !c.lateral).collect();
    let pool: Vec<&Cell<S>> = if interior.is_empty() { grid.cells.iter().collect() } else { interior };
    let h2 = h_max * h_max;
    let quasi_ratio = pool.iter().map(|c| c.volume / h2).fold(S::infinity(), S::min);
    let surface_ratio = pool.iter().map(|c| c.perimeter / h_max).fold(S::zero(), S::max);
    let counts: Vec<usize> = grid.layers.iter().map(Vec::len).collect();
    let mean = if counts.is_empty() {
        S::zero()
    } else {
        S::from_usize_(counts.iter().sum::<usize>()) / S::from_usize_(counts.len())
    };
    GridMetrics {
        h_max,
        quasi_ratio,
        surface_ratio,
        cells_per_layer_min: counts.iter().copied().min().unwrap_or(0),
        cells_per_layer_max: counts.iter().copied().max().unwrap_or(0),
        cells_per_layer_mean: mean,
    }
}

/// Collects cell polygons and derives faces and topology.
pub struct GridBuilder<S> {
    domain: Domain<S>,
    h: S,
    cells: Vec<(Vec<Point<S>>, usize)>,
}

impl<S: Real> GridBuilder<S> {
    pub fn new(domain: Domain<S>, h: S) -> Self {
        Self { domain, h, cells: Vec::new() }
    }

    /// Adds a counterclockwise polygon; returns its id.
    pub fn push_cell(&mut self, vertices: Vec<Point<S>>, layer: usize) -> usize {
        self.cells.push((vertices, layer));
        self.cells.len() - 1
    }

    pub fn build(self, family: GridFamily<S>) -> Result<SpaceTimeGrid<S>> {
        let domain = self.domain;
        let tol = domain.tol();
        let mut cells = Vec::with_capacity(self.cells.len());
        for (id, (vertices, layer)) in self.cells.into_iter().enumerate() {
            cells.push(make_cell(id, vertices, layer, &domain)?);
        }

        let mut faces: Vec<Face<S>> = Vec::with_capacity(cells.len() * 3);
        let mut open: HashMap<((u64, u64), (u64, u64)), (usize, Point<S>, Point<S>)> = HashMap::new();
        for c in &cells {
            let n = c.vertices.len();
            for i in 0..n {
                let (a, b) = (c.vertices[i], c.vertices[(i + 1) % n]);
                if let Some((other, oa, ob)) = open.remove(&(b.key(), a.key())) {
                    faces.push(interior_face(faces.len(), other, oa, ob, c.id));
                } else {
                    open.insert((a.key(), b.key()), (c.id, a, b));
                }
            }
        }

        // Unmatched edges: initial faces, slab boundary, or an error.
        let mut rest: Vec<(usize, Point<S>, Point<S>)> = open.into_values().collect();
        rest.sort_by(|p, q| (p.0, p.1.t, p.1.x).partial_cmp(&(q.0, q.1.t, q.1.x)).unwrap());
        for (cell, a, b) in rest {
            let on_t0 = a.t.abs() <= tol && b.t.abs() <= tol;
            let on_top = (a.t - domain.t_end).abs() <= tol && (b.t - domain.t_end).abs() <= tol;
            let on_lo = (a.x - domain.x_lo).abs() <= tol && (b.x - domain.x_lo).abs() <= tol;
            let on_hi = (a.x - domain.x_hi).abs() <= tol && (b.x - domain.x_hi).abs() <= tol;
            if on_t0 {
                let measure = a.dist(b);
                faces.push(Face {
                    id: faces.len(),
                    a,
                    b,
                    left: None,
                    right: Some(cell),
                    normal: Point::new(S::one(), S::zero()),
                    measure,
                    kind: FaceKind::Initial,
                });
            } else if on_top {
                cells[cell].top = true;
            } else if on_lo || on_hi {
                cells[cell].lateral = true;
            } else {
                return Err(Error::Construction {
                    layer: cells[cell].layer,
                    reason: format!(
                        "edge ({}, {})-({}, {}) of cell {} has no neighbour and is not on the slab boundary",
                        a.t, a.x, b.t, b.x, cell
                    ),
                });
            }
        }
        assemble(cells, faces, domain, self.h, family, None)
    }
}

pub(crate) fn make_cell<S: Real>(id: usize, vertices: Vec<Point<S>>, layer: usize, domain: &Domain<S>) -> Result<Cell<S>> {
    let tol = domain.tol();
    if vertices.len() < 3 {
        return Err(Error::Construction { layer, reason: format!("cell {id} has fewer than 3 vertices") });
    }
    if vertices.iter().any(|p| p.t < -tol || !p.t.is_finite() || !p.x.is_finite()) {
        return Err(Error::Construction { layer, reason: format!("cell {id} has a vertex outside t >= 0") });
    }
    let volume = geometry::signed_area(&vertices);
    if !(volume > S::zero()) {
        return Err(Error::Construction {
            layer,
            reason: format!("cell {id} has non-positive area {volume} (inverted or clockwise)"),
        });
    }
    if !geometry::is_simple(&vertices) {
        return Err(Error::Construction { layer, reason: format!("cell {id} is not a simple polygon") });
    }
    Ok(Cell {
        id,
        centroid: geometry::centroid(&vertices),
        diameter: geometry::diameter(&vertices),
        perimeter: geometry::perimeter(&vertices),
        bbox: geometry::bbox(&vertices),
        vertices,
        layer,
        volume,
        lateral: false,
        top: false,
    })
}

/// Face shared by `c` (edge `a -> b` in its order) and `n`.
fn interior_face<S: Real>(id: usize, c: usize, a: Point<S>, b: Point<S>, n: usize) -> Face<S> {
    let d = b.sub(a);
    let measure = d.norm();
    let out_c = Point::new(d.x / measure, -d.t / measure);
    let c_is_left = if a.t == b.t { out_c.t > S::zero() } else { out_c.x > S::zero() };
    if c_is_left {
        Face { id, a, b, left: Some(c), right: Some(n), normal: out_c, measure, kind: FaceKind::Interior }
    } else {
        Face {
            id,
            a: b,
            b: a,
            left: Some(n),
            right: Some(c),
            normal: out_c.scale(-S::one()),
            measure,
            kind: FaceKind::Interior,
        }
    }
}

/// Final consistency pass shared by the builder and the loader.
pub(crate) fn assemble<S: Real>(
    cells: Vec<Cell<S>>,
    faces: Vec<Face<S>>,
    domain: Domain<S>,
    h: S,
    family: GridFamily<S>,
    plan: Option<Vec<LayerPlan<S>>>,
) -> Result<SpaceTimeGrid<S>> {
    let mut cell_faces = vec![CellTopology::default(); cells.len()];
    for f in &faces {
        for (side, cell) in [(false, f.left), (true, f.right)] {
            let Some(c) = cell else { continue };
            if c >= cells.len() {
                return Err(Error::Internal(format!("face {} references missing cell {c}", f.id)));
            }
            let topo = &mut cell_faces[c];
            if f.is_time_face() {
                // right of a time face is the later cell
                if side {
                    topo.below.push(f.id);
                } else {
                    topo.above.push(f.id);
                }
            } else {
                topo.sides.push(f.id);
            }
        }
    }

    let n_layers = cells.iter().map(|c| c.layer + 1).max().unwrap_or(0);
    let mut layers = vec![Vec::new(); n_layers];
    for c in &cells {
        layers[c.layer].push(c.id);
    }
    let layer_times = layers
        .iter()
        .map(|ids| ids.iter().map(|&i| cells[i].bbox.0).fold(S::infinity(), S::min))
        .collect();

    let grid = SpaceTimeGrid { cells, faces, cell_faces, layers, layer_times, domain, h, family, plan };
    check_tiling(&grid)?;
    Ok(grid)
}

fn check_tiling<S: Real>(grid: &SpaceTimeGrid<S>) -> Result<()> {
    let total = csum(grid.cells.iter().map(|c| c.volume));
    let area = grid.domain.area();
    if ((total - area) / area).abs() > S::lit(1e-10) {
        return Err(Error::Construction {
            layer: 0,
            reason: format!("cells cover area {total}, slab area is {area}"),
        });
    }
    let covered = csum(grid.initial_faces().map(|f| f.measure));
    let width = grid.domain.width();
    if ((covered - width) / width).abs() > S::lit(1e-10) {
        return Err(Error::Construction {
            layer: 0,
            reason: format!("initial faces cover {covered} of {width}"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid() -> SpaceTimeGrid<f64> {
        build_uniform_grid(0.5, 0.5, 0.5, 0.0, 1.0).unwrap()
    }

    #[test]
    fn uniform_counts() {
        let g = unit_grid();
        assert_eq!(g.n_cells(), 4);
        assert_eq!(g.n_layers(), 2);
        let init: Vec<_> = g.initial_faces().collect();
        // two stored faces, i.e. four ordered initial faces (both orientations)
        assert_eq!(init.len(), 2);
        assert_eq!(2 * init.len(), 4);
        assert!(init.iter().all(|f| (f.measure - 0.5).abs() < 1e-15 && f.normal == Point::new(1.0, 0.0)));
    }

    #[test]
    fn face_duality_and_perimeters() {
        let g = build_local_timestep_grid(
            0.1,
            0.5,
            RefineRegion { x_from: 0.4, x_to: 0.6, factor: 2 },
            0.2,
            0.0,
            1.0,
        )
        .unwrap();
        for f in &g.faces {
            assert!((f.normal.norm() - 1.0f64).abs() < 1e-14);
            if let (Some(l), Some(r)) = (f.left, f.right) {
                assert_eq!(f.normal_from(r), f.normal.scale(-1.0));
                assert_eq!(f.other(l), Some(r));
                // normal points from left into right
                let into = g.cells[r].centroid.sub(f.midpoint()).dot(f.normal);
                assert!(into > 0.0);
            }
        }
        for c in &g.cells {
            let faces_len: f64 = g.cell_faces[c.id].all().map(|f| g.faces[f].measure).sum();
            let boundary: f64 = if c.lateral || c.top {
                continue;
            } else {
                c.perimeter
            };
            assert!(((faces_len - boundary) / boundary).abs() < 1e-12);
        }
    }

    #[test]
    fn builder_rejects_clockwise_cells() {
        let d = Domain::new(1.0, 0.0, 1.0).unwrap();
        let mut b = GridBuilder::new(d, 1.0);
        b.push_cell(vec![Point::new(0.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 1.0), Point::new(1.0, 0.0)], 0);
        assert!(matches!(b.build(GridFamily::Unstructured), Err(Error::Construction { .. })));
    }

    #[test]
    fn builder_rejects_gaps() {
        let d = Domain::new(1.0, 0.0, 2.0).unwrap();
        let mut b = GridBuilder::new(d, 1.0);
        b.push_cell(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)], 0);
        assert!(b.build(GridFamily::Unstructured).is_err());
    }
}
