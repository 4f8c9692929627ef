//! Approximation of a uniform cube lattice of side `H` by clusters of cells.

use std::collections::BTreeMap;

use super::{FaceKind, SpaceTimeGrid};
use crate::error::{invalid, Result};
use crate::geometry::{self, Point};
use crate::scalar::{csum, Real};

/// Cube index `(k_t, k_x)`, `k_t >= 0`. Cube `k` is `H [k_t, k_t+1] x H [k_x, k_x+1]`.
pub type CubeIndex = (usize, i64);

/// A face seen from one side; `reversed` means oriented right -> left.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct OrientedFace {
    pub face: usize,
    pub reversed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Minus,
    Plus,
}

#[derive(Clone, Debug)]
pub struct CubeApproximation<S> {
    pub cube_size: S,
    /// `h_max / H`.
    pub rho: S,
    pub clusters: BTreeMap<CubeIndex, Vec<usize>>,
    pub cell_cube: Vec<CubeIndex>,
    /// All faces leaving each cluster (including `C -> ∂`).
    pub boundary_faces: BTreeMap<CubeIndex, Vec<OrientedFace>>,
    /// Faces into the neighbouring cluster `k ± e_i`; direction 0 is time.
    pub side_faces: BTreeMap<(CubeIndex, usize, Sign), Vec<OrientedFace>>,
    /// Boundary faces that are on no side.
    pub corner_faces: BTreeMap<CubeIndex, Vec<OrientedFace>>,
}

fn axis_index<S: Real>(v: S, size: S) -> i64 {
    let q = v / size;
    let f = q.floor();
    // a coordinate exactly on a cube boundary belongs to the lower cube
    let k = if f == q { f - S::one() } else { f };
    k.to_i64().expect("finite cube index")
}

/// Assigns every cell to the cube containing its centroid (lower cube on ties).
/// Cells whose centroid lies outside the cell go to the smallest cube they touch.
pub fn cube_clustering<S: Real>(grid: &SpaceTimeGrid<S>, cube_size: S) -> Result<CubeApproximation<S>> {
    let h_max = grid.metrics().h_max;
    if !(cube_size > S::two() * h_max) {
        return invalid(format!("cube size {cube_size} must exceed 2 h_max = {}", S::two() * h_max));
    }
    let mut cell_cube = Vec::with_capacity(grid.n_cells());
    for c in &grid.cells {
        let k = if geometry::contains(&c.vertices, c.centroid) {
            let kt = axis_index(c.centroid.t, cube_size).max(0) as usize;
            (kt, axis_index(c.centroid.x, cube_size))
        } else {
            smallest_touching_cube(&c.vertices, cube_size)
        };
        cell_cube.push(k);
    }
    let mut clusters: BTreeMap<CubeIndex, Vec<usize>> = BTreeMap::new();
    for (id, k) in cell_cube.iter().enumerate() {
        clusters.entry(*k).or_default().push(id);
    }

    let mut boundary_faces: BTreeMap<CubeIndex, Vec<OrientedFace>> = BTreeMap::new();
    let mut side_faces: BTreeMap<(CubeIndex, usize, Sign), Vec<OrientedFace>> = BTreeMap::new();
    let mut corner_faces: BTreeMap<CubeIndex, Vec<OrientedFace>> = BTreeMap::new();
    let mut classify = |k: CubeIndex, other: Option<CubeIndex>, of: OrientedFace| {
        boundary_faces.entry(k).or_default().push(of);
        let side = match other {
            None if k.0 == 0 => Some((0, Sign::Minus)),
            None => None,
            Some(n) => {
                let dt = n.0 as i64 - k.0 as i64;
                let dx = n.1 - k.1;
                match (dt, dx) {
                    (1, 0) => Some((0, Sign::Plus)),
                    (-1, 0) => Some((0, Sign::Minus)),
                    (0, 1) => Some((1, Sign::Plus)),
                    (0, -1) => Some((1, Sign::Minus)),
                    _ => None,
                }
            }
        };
        match side {
            Some((i, s)) => side_faces.entry((k, i, s)).or_default().push(of),
            None => corner_faces.entry(k).or_default().push(of),
        }
    };
    for f in &grid.faces {
        match (f.kind, f.left, f.right) {
            (FaceKind::Initial, _, Some(c)) | (FaceKind::Initial, Some(c), None) => {
                let reversed = f.right == Some(c);
                classify(cell_cube[c], None, OrientedFace { face: f.id, reversed });
            }
            (FaceKind::Interior, Some(l), Some(r)) => {
                let (kl, kr) = (cell_cube[l], cell_cube[r]);
                if kl != kr {
                    classify(kl, Some(kr), OrientedFace { face: f.id, reversed: false });
                    classify(kr, Some(kl), OrientedFace { face: f.id, reversed: true });
                }
            }
            _ => {}
        }
    }
    Ok(CubeApproximation {
        cube_size,
        rho: h_max / cube_size,
        clusters,
        cell_cube,
        boundary_faces,
        side_faces,
        corner_faces,
    })
}

fn smallest_touching_cube<S: Real>(poly: &[Point<S>], size: S) -> CubeIndex {
    let (t0, t1, x0, x1) = geometry::bbox(poly);
    let kt0 = (t0 / size).floor().to_i64().unwrap_or(0).max(0);
    let kt1 = (t1 / size).floor().to_i64().unwrap_or(0);
    let kx0 = (x0 / size).floor().to_i64().unwrap_or(0);
    let kx1 = (x1 / size).floor().to_i64().unwrap_or(0);
    for kt in kt0..=kt1 {
        for kx in kx0..=kx1 {
            let (a, b) = (size * S::lit(kt as f64), size * S::lit(kx as f64));
            if geometry::intersects_box(poly, a, a + size, b, b + size) {
                return (kt as usize, kx);
            }
        }
    }
    (kt0 as usize, kx0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusteringDiagnostics<S> {
    /// Corner-face measure over total cluster-boundary measure.
    pub corner_fraction: S,
    /// Largest `|Σ_F S(F) n_F - H e_i| / H` over sides of interior cubes.
    pub max_normal_defect: S,
    pub interior_cubes: usize,
}

/// Geometric quality of a cube approximation.
pub fn clustering_diagnostics<S: Real>(grid: &SpaceTimeGrid<S>, cl: &CubeApproximation<S>) -> ClusteringDiagnostics<S> {
    let measure = |list: &[OrientedFace]| csum(list.iter().map(|of| grid.faces[of.face].measure));
    let corner = csum(cl.corner_faces.values().map(|l| measure(l)));
    let total = csum(cl.boundary_faces.values().map(|l| measure(l)));
    let corner_fraction = if total > S::zero() { corner / total } else { S::zero() };

    let h = cl.cube_size;
    let d = grid.domain;
    let lo_x = |k: i64| h * S::lit(k as f64);
    let interior = |k: &CubeIndex| {
        k.0 >= 1
            && h * S::from_usize_(k.0 + 2) <= d.t_end
            && lo_x(k.1 - 1) >= d.x_lo
            && lo_x(k.1 + 2) <= d.x_hi
    };
    let mut worst = S::zero();
    let mut count = 0;
    for k in cl.clusters.keys().filter(|k| interior(k)) {
        count += 1;
        for i in 0..2 {
            for sign in [Sign::Minus, Sign::Plus] {
                let mut acc_t = Vec::new();
                let mut acc_x = Vec::new();
                if let Some(list) = cl.side_faces.get(&(*k, i, sign)) {
                    for of in list {
                        let f = &grid.faces[of.face];
                        let n = if of.reversed { f.normal.scale(-S::one()) } else { f.normal };
                        acc_t.push(n.t * f.measure);
                        acc_x.push(n.x * f.measure);
                    }
                }
                let s = if sign == Sign::Plus { S::one() } else { -S::one() };
                let target = if i == 0 { Point::new(s * h, S::zero()) } else { Point::new(S::zero(), s * h) };
                let defect = Point::new(csum(acc_t), csum(acc_x)).sub(target).norm() / h;
                worst = worst.max(defect);
            }
        }
    }
    ClusteringDiagnostics { corner_fraction, max_normal_defect: worst, interior_cubes: count }
}
