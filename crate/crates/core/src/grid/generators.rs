//! Grid families: uniform, staggered, locally time-stepped, moving-vertex,
//! perturbed (geometry only) and remapped.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Domain, GridBuilder, GridFamily, SpaceTimeGrid};
use crate::error::{invalid, Error, Result};
use crate::geometry::Point;
use crate::scalar::Real;

/// One rectangular time layer `[t0, t1] x` a spatial partition.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerPlan<S> {
    pub t0: S,
    pub t1: S,
    /// Strictly increasing, from `x_lo` to `x_hi`.
    pub breaks: Vec<S>,
}

/// Refinement region for local time stepping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineRegion<S> {
    pub x_from: S,
    pub x_to: S,
    /// Time sub-steps per coarse step inside the region.
    pub factor: usize,
}

fn count<S: Real>(len: S, step: S, what: &str) -> Result<usize> {
    let n = (len / step).round();
    if !(n >= S::one()) || !n.is_finite() {
        return invalid(format!("{what}: {len} / {step} gives no cells"));
    }
    Ok(n.to_usize().expect("finite count"))
}

/// `n + 1` points from `lo` to `hi`, endpoints exact.
fn lattice<S: Real>(lo: S, hi: S, n: usize) -> Vec<S> {
    let w = hi - lo;
    let nf = S::from_usize_(n);
    let mut v: Vec<S> = (0..=n).map(|j| lo + w * S::from_usize_(j) / nf).collect();
    v[0] = lo;
    v[n] = hi;
    v
}

fn check_positive<S: Real>(v: S, name: &str) -> Result<()> {
    if !(v > S::zero()) || !v.is_finite() {
        return invalid(format!("{name} must be positive, got {v}"));
    }
    Ok(())
}

/// Interior points of `other` strictly between `lo` and `hi`, ascending.
fn inner<S: Real>(other: &[S], lo: S, hi: S) -> impl Iterator<Item = S> + '_ {
    other.iter().copied().filter(move |&x| x > lo && x < hi)
}

/// Builds rectangular layers; horizontal edges carry the breakpoints of the
/// neighbouring layers so partitions that differ still match face by face.
pub(crate) fn build_from_plan<S: Real>(
    domain: Domain<S>,
    h: S,
    plan: Vec<LayerPlan<S>>,
    family: GridFamily<S>,
) -> Result<SpaceTimeGrid<S>> {
    let mut b = GridBuilder::new(domain, h);
    for (k, layer) in plan.iter().enumerate() {
        let below = if k > 0 { Some(&plan[k - 1].breaks) } else { None };
        let above = plan.get(k + 1).map(|p| &p.breaks);
        for w in layer.breaks.windows(2) {
            let (xa, xb) = (w[0], w[1]);
            let mut poly = vec![Point::new(layer.t0, xa), Point::new(layer.t1, xa)];
            if let Some(up) = above {
                poly.extend(inner(up, xa, xb).map(|x| Point::new(layer.t1, x)));
            }
            poly.push(Point::new(layer.t1, xb));
            poly.push(Point::new(layer.t0, xb));
            if let Some(down) = below {
                let pts: Vec<S> = inner(down, xa, xb).collect();
                poly.extend(pts.into_iter().rev().map(|x| Point::new(layer.t0, x)));
            }
            b.push_cell(poly, k);
        }
    }
    let mut grid = b.build(family)?;
    grid.plan = Some(plan);
    Ok(grid)
}

/// Rectangular cells `h x lambda h`; layer `n` spans `[n lambda h, (n+1) lambda h]`.
///
/// Cell counts are rounded and the widths re-derived so the slab is tiled exactly.
pub fn build_uniform_grid<S: Real>(h: S, lambda: S, t_end: S, x_lo: S, x_hi: S) -> Result<SpaceTimeGrid<S>> {
    check_positive(h, "h")?;
    check_positive(lambda, "lambda")?;
    if lambda > S::one() {
        return invalid(format!("lambda must be <= 1, got {lambda}"));
    }
    let domain = Domain::new(t_end, x_lo, x_hi)?;
    let nx = count(domain.width(), h, "space")?;
    let nt = count(t_end, lambda * h, "time")?;
    let xs = lattice(x_lo, x_hi, nx);
    let ts = lattice(S::zero(), t_end, nt);
    let plan = (0..nt).map(|n| LayerPlan { t0: ts[n], t1: ts[n + 1], breaks: xs.clone() }).collect();
    let h_act = domain.width() / S::from_usize_(nx);
    let lambda_act = t_end / S::from_usize_(nt) / h_act;
    build_from_plan(domain, h, plan, GridFamily::Uniform { h: h_act, lambda: lambda_act, nx, nt })
}

/// Staggered grid: even layers on the breakpoints `x_lo + j h`, odd layers
/// shifted by `h/2` (with half cells closing the slab laterally).
pub fn build_staggered_grid<S: Real>(h: S, dt: S, t_end: S, x_lo: S, x_hi: S) -> Result<SpaceTimeGrid<S>> {
    check_positive(h, "h")?;
    check_positive(dt, "dt")?;
    let domain = Domain::new(t_end, x_lo, x_hi)?;
    let nx = count(domain.width(), h, "space")?;
    let nt = count(t_end, dt, "time")?;
    let even = lattice(x_lo, x_hi, nx);
    let halves = lattice(x_lo, x_hi, 2 * nx);
    let mut odd: Vec<S> = halves.iter().copied().skip(1).step_by(2).collect();
    odd.insert(0, x_lo);
    odd.push(x_hi);
    let ts = lattice(S::zero(), t_end, nt);
    let plan = (0..nt)
        .map(|n| LayerPlan { t0: ts[n], t1: ts[n + 1], breaks: if n % 2 == 0 { even.clone() } else { odd.clone() } })
        .collect();
    let h_act = domain.width() / S::from_usize_(nx);
    let dt_act = t_end / S::from_usize_(nt);
    build_from_plan(domain, h, plan, GridFamily::Staggered { h: h_act, dt: dt_act, nx, nt })
}

/// Uniform coarse grid whose cells inside `region` take `factor` time sub-steps.
///
/// Coarse cells bordering the region carry hanging vertices on the shared
/// vertical edge, so that edge is split into `factor` collinear faces.
pub fn build_local_timestep_grid<S: Real>(
    h: S,
    lambda_coarse: S,
    region: RefineRegion<S>,
    t_end: S,
    x_lo: S,
    x_hi: S,
) -> Result<SpaceTimeGrid<S>> {
    check_positive(h, "h")?;
    check_positive(lambda_coarse, "lambda")?;
    if region.factor == 0 {
        return invalid("refinement factor must be a positive integer");
    }
    let domain = Domain::new(t_end, x_lo, x_hi)?;
    let nx = count(domain.width(), h, "space")?;
    let nt = count(t_end, lambda_coarse * h, "time")?;
    let xs = lattice(x_lo, x_hi, nx);
    let align = |x: S| -> Result<usize> {
        let tol = S::lit(1e-9) * h;
        xs.iter()
            .position(|&b| (b - x).abs() <= tol)
            .ok_or_else(|| Error::InvalidArgument(format!("refinement boundary {x} is not on a grid breakpoint")))
    };
    let (i0, i1) = (align(region.x_from)?, align(region.x_to)?);
    if i0 >= i1 {
        return invalid(format!("empty refinement region [{}, {}]", region.x_from, region.x_to));
    }
    let r = region.factor;
    let ts = lattice(S::zero(), t_end, nt * r);
    let mut b = GridBuilder::new(domain, h);
    for n in 0..nt {
        for s in 0..r {
            let k = n * r + s;
            for j in 0..nx {
                let (xa, xb) = (xs[j], xs[j + 1]);
                let refined = j >= i0 && j < i1;
                if refined {
                    b.push_cell(
                        vec![
                            Point::new(ts[k], xa),
                            Point::new(ts[k + 1], xa),
                            Point::new(ts[k + 1], xb),
                            Point::new(ts[k], xb),
                        ],
                        k,
                    );
                } else if s == 0 {
                    let (t0, t1) = (ts[n * r], ts[n * r + r]);
                    let mut poly = vec![Point::new(t0, xa)];
                    if j == i1 {
                        poly.extend((1..r).map(|q| Point::new(ts[n * r + q], xa)));
                    }
                    poly.push(Point::new(t1, xa));
                    poly.push(Point::new(t1, xb));
                    if j + 1 == i0 {
                        poly.extend((1..r).rev().map(|q| Point::new(ts[n * r + q], xb)));
                    }
                    poly.push(Point::new(t0, xb));
                    b.push_cell(poly, k);
                }
            }
        }
    }
    let h_act = domain.width() / S::from_usize_(nx);
    b.build(GridFamily::LocalTimestep {
        h: h_act,
        lambda: t_end / S::from_usize_(nt) / h_act,
        region: (xs[i0], xs[i1]),
        factor: r,
    })
}

/// Quadrilateral cells whose interior vertices are advected by explicit
/// Euler steps of `velocity(t, x)`; the lateral slab edges stay fixed.
pub fn build_moving_vertex_grid<S: Real, V: Fn(S, S) -> S>(
    h: S,
    lambda: S,
    t_end: S,
    x_lo: S,
    x_hi: S,
    velocity: V,
) -> Result<SpaceTimeGrid<S>> {
    check_positive(h, "h")?;
    check_positive(lambda, "lambda")?;
    let domain = Domain::new(t_end, x_lo, x_hi)?;
    let nx = count(domain.width(), h, "space")?;
    let nt = count(t_end, lambda * h, "time")?;
    let ts = lattice(S::zero(), t_end, nt);
    let mut pos = lattice(x_lo, x_hi, nx);
    let h_act = domain.width() / S::from_usize_(nx);
    let mut b = GridBuilder::new(domain, h);
    for n in 0..nt {
        let dt = ts[n + 1] - ts[n];
        let mut next = pos.clone();
        for j in 1..nx {
            let step = dt * velocity(ts[n], pos[j]);
            if !step.is_finite() || step.abs() >= h_act * S::half() {
                return Err(Error::Construction {
                    layer: n,
                    reason: format!("vertex {j} moves {step} in one step (limit h/2)"),
                });
            }
            next[j] = pos[j] + step;
        }
        for j in 0..nx {
            if !(next[j + 1] > next[j]) {
                return Err(Error::Construction {
                    layer: n,
                    reason: format!("cell {j} inverts: vertices {} and {} crossed", next[j], next[j + 1]),
                });
            }
            b.push_cell(
                vec![
                    Point::new(ts[n], pos[j]),
                    Point::new(ts[n + 1], next[j]),
                    Point::new(ts[n + 1], next[j + 1]),
                    Point::new(ts[n], pos[j + 1]),
                ],
                n,
            );
        }
        pos = next;
    }
    b.build(GridFamily::MovingVertex { h: h_act, lambda: t_end / S::from_usize_(nt) / h_act })
}

/// Square lattice with randomly displaced vertices, optionally split into
/// triangles along random diagonals. Boundary vertices only slide along the
/// slab boundary. Intended for geometric diagnostics, not for marching.
pub fn build_perturbed_grid<S: Real>(
    h: S,
    t_end: S,
    x_lo: S,
    x_hi: S,
    amplitude: S,
    triangulate: bool,
    seed: u64,
) -> Result<SpaceTimeGrid<S>> {
    check_positive(h, "h")?;
    if amplitude < S::zero() || amplitude > S::lit(0.25) {
        return invalid(format!("perturbation amplitude must lie in [0, 0.25], got {amplitude}"));
    }
    let domain = Domain::new(t_end, x_lo, x_hi)?;
    let nx = count(domain.width(), h, "space")?;
    let nt = count(t_end, h, "time")?;
    let xs = lattice(x_lo, x_hi, nx);
    let ts = lattice(S::zero(), t_end, nt);
    let (hx, ht) = (domain.width() / S::from_usize_(nx), t_end / S::from_usize_(nt));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = |scale: S| scale * amplitude * S::lit(rng.gen_range(-1.0..1.0));
    let mut v = vec![vec![Point::new(S::zero(), S::zero()); nx + 1]; nt + 1];
    for i in 0..=nt {
        for j in 0..=nx {
            let mut p = Point::new(ts[i], xs[j]);
            let t_free = i > 0 && i < nt;
            let x_free = j > 0 && j < nx;
            if t_free {
                p.t += jitter(ht);
            }
            if x_free {
                p.x += jitter(hx);
            }
            v[i][j] = p;
        }
    }
    let mut diag = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut b = GridBuilder::new(domain, h);
    for i in 0..nt {
        for j in 0..nx {
            let (p00, p10, p11, p01) = (v[i][j], v[i + 1][j], v[i + 1][j + 1], v[i][j + 1]);
            if !triangulate {
                b.push_cell(vec![p00, p10, p11, p01], i);
            } else if diag.gen_bool(0.5) {
                b.push_cell(vec![p00, p10, p11], i);
                b.push_cell(vec![p00, p11, p01], i);
            } else {
                b.push_cell(vec![p00, p10, p01], i);
                b.push_cell(vec![p10, p11, p01], i);
            }
        }
    }
    b.build(GridFamily::Perturbed { h: hx.max(ht), amplitude })
}

/// Rebuilds every layer starting at `t_remap` on `new_breakpoints`.
///
/// The time faces on `t = t_remap` become the overlaps `O ∩ N` of old and
/// new cells (left = old, right = new); zero-length overlaps do not occur
/// because new breakpoints within rounding of an old one are snapped onto it.
pub fn insert_remap_layer<S: Real>(
    grid: &SpaceTimeGrid<S>,
    t_remap: S,
    new_breakpoints: &[S],
) -> Result<SpaceTimeGrid<S>> {
    let Some(plan) = grid.plan.as_ref() else {
        return invalid("grid family has no rectangular layer plan; remapping needs one");
    };
    let tol = S::lit(1e-12) * (grid.domain.t_end + grid.domain.width());
    let Some(k) = plan.iter().position(|p| (p.t0 - t_remap).abs() <= tol).filter(|&k| k > 0) else {
        return invalid(format!("t_remap = {t_remap} is not an interior layer boundary"));
    };
    let d = grid.domain;
    let wtol = S::lit(1e-12) * d.width();
    if new_breakpoints.len() < 2
        || (new_breakpoints[0] - d.x_lo).abs() > wtol
        || (new_breakpoints[new_breakpoints.len() - 1] - d.x_hi).abs() > wtol
        || new_breakpoints.windows(2).any(|w| !(w[1] > w[0]))
    {
        return invalid("new breakpoints must increase strictly from x_lo to x_hi");
    }
    let old = &plan[k - 1].breaks;
    let mut breaks: Vec<S> = new_breakpoints
        .iter()
        .map(|&x| old.iter().copied().find(|&o| (o - x).abs() <= wtol).unwrap_or(x))
        .collect();
    let last = breaks.len() - 1;
    breaks[0] = d.x_lo;
    breaks[last] = d.x_hi;
    let mut new_plan = plan.clone();
    for p in new_plan.iter_mut().skip(k) {
        p.breaks = breaks.clone();
    }
    let family = GridFamily::Remapped { base: Box::new(grid.family.clone()), t_remap: plan[k].t0 };
    build_from_plan(d, grid.h, new_plan, family)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::csum;

    fn slab_area_ok(g: &SpaceTimeGrid<f64>) {
        let total = csum(g.cells.iter().map(|c| c.volume));
        assert!(((total - g.domain.area()) / g.domain.area()).abs() < 1e-10);
    }

    #[test]
    fn uniform_rejects_bad_arguments() {
        assert!(build_uniform_grid(0.0, 0.5, 1.0, 0.0, 1.0).is_err());
        assert!(build_uniform_grid(0.1, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(build_uniform_grid(0.1, 1.5, 1.0, 0.0, 1.0).is_err());
        assert!(build_uniform_grid(0.1, 0.5, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn uniform_layers_are_rows() {
        let g = build_uniform_grid(0.1, 0.5, 0.2, 0.0, 1.0).unwrap();
        assert_eq!(g.n_layers(), 4);
        for (n, layer) in g.layers.iter().enumerate() {
            assert_eq!(layer.len(), 10);
            for &c in layer {
                assert!((g.cells[c].bbox.0 - n as f64 * 0.05).abs() < 1e-15);
            }
        }
        slab_area_ok(&g);
    }

    #[test]
    fn staggered_half_faces() {
        let g = build_staggered_grid(0.5, 0.125, 0.25, 0.0, 2.0).unwrap();
        assert_eq!(g.n_layers(), 2);
        assert_eq!(g.layers[0].len(), 4);
        assert_eq!(g.layers[1].len(), 5);
        let between: Vec<_> = g.faces.iter().filter(|f| f.is_time_face() && f.left.is_some()).collect();
        assert_eq!(between.len(), 8);
        for f in between {
            assert!((f.measure - 0.25f64).abs() < 1e-15);
        }
        // interior O cells touch two E cells below
        for &o in &g.layers[1] {
            if !g.cells[o].lateral {
                assert_eq!(g.cell_faces[o].below.len(), 2);
            }
        }
        slab_area_ok(&g);
    }

    #[test]
    fn local_timestep_identity_and_pairs() {
        let u = build_uniform_grid(0.1, 0.5, 0.2, 0.0, 1.0).unwrap();
        let region = RefineRegion { x_from: 0.4, x_to: 0.6, factor: 1 };
        let l = build_local_timestep_grid(0.1, 0.5, region, 0.2, 0.0, 1.0).unwrap();
        assert_eq!(u.n_cells(), l.n_cells());
        for (a, b) in u.cells.iter().zip(&l.cells) {
            assert_eq!(a.vertices, b.vertices);
        }
        let region = RefineRegion { x_from: 0.4, x_to: 0.6, factor: 2 };
        let g = build_local_timestep_grid(0.1, 0.5, region, 0.2, 0.0, 1.0).unwrap();
        slab_area_ok(&g);
        let at = |x: f64| g.faces.iter().filter(|f| !f.is_time_face() && (f.a.x - x).abs() < 1e-12).count();
        // two sub-faces per coarse step on each region edge
        assert_eq!(at(0.4), 2 * 4);
        assert_eq!(at(0.6), 2 * 4);
        assert!(build_local_timestep_grid(0.1, 0.5, RefineRegion { x_from: 0.45, x_to: 0.6, factor: 2 }, 0.2, 0.0, 1.0)
            .is_err());
    }

    #[test]
    fn moving_vertex_identity() {
        let u = build_uniform_grid(0.1, 0.5, 0.2, 0.0, 1.0).unwrap();
        let m = build_moving_vertex_grid(0.1, 0.5, 0.2, 0.0, 1.0, |_, _| 0.0).unwrap();
        assert_eq!(u.n_cells(), m.n_cells());
        for (a, b) in u.cells.iter().zip(&m.cells) {
            assert_eq!(a.volume, b.volume);
        }
    }

    #[test]
    fn moving_vertex_inversion_is_reported() {
        let err = build_moving_vertex_grid(0.1, 0.5, 2.0, 0.0, 1.0, |_, _| 0.9).unwrap_err();
        assert!(matches!(err, Error::Construction { .. }), "{err}");
    }

    #[test]
    fn remap_overlaps() {
        let g = build_uniform_grid(0.5, 0.5, 1.0, 0.0, 1.0).unwrap();
        let r = insert_remap_layer(&g, 0.5, &[0.0, 0.3, 1.0]).unwrap();
        let mut at: Vec<f64> = r
            .faces
            .iter()
            .filter(|f| f.is_time_face() && (f.a.t - 0.5f64).abs() < 1e-12)
            .map(|f| f.measure)
            .collect();
        at.sort_by(f64::total_cmp);
        assert_eq!(at.len(), 3);
        for (m, e) in at.iter().zip([0.2, 0.3, 0.5]) {
            assert!((m - e).abs() < 1e-15);
        }
        assert!(insert_remap_layer(&g, 0.6, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn perturbed_grid_tiles() {
        let g = build_perturbed_grid(0.1, 1.0, 0.0, 1.0, 0.2, true, 7).unwrap();
        assert_eq!(g.n_cells(), 200);
        slab_area_ok(&g);
        assert!(build_perturbed_grid(0.1, 1.0, 0.0, 1.0, 0.3, true, 7).is_err());
    }
}
