//! Layer-by-layer marching, balance audits and output.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::slice_range;
use crate::grid::{GridFunction, SpaceTimeGrid};
use crate::numerics::{initial_cell_averages, CflReport, NumericalFlux, NumericalScheme, NumericalSource};
use crate::scalar::{csum, Real};

#[derive(Clone, Debug)]
pub struct MarchResult<S> {
    pub solution: GridFunction<S>,
    /// `Σ width_at(t_k) u` over the cells alive at the start of each layer
    /// (first component).
    pub per_layer_mass: Vec<S>,
    /// Largest `|Σ_N E_{C->N} - G_C|` over every closed cell.
    pub max_balance_residual: S,
    pub cfl: CflReport,
    /// Cells close enough to the lateral edge that the ghost closure may have
    /// reached them.
    pub flagged: Vec<bool>,
}

impl<S: Real> MarchResult<S> {
    pub fn cfl_violations(&self) -> usize {
        self.cfl.total()
    }

    pub fn mass_drift(&self) -> S {
        let m0 = self.per_layer_mass.first().copied().unwrap_or(S::zero());
        self.per_layer_mass.iter().fold(S::zero(), |acc, &m| acc.max((m - m0).abs()))
    }
}

fn check_admissible<S: Real>(scheme: &NumericalScheme<'_, S>, u: &GridFunction<S>, layer: usize) -> Result<()> {
    let boxed = scheme.model.admissible();
    let tol = S::lit(1e-12) * (S::one() + boxed.lo.iter().chain(&boxed.hi).fold(S::zero(), |a, &v| a.max(v.abs())));
    for &c in &scheme.grid.layers[layer] {
        let w = u.get(c);
        if !boxed.contains(w, tol) {
            return Err(Error::Inadmissible { layer, cell: c, value: format!("{:?}", w) });
        }
    }
    Ok(())
}

/// Marches `scheme` over its whole grid.
pub fn march<S: Real>(scheme: &NumericalScheme<'_, S>) -> Result<MarchResult<S>> {
    let grid = scheme.grid;
    let mut u = initial_cell_averages(grid, scheme.u0);
    check_admissible(scheme, &u, 0)?;
    for k in 1..grid.n_layers() {
        scheme.fill_layer(k, &mut u)?;
        check_admissible(scheme, &u, k)?;
    }
    let max_balance_residual = max_balance_residual(scheme, &u);
    let per_layer_mass = grid.layer_times.iter().map(|&t| total_mass(grid, &u, t)).collect();
    Ok(MarchResult {
        per_layer_mass,
        max_balance_residual,
        cfl: scheme.cfl.clone(),
        flagged: flagged_cells(scheme),
        solution: u,
    })
}

/// Marches a grid whose layer `period` repeats the geometry of layer 0,
/// copying layer `period` back into layer 0 after each sweep.
///
/// Returns the layer-0 values (row order) after `repeats` sweeps and the mass
/// after each sweep. The grid only needs `period + 1` layers regardless of
/// how long the march is.
pub fn march_periodic<S: Real>(
    scheme: &NumericalScheme<'_, S>,
    period: usize,
    repeats: usize,
) -> Result<(GridFunction<S>, Vec<S>)> {
    let grid = scheme.grid;
    if period == 0 || period >= grid.n_layers() {
        return Err(Error::InvalidArgument(format!("period {period} must lie in 1..{}", grid.n_layers())));
    }
    let (first, last) = (&grid.layers[0], &grid.layers[period]);
    let same = first.len() == last.len()
        && first.iter().zip(last).all(|(&a, &b)| {
            let (ca, cb) = (&grid.cells[a], &grid.cells[b]);
            ca.bbox.2 == cb.bbox.2 && ca.bbox.3 == cb.bbox.3 && ca.vertices.len() == cb.vertices.len()
        });
    if !same {
        return Err(Error::Incompatible(format!("layer {period} does not repeat the cells of layer 0")));
    }
    let mut u = initial_cell_averages(grid, scheme.u0);
    check_admissible(scheme, &u, 0)?;
    let t0 = grid.layer_times[0];
    let mut mass = Vec::with_capacity(repeats + 1);
    mass.push(total_mass(grid, &u, t0));
    for _ in 0..repeats {
        for k in 1..=period {
            scheme.fill_layer(k, &mut u)?;
            check_admissible(scheme, &u, k)?;
        }
        for (&a, &b) in first.iter().zip(last) {
            let v = u.get(b).to_vec();
            u.set(a, &v);
        }
        mass.push(total_mass(grid, &u, t0));
    }
    Ok((u, mass))
}

/// `Σ_N E_{C->N} + lateral - G_C`.
pub fn cell_balance<S: Real>(scheme: &NumericalScheme<'_, S>, u: &GridFunction<S>, cell: usize, out: &mut [S]) {
    flux_balance(scheme.grid, scheme.flux.as_ref(), Some(scheme.source.as_ref()), u, cell, out)
}

/// Balance of an arbitrary flux (and optional source) on one cell, e.g. an
/// entropy flux whose balance should be nonpositive.
pub fn flux_balance<S: Real>(
    grid: &SpaceTimeGrid<S>,
    flux: &dyn NumericalFlux<S>,
    source: Option<&dyn NumericalSource<S>>,
    u: &GridFunction<S>,
    cell: usize,
    out: &mut [S],
) {
    let m = out.len();
    let mut terms: Vec<Vec<S>> = vec![Vec::new(); m];
    let mut e = vec![S::zero(); m];
    for f in grid.cell_faces[cell].all() {
        flux.outgoing(f, cell, grid, u, &mut e);
        for k in 0..m {
            terms[k].push(e[k]);
        }
    }
    flux.lateral(cell, u, &mut e);
    for k in 0..m {
        terms[k].push(e[k]);
    }
    if let Some(src) = source {
        src.evaluate(cell, u, &mut e);
        for k in 0..m {
            terms[k].push(-e[k]);
        }
    }
    for k in 0..m {
        out[k] = csum(terms[k].drain(..));
    }
}

/// Largest entropy balance `Σ Q_{C->N}` over the closed cells; the discrete
/// entropy inequality asks for it to be `<= 0`.
pub fn max_entropy_balance<S: Real>(
    scheme: &NumericalScheme<'_, S>,
    entropy: &dyn NumericalFlux<S>,
    u: &GridFunction<S>,
) -> S {
    (0..scheme.grid.n_cells())
        .into_par_iter()
        .filter(|&c| scheme.closes(c))
        .map(|c| {
            let mut q = [S::zero()];
            flux_balance(scheme.grid, entropy, None, u, c, &mut q);
            q[0]
        })
        .reduce(S::neg_infinity, S::max)
}

/// Balance residual of one cell: signed for scalar laws, otherwise the
/// component of largest magnitude.
pub fn cell_balance_residual<S: Real>(scheme: &NumericalScheme<'_, S>, u: &GridFunction<S>, cell: usize) -> S {
    let mut r = vec![S::zero(); u.m()];
    cell_balance(scheme, u, cell, &mut r);
    r.into_iter().fold(S::zero(), |best, v| if v.abs() > best.abs() { v } else { best })
}

/// Largest balance residual over all cells the scheme closes.
pub fn max_balance_residual<S: Real>(scheme: &NumericalScheme<'_, S>, u: &GridFunction<S>) -> S {
    (0..scheme.grid.n_cells())
        .into_par_iter()
        .filter(|&c| scheme.closes(c))
        .map(|c| cell_balance_residual(scheme, u, c).abs())
        .reduce(S::zero, S::max)
}

/// `Σ width_at(t) u_C` over cells alive at `t` (first component).
pub fn total_mass<S: Real>(grid: &SpaceTimeGrid<S>, u: &GridFunction<S>, t: S) -> S {
    csum(grid.cells_alive_at(t).into_iter().map(|c| grid.cells[c].width_at(t) * u.scalar(c)))
}

/// Cells whose `x` distance to the lateral edge is below `(layer + 1) reach`.
pub fn flagged_cells<S: Real>(scheme: &NumericalScheme<'_, S>) -> Vec<bool> {
    let d = scheme.grid.domain;
    scheme
        .grid
        .cells
        .iter()
        .map(|c| {
            let gap = (c.bbox.2 - d.x_lo).min(d.x_hi - c.bbox.3);
            gap < S::from_usize_(c.layer + 1) * scheme.reach
        })
        .collect()
}

/// One cell of the solution profile at a fixed time.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileCell<S> {
    pub cell: usize,
    pub x0: S,
    pub x1: S,
    pub value: Vec<S>,
}

/// Values of the cells alive at `t`, ordered in `x`.
pub fn layer_profile<S: Real>(grid: &SpaceTimeGrid<S>, u: &GridFunction<S>, t: S) -> Vec<ProfileCell<S>> {
    let mut out: Vec<ProfileCell<S>> = grid
        .cells_alive_at(t)
        .into_iter()
        .filter_map(|c| {
            slice_range(&grid.cells[c].vertices, t).map(|(x0, x1)| ProfileCell { cell: c, x0, x1, value: u.get(c).to_vec() })
        })
        .collect();
    out.sort_by(|a, b| a.x0.partial_cmp(&b.x0).expect("finite"));
    out
}

/// CSV with columns `layer,cell_id,t_mid,x_mid,u_1..u_m`.
pub fn write_csv<S: Real, W: Write>(grid: &SpaceTimeGrid<S>, u: &GridFunction<S>, mut w: W) -> Result<()> {
    write!(w, "layer,cell_id,t_mid,x_mid")?;
    for k in 1..=u.m() {
        write!(w, ",u_{k}")?;
    }
    writeln!(w)?;
    for c in &grid.cells {
        write!(w, "{},{},{:?},{:?}", c.layer, c.id, c.centroid.t.to_f64_(), c.centroid.x.to_f64_())?;
        for v in u.get(c.id) {
            write!(w, ",{:?}", v.to_f64_())?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_staggered_grid, build_uniform_grid};
    use crate::initial::{InitialData, Piecewise};
    use crate::model::{Burgers, Trivial};
    use crate::numerics::{lf_scheme, staggered_lf_scheme};

    #[test]
    fn lf_march_conserves_and_closes() {
        let g = build_uniform_grid(0.05, 0.5, 0.5, -1.0, 2.0).unwrap();
        let b = Burgers::new(-0.5, 1.5).unwrap();
        let u0 = InitialData::scalar(Piecewise::indicator(0.0, 1.0, 1.0).unwrap());
        let s = lf_scheme(&b, &g, &u0, 0.5).unwrap();
        let r = march(&s).unwrap();
        assert!(r.max_balance_residual < 1e-14, "{}", r.max_balance_residual);
        assert!(r.mass_drift() < 1e-13, "{}", r.mass_drift());
        assert_eq!(r.cfl_violations(), 0);
        let p = layer_profile(&g, &r.solution, 0.25);
        assert_eq!(p.len(), 60);
        assert!(p.windows(2).all(|w| w[0].x1 == w[1].x0));
    }

    #[test]
    fn periodic_march_matches_full_march() {
        let h = 0.1;
        // 40 steps of 0.05; the full grid needs layer 40 to exist
        let (t, x0, x1) = (2.05, -3.0, 4.0);
        let triv = Trivial::new(-1.0, 2.0).unwrap();
        let u0 = InitialData::scalar(Piecewise::indicator(0.0, 1.0, 1.0).unwrap());
        let full = build_staggered_grid(h, 0.05, t, x0, x1).unwrap();
        let s = staggered_lf_scheme(&triv, &full, &u0).unwrap();
        let r = march(&s).unwrap();
        // three layers: even, odd, even
        let short = build_staggered_grid(h, 0.05, 0.15, x0, x1).unwrap();
        let sp = staggered_lf_scheme(&triv, &short, &u0).unwrap();
        let (u, mass) = march_periodic(&sp, 2, 20).unwrap();
        let last = full.layers.last().unwrap();
        let first = &short.layers[0];
        assert_eq!(last.len(), first.len());
        for (&a, &b) in last.iter().zip(first) {
            assert_eq!(r.solution.scalar(a), u.scalar(b));
        }
        assert!(mass.iter().all(|m| (m - 1.0f64).abs() < 1e-14));
    }

    #[test]
    fn csv_header() {
        let g = build_uniform_grid(0.5, 0.5, 0.25, 0.0, 1.0).unwrap();
        let u = GridFunction::constant(g.n_cells(), &[1.0, 2.0]);
        let mut buf = Vec::new();
        write_csv(&g, &u, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("layer,cell_id,t_mid,x_mid,u_1,u_2\n"));
        assert_eq!(text.lines().count(), 1 + g.n_cells());
    }

    #[test]
    fn window_mass_follows_the_boundary_fluxes() {
        // Riemann (1, 0): f(1) - f(0) = 1/2 flows in through x = -1 and
        // nothing leaves through x = 2, so the window mass is 1 + t/2
        let g = build_uniform_grid(0.02f64, 0.5, 0.51, -3.0, 4.0).unwrap();
        let b = Burgers::new(-0.5, 1.5).unwrap();
        let u0 = InitialData::scalar(Piecewise::riemann(0.0, 1.0, 0.0));
        let r = march(&lf_scheme(&b, &g, &u0, 0.5).unwrap()).unwrap();
        let k = g.layer_starting_at(0.5).unwrap();
        let t = g.layer_times[k];
        let mass: f64 = layer_profile(&g, &r.solution, t)
            .iter()
            .map(|c| (c.x1.min(2.0) - c.x0.max(-1.0)).max(0.0) * c.value[0])
            .sum();
        assert!((mass - (1.0 + 0.5 * t)).abs() < 1e-12, "{mass}");
    }

    #[test]
    fn hundred_steps_keep_mass() {
        let g = build_uniform_grid(0.05f64, 0.5, 2.5, -4.0, 5.0).unwrap();
        assert_eq!(g.n_layers(), 100);
        let b = Burgers::new(-1.0, 2.0).unwrap();
        let u0 = InitialData::scalar(Piecewise::indicator(0.0, 1.0, 1.0).unwrap());
        let r = march(&lf_scheme(&b, &g, &u0, 0.5).unwrap()).unwrap();
        assert!(r.mass_drift() <= 1e-12, "{}", r.mass_drift());
        // and the march is deterministic
        let again = march(&lf_scheme(&b, &g, &u0, 0.5).unwrap()).unwrap();
        assert_eq!(r.solution, again.solution);
    }
}
