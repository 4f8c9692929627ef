//! Staggered Lax-Friedrichs for the trivial law `u_t = 0`.
//!
//! Every time face carries the value of the cell below it, side faces carry
//! nothing, so each new cell is the length-weighted mean of the cells it sits
//! on. Two steps spread a unit spike as `1/4, 1/2, 1/4`.

use std::sync::Arc;

use super::source::ZeroSource;
use super::{initial_face_integral, CflReport, LayerUpdate, NumericalFlux, NumericalScheme};
use crate::error::{Error, Result};
use crate::grid::{FaceKind, GridFamily, GridFunction, SpaceTimeGrid};
use crate::initial::InitialData;
use crate::model::{flux_is_zero, PhysicalModel};
use crate::scalar::{csum, Real};

pub struct StaggeredFlux<'a, S: Real> {
    grid: &'a SpaceTimeGrid<S>,
    u0: &'a InitialData<S>,
    m: usize,
    // CSR over cells: (lower cell, weight) for each face below
    offsets: Vec<usize>,
    entries: Vec<(usize, S)>,
}

impl<'a, S: Real> StaggeredFlux<'a, S> {
    fn new(grid: &'a SpaceTimeGrid<S>, u0: &'a InitialData<S>) -> Result<Self> {
        let mut offsets = vec![0];
        let mut entries = Vec::new();
        for c in 0..grid.n_cells() {
            let below = &grid.cell_faces[c].below;
            let total = csum(below.iter().map(|&f| grid.faces[f].measure));
            for &f in below {
                let face = &grid.faces[f];
                if let Some(b) = face.left {
                    if grid.cells[b].layer >= grid.cells[c].layer {
                        return Err(Error::Internal(format!("staggered cell {b} is not below cell {c}")));
                    }
                    entries.push((b, face.measure / total));
                }
            }
            offsets.push(entries.len());
        }
        Ok(Self { grid, u0, m: u0.m(), offsets, entries })
    }
}

impl<S: Real> NumericalFlux<S> for StaggeredFlux<'_, S> {
    fn name(&self) -> String {
        "staggered-lf".into()
    }

    fn m(&self) -> usize {
        self.m
    }

    fn evaluate(&self, face: usize, u: &GridFunction<S>, out: &mut [S]) {
        let f = &self.grid.faces[face];
        match f.kind {
            FaceKind::Initial => initial_face_integral(self.u0, f, out),
            _ if f.is_time_face() => {
                let ub = u.get(f.left.expect("interior"));
                for (o, &v) in out.iter_mut().zip(ub) {
                    *o = f.measure * v;
                }
            }
            _ => out.iter_mut().for_each(|v| *v = S::zero()),
        }
    }

    fn stencil(&self, face: usize) -> Vec<usize> {
        let f = &self.grid.faces[face];
        match f.kind {
            FaceKind::Initial => f.right.into_iter().collect(),
            _ if f.is_time_face() => f.left.into_iter().collect(),
            _ => Vec::new(),
        }
    }
}

impl<S: Real> LayerUpdate<S> for StaggeredFlux<'_, S> {
    fn fill_layer(&self, layer: usize, u: &mut GridFunction<S>) -> Result<()> {
        let mut v = vec![S::zero(); self.m];
        for &a in &self.grid.layers[layer] {
            let row = &self.entries[self.offsets[a]..self.offsets[a + 1]];
            let Some(&(b0, _)) = row.first() else {
                return Err(Error::Internal(format!("cell {a} has nothing below it")));
            };
            v.copy_from_slice(u.get(b0));
            for &(b, w) in &row[1..] {
                for (k, vk) in v.iter_mut().enumerate() {
                    *vk += w * (u.get(b)[k] - u.get(b0)[k]);
                }
            }
            u.set(a, &v);
        }
        Ok(())
    }
}

pub fn staggered_lf_scheme<'a, S: Real>(
    model: &'a dyn PhysicalModel<S>,
    grid: &'a SpaceTimeGrid<S>,
    u0: &'a InitialData<S>,
) -> Result<NumericalScheme<'a, S>> {
    let GridFamily::Staggered { h, .. } = grid.family else {
        return Err(Error::Incompatible("staggered Lax-Friedrichs needs a staggered grid".into()));
    };
    if !flux_is_zero(model, &grid.domain) {
        return Err(Error::Incompatible(format!(
            "staggered Lax-Friedrichs is implemented for f = 0 only, model `{}` has a flux",
            model.name()
        )));
    }
    if model.has_source() || u0.m() != model.m() {
        return Err(Error::Incompatible("staggered Lax-Friedrichs: source-free model matching the data".into()));
    }
    let flux = Arc::new(StaggeredFlux::new(grid, u0)?);
    Ok(NumericalScheme {
        name: "staggered-lf".into(),
        grid,
        model,
        u0,
        flux: flux.clone(),
        source: Arc::new(ZeroSource { m: model.m() }),
        cfl_bound: S::infinity(),
        cfl: CflReport::default(),
        reach: h * S::half(),
        update: flux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_staggered_grid;
    use crate::initial::Piecewise;
    use crate::model::{Burgers, Trivial};
    use crate::numerics::initial_cell_averages;

    fn run(h: f64, layers: usize, u0: &InitialData<f64>) -> (SpaceTimeGrid<f64>, GridFunction<f64>) {
        let t = Trivial::new(-10.0, 10.0).unwrap();
        let g = build_staggered_grid(h, 0.01, 0.01 * layers as f64, -2.0, 3.0).unwrap();
        let mut u = initial_cell_averages(&g, u0);
        {
            let s = staggered_lf_scheme(&t, &g, u0).unwrap();
            for k in 1..g.n_layers() {
                s.fill_layer(k, &mut u).unwrap();
            }
        }
        (g, u)
    }

    #[test]
    fn odd_cells_average_their_two_parents() {
        let u0 = InitialData::scalar(Piecewise::indicator(0.0, 1.0, 1.0).unwrap());
        let (g, u) = run(0.5, 2, &u0);
        let even: Vec<f64> = g.layers[0].iter().map(|&c| u.scalar(c)).collect();
        let odd: Vec<f64> = g.layers[1].iter().map(|&c| u.scalar(c)).collect();
        assert_eq!(odd.len(), even.len() + 1);
        for j in 1..even.len() {
            assert_eq!(odd[j], 0.5 * (even[j - 1] + even[j]));
        }
        // half cells at the lateral edges copy their only parent
        assert_eq!(odd[0], even[0]);
    }

    #[test]
    fn binomial_spreading() {
        let h = 0.1;
        for n in 1..=5usize {
            let spike = InitialData::scalar(Piecewise::indicator(0.0, h, 1.0).unwrap());
            let (g, u) = run(h, 2 * n + 1, &spike);
            let row = &g.layers[2 * n];
            let first: Vec<f64> = g.layers[0].iter().map(|&c| u.scalar(c)).collect();
            let start = (0..first.len()).max_by(|&a, &b| first[a].total_cmp(&first[b])).unwrap();
            assert!((first[start] - 1.0).abs() < 1e-12);
            // oracle: brute-force recursion of the two half steps
            let mut w = first.clone();
            for _ in 0..n {
                let m = w.len();
                let odd: Vec<f64> =
                    (0..=m).map(|j| 0.5 * (w[j.saturating_sub(1)] + w[j.min(m - 1)])).collect();
                w = (0..m).map(|j| 0.5 * (odd[j] + odd[j + 1])).collect();
            }
            let binom = |k: usize| (0..k).fold(1.0, |acc, i| acc * (2 * n - i) as f64 / (i + 1) as f64);
            for k in 0..=2 * n {
                let j = start + k - n;
                let weight = binom(k) / 4f64.powi(n as i32);
                assert!((u.scalar(row[j]) - weight).abs() < 1e-12, "n={n} k={k}");
                assert!((u.scalar(row[j]) - w[j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn double_step_is_quarter_half_quarter() {
        let data = Piecewise::steps(vec![-0.5, -0.25, 0.0, 0.25, 0.5], vec![0.3, 1.0, -0.2, 0.6], 0.0, 0.0).unwrap();
        let u0 = InitialData::scalar(data);
        let (g, u) = run(0.25, 3, &u0);
        let e0: Vec<f64> = g.layers[0].iter().map(|&c| u.scalar(c)).collect();
        let e1: Vec<f64> = g.layers[2].iter().map(|&c| u.scalar(c)).collect();
        for j in 1..e0.len() - 1 {
            assert!((e1[j] - 0.25 * (e0[j - 1] + 2.0 * e0[j] + e0[j + 1])).abs() < 1e-15);
        }
    }

    #[test]
    fn constants_stay_put() {
        let u0 = InitialData::scalar(Piecewise::constant(-0.4));
        let (g, u) = run(0.1, 7, &u0);
        assert!((0..g.n_cells()).all(|c| u.scalar(c) == -0.4));
    }

    #[test]
    fn rejects_nonzero_flux_and_wrong_family() {
        let g = build_staggered_grid(0.1, 0.05, 0.2, 0.0, 1.0).unwrap();
        let b = Burgers::new(-1.0, 1.0).unwrap();
        let u0 = InitialData::scalar(Piecewise::constant(0.0));
        assert!(matches!(staggered_lf_scheme(&b, &g, &u0), Err(Error::Incompatible(_))));
        let uni = crate::grid::build_uniform_grid(0.1, 0.5, 0.2, 0.0, 1.0).unwrap();
        let t = Trivial::new(-1.0, 1.0).unwrap();
        assert!(matches!(staggered_lf_scheme(&t, &uni, &u0), Err(Error::Incompatible(_))));
    }
}
