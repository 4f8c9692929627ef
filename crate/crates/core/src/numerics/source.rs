use super::NumericalSource;
use crate::grid::{GridFunction, SpaceTimeGrid};
use crate::model::PhysicalModel;
use crate::scalar::Real;

pub struct ZeroSource {
    pub m: usize,
}

impl<S: Real> NumericalSource<S> for ZeroSource {
    fn name(&self) -> String {
        "zero".into()
    }
    fn m(&self) -> usize {
        self.m
    }
    fn evaluate(&self, _cell: usize, _u: &GridFunction<S>, out: &mut [S]) {
        out.iter_mut().for_each(|v| *v = S::zero());
    }
    fn stencil(&self, _cell: usize) -> Vec<usize> {
        Vec::new()
    }
    fn is_zero(&self) -> bool {
        true
    }
}

/// One-point rule `G_C = |C| p(u_C, centroid)`.
pub struct ModelSource<'a, S: Real> {
    grid: &'a SpaceTimeGrid<S>,
    model: &'a dyn PhysicalModel<S>,
}

impl<'a, S: Real> ModelSource<'a, S> {
    pub fn new(grid: &'a SpaceTimeGrid<S>, model: &'a dyn PhysicalModel<S>) -> Self {
        Self { grid, model }
    }
}

impl<S: Real> NumericalSource<S> for ModelSource<'_, S> {
    fn name(&self) -> String {
        format!("midpoint({})", self.model.name())
    }
    fn m(&self) -> usize {
        self.model.m()
    }
    fn evaluate(&self, cell: usize, u: &GridFunction<S>, out: &mut [S]) {
        let c = &self.grid.cells[cell];
        self.model.source(u.get(cell), c.centroid, out);
        out.iter_mut().for_each(|v| *v *= c.volume);
    }
    fn stencil(&self, cell: usize) -> Vec<usize> {
        vec![cell]
    }
}

/// `G_C = -d |C| u_C`, the source of the self-similar change of variables.
pub struct SelfsimilarSource<'a, S: Real> {
    grid: &'a SpaceTimeGrid<S>,
    pub d: S,
    m: usize,
}

impl<S: Real> NumericalSource<S> for SelfsimilarSource<'_, S> {
    fn name(&self) -> String {
        format!("selfsimilar(d={})", self.d)
    }
    fn m(&self) -> usize {
        self.m
    }
    fn evaluate(&self, cell: usize, u: &GridFunction<S>, out: &mut [S]) {
        let v = self.grid.cells[cell].volume;
        for (o, &w) in out.iter_mut().zip(u.get(cell)) {
            *o = -self.d * w * v;
        }
    }
    fn stencil(&self, cell: usize) -> Vec<usize> {
        vec![cell]
    }
}

pub fn selfsimilar_source<'a, S: Real>(
    grid: &'a SpaceTimeGrid<S>,
    model: &dyn PhysicalModel<S>,
    d: S,
) -> SelfsimilarSource<'a, S> {
    SelfsimilarSource { grid, d, m: model.m() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_uniform_grid;
    use crate::model::Burgers;

    #[test]
    fn selfsimilar_example() {
        // cell volume 0.1 * 0.05
        let g = build_uniform_grid(0.1, 0.5, 0.1, 0.0, 1.0).unwrap();
        let b = Burgers::new(-3.0, 3.0).unwrap();
        let src = selfsimilar_source(&g, &b, 1.0);
        let u = GridFunction::constant(g.n_cells(), &[2.0]);
        let mut out = [0.0];
        src.evaluate(3, &u, &mut out);
        assert!((g.cells[3].volume - 0.005f64).abs() < 1e-15);
        assert!((out[0] + 0.01f64).abs() < 1e-15);
    }
}
