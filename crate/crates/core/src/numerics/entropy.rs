//! Numerical Kruzkov entropy fluxes for Lax-Friedrichs.

use super::{exact_entropy_face_integral, exact_face_integral, NumericalFlux, NumericalScheme};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::{FaceKind, GridFamily, GridFunction, SpaceTimeGrid};
use crate::initial::InitialData;
use crate::model::{Kruzkov, PhysicalModel};
use crate::quadrature::SegmentRule;
use crate::scalar::{csum, Real};

/// `Q_F = E_F(u ∨ a) - E_F(u ∧ a)` on side faces, `S |u_A - a|` on time faces.
pub struct KruzkovFlux<'a, S: Real> {
    grid: &'a SpaceTimeGrid<S>,
    model: &'a dyn PhysicalModel<S>,
    u0: &'a InitialData<S>,
    pair: Kruzkov<'a, S>,
    alpha: S,
    rule: SegmentRule<S>,
}

impl<S: Real> KruzkovFlux<'_, S> {
    pub fn level(&self) -> S {
        self.pair.a
    }

    fn lf(&self, a: Point<S>, b: Point<S>, n: Point<S>, len: S, ul: S, ur: S) -> S {
        let (mut il, mut ir) = ([S::zero()], [S::zero()]);
        exact_face_integral(self.model, a, b, n, &[ul], &self.rule, &mut il);
        exact_face_integral(self.model, a, b, n, &[ur], &self.rule, &mut ir);
        (il[0] + ir[0]) * S::half() + self.alpha * len * S::half() * (ul - ur)
    }
}

impl<S: Real> NumericalFlux<S> for KruzkovFlux<'_, S> {
    fn name(&self) -> String {
        format!("kruzkov-lf(a={})", self.pair.a)
    }

    fn m(&self) -> usize {
        1
    }

    fn evaluate(&self, face: usize, u: &GridFunction<S>, out: &mut [S]) {
        let f = &self.grid.faces[face];
        let a = self.pair.a;
        out[0] = match f.kind {
            FaceKind::Initial => {
                let (lo, hi) = f.x_range();
                let p = self.u0.component(0);
                let mut cuts = p.crossings(a, lo, hi);
                cuts.insert(0, lo);
                cuts.push(hi);
                csum(cuts.windows(2).map(|w| (p.integral(w[0], w[1]) - a * (w[1] - w[0])).abs()))
            }
            _ if f.is_time_face() => f.measure * (u.scalar(f.right.expect("interior")) - a).abs(),
            _ => {
                let (ul, ur) = (u.scalar(f.left.expect("interior")), u.scalar(f.right.expect("interior")));
                self.lf(f.a, f.b, f.normal, f.measure, ul.max(a), ur.max(a))
                    - self.lf(f.a, f.b, f.normal, f.measure, ul.min(a), ur.min(a))
            }
        };
    }

    fn stencil(&self, face: usize) -> Vec<usize> {
        let f = &self.grid.faces[face];
        if f.is_time_face() {
            f.right.into_iter().collect()
        } else {
            f.left.into_iter().chain(f.right).collect()
        }
    }

    fn lateral(&self, cell: usize, u: &GridFunction<S>, out: &mut [S]) {
        out[0] = S::zero();
        let c = &self.grid.cells[cell];
        if !c.lateral {
            return;
        }
        let d = self.grid.domain;
        let tol = S::lit(1e-12) * (d.width() + d.t_end);
        let k = c.vertices.len();
        for i in 0..k {
            let (p, q) = (c.vertices[i], c.vertices[(i + 1) % k]);
            let on = |x: S| (p.x - x).abs() <= tol && (q.x - x).abs() <= tol;
            if on(d.x_lo) || on(d.x_hi) {
                let e = q.sub(p);
                let len = e.norm();
                let n = Point::new(e.x / len, -e.t / len);
                out[0] += exact_entropy_face_integral(&self.pair, p, q, n, u.get(cell), &self.rule);
            }
        }
    }
}

/// Entropy fluxes of the Lax-Friedrichs scheme for `|u - a|`, with the pair itself.
pub fn kruzkov_entropy_fluxes<'a, S: Real>(
    scheme: &NumericalScheme<'a, S>,
    a: S,
) -> Result<KruzkovFlux<'a, S>> {
    let GridFamily::Uniform { lambda, .. } = scheme.grid.family else {
        return Err(Error::Incompatible("entropy fluxes are available for Lax-Friedrichs on uniform grids".into()));
    };
    if scheme.name != "lax-friedrichs" {
        return Err(Error::Incompatible(format!("no entropy fluxes for scheme `{}`", scheme.name)));
    }
    Ok(KruzkovFlux {
        grid: scheme.grid,
        model: scheme.model,
        u0: scheme.u0,
        pair: Kruzkov::new(scheme.model, a)?,
        alpha: S::one() / lambda,
        rule: super::default_rule(),
    })
}

impl<'a, S: Real> KruzkovFlux<'a, S> {
    pub fn pair(&self) -> &Kruzkov<'a, S> {
        &self.pair
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_uniform_grid;
    use crate::initial::Piecewise;
    use crate::model::{Advection, Burgers};
    use crate::numerics::lf_scheme;
    use crate::solver::{flux_balance, march, max_entropy_balance};

    const LEVELS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

    #[test]
    fn entropy_inequality_for_shock_and_expansion() {
        let g = build_uniform_grid(0.05, 0.5, 0.5, -1.0, 2.0).unwrap();
        let b = Burgers::new(-1.0, 1.0).unwrap();
        for (ul, ur) in [(1.0, 0.0), (0.0, 1.0)] {
            let u0 = InitialData::scalar(Piecewise::riemann(0.5, ul, ur));
            let s = lf_scheme(&b, &g, &u0, 0.5).unwrap();
            let r = march(&s).unwrap();
            for a in LEVELS {
                let q = kruzkov_entropy_fluxes(&s, a).unwrap();
                let worst = max_entropy_balance(&s, &q, &r.solution);
                assert!(worst <= 1e-12, "a = {a}: {worst}");
            }
        }
    }

    #[test]
    fn constants_have_zero_entropy_production() {
        let g = build_uniform_grid(0.1, 0.5, 0.5, -1.0, 1.0).unwrap();
        let b = Burgers::new(-1.0, 1.0).unwrap();
        let u0 = InitialData::scalar(Piecewise::constant(0.3));
        let s = lf_scheme(&b, &g, &u0, 0.5).unwrap();
        let r = march(&s).unwrap();
        for a in LEVELS {
            let q = kruzkov_entropy_fluxes(&s, a).unwrap();
            for c in (0..g.n_cells()).filter(|&c| s.closes(c)) {
                let mut e = [0.0];
                flux_balance(&g, &q, None, &r.solution, c, &mut e);
                assert!(e[0].abs() < 1e-15);
            }
        }
    }

    #[test]
    fn clipping_is_inactive_below_the_data() {
        let g = build_uniform_grid(0.1, 0.5, 0.2, -1.0, 1.0).unwrap();
        let b = Burgers::new(-1.0, 1.0).unwrap();
        let u0 = InitialData::scalar(Piecewise::ramp(-0.5, 0.5, 0.1, 0.9).unwrap());
        let s = lf_scheme(&b, &g, &u0, 0.5).unwrap();
        let r = march(&s).unwrap();
        let a = -1.0;
        let q = kruzkov_entropy_fluxes(&s, a).unwrap();
        let k = GridFunction::constant(g.n_cells(), &[a]);
        let (mut e, mut ea, mut ek) = ([0.0f64], [0.0f64], [0.0f64]);
        for f in g.faces.iter().filter(|f| f.kind == FaceKind::Interior && !f.is_time_face()) {
            q.evaluate(f.id, &r.solution, &mut e);
            s.flux.evaluate(f.id, &r.solution, &mut ea);
            s.flux.evaluate(f.id, &k, &mut ek);
            assert!((e[0] - (ea[0] - ek[0])).abs() < 1e-15);
        }
    }

    #[test]
    fn shock_cell_dissipates() {
        let g = build_uniform_grid(0.1, 0.5, 0.1, -0.5, 0.5).unwrap();
        let b = Burgers::new(-1.0, 1.0).unwrap();
        let u0 = InitialData::scalar(Piecewise::riemann(0.0, 1.0, 0.0));
        let s = lf_scheme(&b, &g, &u0, 0.5).unwrap();
        let r = march(&s).unwrap();
        let q = kruzkov_entropy_fluxes(&s, 0.5).unwrap();
        let mut e = [0.0];
        for &c in &g.layers[0][4..6] {
            flux_balance(&g, &q, None, &r.solution, c, &mut e);
            assert!(e[0] < 0.0);
        }
    }

    #[test]
    fn rejects_systems_and_other_schemes() {
        let g = crate::grid::build_moving_vertex_grid(0.1, 0.5, 0.2, -1.0, 1.0, |_, _| 0.0).unwrap();
        let adv = Advection::new(1.0, 0.0, 1.0).unwrap();
        let u0 = InitialData::scalar(Piecewise::constant(0.5));
        let s = crate::numerics::spacetime_lf_scheme(&adv, &g, &u0, crate::numerics::SpacetimeOptions::new(2.0)).unwrap();
        assert!(kruzkov_entropy_fluxes(&s, 0.0).is_err());
    }
}
