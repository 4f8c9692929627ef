//! Randomized checks of the structural properties a numerical flux must have:
//! consistency, conservativeness, a bounded stencil, boundedness and a
//! continuity modulus that vanishes with the perturbation size.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{exact_face_integral, default_rule, NumericalFlux, NumericalScheme};
use crate::error::{invalid, Result};
use crate::geometry::polygon_segment_distance;
use crate::grid::{FaceKind, GridFunction, SpaceTimeGrid};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropertyOptions {
    /// Random states per check.
    pub samples: usize,
    pub seed: u64,
    /// Faces whose stencil is probed cell by cell.
    pub probe_faces: usize,
}

impl Default for PropertyOptions {
    fn default() -> Self {
        Self { samples: 8, seed: 0x5eed, probe_faces: 24 }
    }
}

pub const CONTINUITY_DELTAS: [f64; 3] = [1e-1, 1e-2, 1e-3];

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyReport<S> {
    pub flux: String,
    /// `max |E_F(w) - ∫_F (w n_t + f(w) n_x)| / S(F)` over constant states.
    pub consistency_error: S,
    /// `max |E_{L->R} + E_{R->L}| / S(F)` over random states.
    pub conservation_defect: S,
    /// Declared stencil radius in units of `h_max`.
    pub stencil_radius: S,
    /// Radius of the cells that actually changed a probed face value.
    pub probed_radius: S,
    /// Probed cells that influenced a face without being in its declared stencil.
    pub stencil_leaks: usize,
    /// `max |E_F(u)| / S(F)` over random admissible states.
    pub bound: S,
    /// `(δ, max |E_F(w) - E_F(v)| / S(F))` over constant `w` and `|v - w| <= δ`.
    pub continuity: Vec<(S, S)>,
}

impl<S: Real> PropertyReport<S> {
    pub fn consistent(&self) -> bool {
        self.consistency_error <= S::lit(1e-12)
    }

    pub fn conservative(&self) -> bool {
        self.conservation_defect <= S::lit(1e-12)
    }

    pub fn stencil_ok(&self) -> bool {
        self.stencil_leaks == 0 && self.stencil_radius.is_finite() && self.probed_radius <= self.stencil_radius
    }

    pub fn bounded(&self) -> bool {
        self.bound.is_finite()
    }

    /// Modulus shrinks at least linearly with δ, up to a factor of two.
    /// Diagnostic only: uniform continuity is an asymptotic condition.
    pub fn continuous(&self) -> bool {
        let (Some(first), Some(last)) = (self.continuity.first(), self.continuity.last()) else {
            return false;
        };
        last.1 / last.0 <= S::two() * first.1 / first.0 + S::lit(1e-9)
    }

    pub fn passes(&self) -> bool {
        self.consistent() && self.conservative() && self.stencil_ok() && self.bounded()
    }

    pub fn summary(&self) -> String {
        let ok = |b: bool| if b { "ok" } else { "FAIL" };
        let mut s = format!(
            "flux {}\n  consistency   {:.3e}  {}\n  conservation  {:.3e}  {}\n  stencil       radius {:.3} h, probed {:.3} h, leaks {}  {}\n  bound         {:.3e}  {}\n",
            self.flux,
            self.consistency_error.to_f64_(),
            ok(self.consistent()),
            self.conservation_defect.to_f64_(),
            ok(self.conservative()),
            self.stencil_radius.to_f64_(),
            self.probed_radius.to_f64_(),
            self.stencil_leaks,
            ok(self.stencil_ok()),
            self.bound.to_f64_(),
            ok(self.bounded()),
        );
        for (d, m) in &self.continuity {
            s.push_str(&format!("  continuity    δ = {:.0e}: {:.3e}\n", d.to_f64_(), m.to_f64_()));
        }
        let lip = if self.continuous() { "modulus ~ δ" } else { "modulus not ~ δ (diagnostic)" };
        s.push_str(&format!("  continuity    {lip}\n"));
        s
    }
}

/// Wraps a flux and adds `h^2` to the flux out of the left cell only, which
/// breaks conservation on purpose.
pub struct BiasedFlux<'a, S: Real> {
    pub inner: Arc<dyn NumericalFlux<S> + 'a>,
    pub bias: S,
}

impl<S: Real> NumericalFlux<S> for BiasedFlux<'_, S> {
    fn name(&self) -> String {
        format!("biased({})", self.inner.name())
    }
    fn m(&self) -> usize {
        self.inner.m()
    }
    fn evaluate(&self, face: usize, u: &GridFunction<S>, out: &mut [S]) {
        self.inner.evaluate(face, u, out)
    }
    fn outgoing(&self, face: usize, from: usize, grid: &SpaceTimeGrid<S>, u: &GridFunction<S>, out: &mut [S]) {
        self.inner.outgoing(face, from, grid, u, out);
        if grid.faces[face].left == Some(from) {
            out.iter_mut().for_each(|v| *v += self.bias);
        }
    }
    fn stencil(&self, face: usize) -> Vec<usize> {
        self.inner.stencil(face)
    }
    fn lateral(&self, cell: usize, u: &GridFunction<S>, out: &mut [S]) {
        self.inner.lateral(cell, u, out)
    }
}

fn random_state<S: Real>(rng: &mut ChaCha8Rng, lo: &[S], hi: &[S], n: usize) -> GridFunction<S> {
    let m = lo.len();
    let mut v = Vec::with_capacity(n * m);
    for _ in 0..n {
        for k in 0..m {
            let s: f64 = rng.gen();
            v.push(lo[k] + (hi[k] - lo[k]) * S::lit(s));
        }
    }
    GridFunction::from_flat(m, v)
}

/// Checks `flux` (on the grid and model of `scheme`) against the five properties.
pub fn verify_flux_properties<S: Real>(
    scheme: &NumericalScheme<'_, S>,
    flux: &dyn NumericalFlux<S>,
    opts: PropertyOptions,
) -> Result<PropertyReport<S>> {
    if opts.samples == 0 {
        return invalid("property checks need at least one sample");
    }
    let grid = scheme.grid;
    let model = scheme.model;
    let m = flux.m();
    let n = grid.n_cells();
    let boxed = model.admissible();
    let (lo, hi) = (boxed.lo.clone(), boxed.hi.clone());
    let rule = default_rule();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let interior: Vec<usize> = grid.faces.iter().filter(|f| f.kind == FaceKind::Interior).map(|f| f.id).collect();
    if interior.is_empty() {
        return invalid("grid has no interior faces");
    }
    let mut e = vec![S::zero(); m];
    let mut e2 = vec![S::zero(); m];
    let sup = |a: &[S], b: &[S]| a.iter().zip(b).fold(S::zero(), |acc, (x, y)| acc.max((*x - *y).abs()));

    let mut consistency = S::zero();
    for w in boxed.diagonal_samples(opts.samples.max(2)) {
        let u = GridFunction::constant(n, &w);
        for &f in &interior {
            let face = &grid.faces[f];
            flux.evaluate(f, &u, &mut e);
            exact_face_integral(model, face.a, face.b, face.normal, &w, &rule, &mut e2);
            consistency = consistency.max(sup(&e, &e2) / face.measure);
        }
    }

    let mut conservation = S::zero();
    let mut bound = S::zero();
    let zeros = vec![S::zero(); m];
    for _ in 0..opts.samples {
        let u = random_state(&mut rng, &lo, &hi, n);
        for &f in &interior {
            let face = &grid.faces[f];
            let (l, r) = (face.left.expect("interior"), face.right.expect("interior"));
            flux.outgoing(f, l, grid, &u, &mut e);
            flux.outgoing(f, r, grid, &u, &mut e2);
            let sum: Vec<S> = e.iter().zip(&e2).map(|(a, b)| *a + *b).collect();
            conservation = conservation.max(sup(&sum, &zeros) / face.measure);
            bound = bound.max(sup(&e, &zeros) / face.measure);
        }
    }

    let mut continuity = Vec::new();
    for &d in &CONTINUITY_DELTAS {
        let delta = S::lit(d);
        let mut worst = S::zero();
        for w in boxed.diagonal_samples(opts.samples.max(2)) {
            let u = GridFunction::constant(n, &w);
            let mut v = u.clone();
            for c in 0..n {
                for (k, x) in v.get_mut(c).iter_mut().enumerate() {
                    let s: f64 = rng.gen_range(-1.0..=1.0);
                    *x = (*x + delta * S::lit(s)).max(lo[k]).min(hi[k]);
                }
            }
            for &f in &interior {
                flux.evaluate(f, &u, &mut e);
                flux.evaluate(f, &v, &mut e2);
                worst = worst.max(sup(&e, &e2) / grid.faces[f].measure);
            }
        }
        continuity.push((delta, worst));
    }

    // stencils: declared radius over all faces, probing on a sample
    let h = grid.metrics().h_max;
    let dist = |c: usize, f: usize| {
        let face = &grid.faces[f];
        polygon_segment_distance(&grid.cells[c].vertices, face.a, face.b)
    };
    let mut declared = S::zero();
    for &f in &interior {
        for c in flux.stencil(f) {
            declared = declared.max(dist(c, f));
        }
    }
    let mut probed = S::zero();
    let mut leaks = 0;
    let base = random_state(&mut rng, &lo, &hi, n);
    for _ in 0..opts.probe_faces.min(interior.len()) {
        let f = interior[rng.gen_range(0..interior.len())];
        let stencil = flux.stencil(f);
        flux.evaluate(f, &base, &mut e);
        let mut u = base.clone();
        for c in 0..n {
            let saved = u.get(c).to_vec();
            let bumped: Vec<S> =
                saved.iter().enumerate().map(|(k, &x)| if x > (lo[k] + hi[k]) * S::half() { lo[k] } else { hi[k] }).collect();
            u.set(c, &bumped);
            flux.evaluate(f, &u, &mut e2);
            u.set(c, &saved);
            if sup(&e, &e2) > S::zero() {
                probed = probed.max(dist(c, f));
                if !stencil.contains(&c) {
                    leaks += 1;
                }
            }
        }
    }

    Ok(PropertyReport {
        flux: flux.name(),
        consistency_error: consistency,
        conservation_defect: conservation,
        stencil_radius: declared / h,
        probed_radius: probed / h,
        stencil_leaks: leaks,
        bound,
        continuity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_staggered_grid, build_uniform_grid};
    use crate::initial::{InitialData, Piecewise};
    use crate::model::{Burgers, Trivial};
    use crate::numerics::{lf_scheme, staggered_lf_scheme};

    #[test]
    fn lax_friedrichs_passes() {
        let g = build_uniform_grid(0.1, 0.5, 0.5, -1.0, 1.0).unwrap();
        let b = Burgers::new(-1.0, 2.0).unwrap();
        let u0 = InitialData::scalar(Piecewise::constant(0.0));
        let s = lf_scheme(&b, &g, &u0, 0.5).unwrap();
        let r = verify_flux_properties(&s, s.flux.as_ref(), PropertyOptions::default()).unwrap();
        assert!(r.passes(), "{}", r.summary());
        assert_eq!(r.conservation_defect, 0.0);
        assert!(r.probed_radius <= 1.5);
        assert!(r.continuous());
    }

    #[test]
    fn planted_bias_is_caught() {
        let h = 0.1;
        let g = build_uniform_grid(h, 0.5, 0.5, -1.0, 1.0).unwrap();
        let b = Burgers::new(-1.0, 2.0).unwrap();
        let u0 = InitialData::scalar(Piecewise::constant(0.0));
        let s = lf_scheme(&b, &g, &u0, 0.5).unwrap();
        let biased = BiasedFlux { inner: s.flux.clone(), bias: h * h };
        let r = verify_flux_properties(&s, &biased, PropertyOptions::default()).unwrap();
        assert!(!r.conservative());
        // defect per unit face measure: h^2 / S(F) with S(F) >= lambda h
        let smallest = g.faces.iter().map(|f| f.measure).fold(f64::INFINITY, f64::min);
        assert!((r.conservation_defect - h * h / smallest).abs() < 1e-12);
    }

    #[test]
    fn staggered_stencil_is_local() {
        let g = build_staggered_grid(0.1, 0.05, 0.3, -1.0, 1.0).unwrap();
        let t = Trivial::new(-1.0, 1.0).unwrap();
        let u0 = InitialData::scalar(Piecewise::constant(0.0));
        let s = staggered_lf_scheme(&t, &g, &u0).unwrap();
        let opts = PropertyOptions { probe_faces: 200, ..PropertyOptions::default() };
        let r = verify_flux_properties(&s, s.flux.as_ref(), opts).unwrap();
        assert!(r.passes(), "{}", r.summary());
        assert!(r.stencil_radius <= 1.5 && r.probed_radius <= 1.5);
    }

    #[test]
    fn reports_are_reproducible() {
        let g = build_uniform_grid(0.2, 0.5, 0.4, -1.0, 1.0).unwrap();
        let b = Burgers::new(-1.0, 1.0).unwrap();
        let u0 = InitialData::scalar(Piecewise::constant(0.0));
        let s = lf_scheme(&b, &g, &u0, 0.5).unwrap();
        let a = verify_flux_properties(&s, s.flux.as_ref(), PropertyOptions::default()).unwrap();
        let b2 = verify_flux_properties(&s, s.flux.as_ref(), PropertyOptions::default()).unwrap();
        assert_eq!(a, b2);
    }
}
