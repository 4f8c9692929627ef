//! Weak-form and entropy residuals of a piecewise-constant solution.
//!
//! Cell integrals of `∂φ/∂y_i` are turned into face integrals `∫_{∂C} φ n_i`
//! by the divergence theorem, so only the face quadrature enters.

use rayon::prelude::*;

use super::testfn::TestFunction;
use crate::error::{Error, Result};
use crate::geometry::{contains, point_segment_distance, Point};
use crate::grid::{GridFunction, SpaceTimeGrid};
use crate::initial::InitialData;
use crate::model::{EntropyPair, Kruzkov, PhysicalModel};
use crate::quadrature::{FaceQuadrature, PolygonRule, SegmentRule};
use crate::scalar::{csum, Real};

/// Everything a residual evaluation needs.
#[derive(Clone, Copy)]
pub struct ResidualContext<'a, S: Real> {
    pub grid: &'a SpaceTimeGrid<S>,
    pub model: &'a dyn PhysicalModel<S>,
    pub u0: &'a InitialData<S>,
    pub u: &'a GridFunction<S>,
    /// Cells the support of a test function must avoid (see `flagged_cells`).
    pub excluded: Option<&'a [bool]>,
    pub quadrature: FaceQuadrature,
}

impl<'a, S: Real> ResidualContext<'a, S> {
    pub fn new(
        grid: &'a SpaceTimeGrid<S>,
        model: &'a dyn PhysicalModel<S>,
        u0: &'a InitialData<S>,
        u: &'a GridFunction<S>,
    ) -> Self {
        Self { grid, model, u0, u, excluded: None, quadrature: FaceQuadrature::default() }
    }

    pub fn excluding(mut self, flagged: &'a [bool]) -> Self {
        self.excluded = Some(flagged);
        self
    }

    pub fn with_quadrature(mut self, q: FaceQuadrature) -> Self {
        self.quadrature = q;
        self
    }

    /// The same context with every segment count doubled.
    pub fn refined(self) -> Self {
        let q = self.quadrature.refined();
        self.with_quadrature(q)
    }

    fn volume_rule(&self) -> PolygonRule<S> {
        PolygonRule::new(self.quadrature.points * self.quadrature.segments / 2)
    }

    /// `R(φ) = -Σ_C [u_C ∫_{∂C} φ n_t + f(u_C) ∫_{∂C} φ n_x] - ∫ φ(0,x) u0 dx - Σ_C p(u_C) ∫_C φ`.
    ///
    /// Signed for scalar laws, otherwise the component of largest magnitude.
    pub fn weak(&self, phi: &TestFunction<S>) -> Result<S> {
        let cells = support_cells(self.grid, self.u, self.excluded, phi)?;
        let m = self.u.m();
        let rule = SegmentRule::new(self.quadrature);
        let vrule = self.volume_rule();
        let mut terms: Vec<Vec<S>> = vec![Vec::new(); m];
        let mut f = vec![S::zero(); m];
        let mut p = vec![S::zero(); m];
        for &c in &cells {
            let cell = &self.grid.cells[c];
            let w = self.u.get(c);
            let mo = cell_moment(self.grid, c, phi, &rule);
            self.model.flux(w, cell.centroid, &mut f);
            let vol = if self.model.has_source() {
                self.model.source(w, cell.centroid, &mut p);
                vrule.integrate(&cell.vertices, |y| phi.value(y))
            } else {
                S::zero()
            };
            for k in 0..m {
                terms[k].push(-(w[k] * mo.t + f[k] * mo.x));
                if self.model.has_source() {
                    terms[k].push(-p[k] * vol);
                }
            }
        }
        let mut v = vec![S::zero(); m];
        for k in 0..m {
            let comp = self.u0.component(k);
            let init = self.initial_term(phi, |x, _| comp.eval(x), comp.breakpoints());
            terms[k].push(-init);
        }
        for k in 0..m {
            v[k] = csum(terms[k].drain(..));
        }
        Ok(v.into_iter().fold(S::zero(), |best, r| if r.abs() > best.abs() { r } else { best }))
    }

    /// `-Σ_C [η(u_C) ∫_{∂C} φ n_t + q(u_C) ∫_{∂C} φ n_x] - ∫ φ(0,x) η(u0) dx - Σ_C g(u_C) ∫_C φ`;
    /// an entropy solution makes this `<= 0` for `φ >= 0`.
    pub fn entropy(&self, pair: &dyn EntropyPair<S>, phi: &TestFunction<S>) -> Result<S> {
        if self.u.m() != 1 {
            return Err(Error::Incompatible("entropy residuals are defined for scalar laws".into()));
        }
        let cells = support_cells(self.grid, self.u, self.excluded, phi)?;
        let rule = SegmentRule::new(self.quadrature);
        let vrule = self.volume_rule();
        let mut terms = Vec::with_capacity(cells.len() + 1);
        for &c in &cells {
            let cell = &self.grid.cells[c];
            let w = self.u.get(c);
            let mo = cell_moment(self.grid, c, phi, &rule);
            terms.push(-(pair.eta0(w, cell.centroid) * mo.t + pair.eta1(w, cell.centroid) * mo.x));
            let g = pair.g(w, cell.centroid);
            if g != S::zero() {
                terms.push(-g * vrule.integrate(&cell.vertices, |y| phi.value(y)));
            }
        }
        let comp = self.u0.component(0);
        let mut splits = comp.breakpoints().to_vec();
        if let Some((lo, hi)) = phi.slice(S::zero()) {
            for k in pair.kinks() {
                splits.extend(comp.crossings(k, lo, hi));
            }
        }
        let init = self.initial_term(phi, |x, y| pair.eta0(&[comp.eval(x)], y), &splits);
        terms.push(-init);
        Ok(csum(terms))
    }

    /// `∫ φ(0,x) h(x) dx` over the slab, split at `splits`.
    ///
    /// One interval spans the whole support, so it gets sixteen times the
    /// face segments.
    fn initial_term<H: Fn(S, Point<S>) -> S>(&self, phi: &TestFunction<S>, h: H, splits: &[S]) -> S {
        let q = self.quadrature;
        let rule = SegmentRule::new(FaceQuadrature { points: q.points, segments: q.segments * 16 });
        let Some((lo, hi)) = phi.slice(S::zero()) else {
            return S::zero();
        };
        let (lo, hi) = (lo.max(self.grid.domain.x_lo), hi.min(self.grid.domain.x_hi));
        let mut pts: Vec<S> = splits.iter().copied().filter(|&x| x > lo && x < hi).collect();
        pts.push(lo);
        pts.push(hi);
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        pts.dedup();
        csum(pts.windows(2).map(|w| {
            rule.integrate_1d(w[0], w[1], |x| {
                let y = Point::new(S::zero(), x);
                phi.value(y) * h(x, y)
            })
        }))
    }
}

/// Weak residual of `u` against one test function, with default quadrature.
pub fn weak_residual<S: Real>(
    grid: &SpaceTimeGrid<S>,
    u: &GridFunction<S>,
    model: &dyn PhysicalModel<S>,
    u0: &InitialData<S>,
    phi: &TestFunction<S>,
) -> Result<S> {
    ResidualContext::new(grid, model, u0, u).weak(phi)
}

pub fn entropy_residual<S: Real>(
    grid: &SpaceTimeGrid<S>,
    u: &GridFunction<S>,
    model: &dyn PhysicalModel<S>,
    pair: &dyn EntropyPair<S>,
    u0: &InitialData<S>,
    phi: &TestFunction<S>,
) -> Result<S> {
    ResidualContext::new(grid, model, u0, u).entropy(pair, phi)
}

fn distance_to_polygon<S: Real>(poly: &[Point<S>], p: Point<S>) -> S {
    if contains(poly, p) {
        return S::zero();
    }
    let n = poly.len();
    (0..n).map(|i| point_segment_distance(p, poly[i], poly[(i + 1) % n])).fold(S::infinity(), S::min)
}

/// Cells meeting the open support of `phi`, ascending, after checking the
/// support stays where the residual is meaningful.
pub fn support_cells<S: Real>(
    grid: &SpaceTimeGrid<S>,
    u: &GridFunction<S>,
    excluded: Option<&[bool]>,
    phi: &TestFunction<S>,
) -> Result<Vec<usize>> {
    let d = grid.domain;
    let (t0, t1, x0, x1) = phi.bbox();
    if x0 <= d.x_lo || x1 >= d.x_hi {
        return Err(Error::Support(format!(
            "support x in [{x0}, {x1}] reaches the lateral boundary of [{}, {}]",
            d.x_lo, d.x_hi
        )));
    }
    if t1 >= d.t_end {
        return Err(Error::Support(format!("support reaches t = {t1}, the slab ends at {}", d.t_end)));
    }
    if t1 <= S::zero() {
        return Err(Error::Support(format!("support ends at t = {t1}, below the slab")));
    }
    let mut out = Vec::new();
    for c in &grid.cells {
        let (ct0, ct1, cx0, cx1) = c.bbox;
        if ct1 <= t0 || ct0 >= t1 || cx1 <= x0 || cx0 >= x1 {
            continue;
        }
        if distance_to_polygon(&c.vertices, phi.center) >= phi.radius {
            continue;
        }
        if excluded.is_some_and(|e| e[c.id]) {
            return Err(Error::Support(format!(
                "cell {} (layer {}, x in [{cx0}, {cx1}]) inside the support may see the lateral closure",
                c.id, c.layer
            )));
        }
        if !u.is_defined(c.id) {
            return Err(Error::Support(format!("cell {} inside the support has no value", c.id)));
        }
        out.push(c.id);
    }
    Ok(out)
}

/// `∫_{∂C} φ n dS` over the faces of `cell`, outward normal.
pub fn cell_moment<S: Real>(grid: &SpaceTimeGrid<S>, cell: usize, phi: &TestFunction<S>, rule: &SegmentRule<S>) -> Point<S> {
    let (mut mt, mut mx) = (Vec::new(), Vec::new());
    for f in grid.cell_faces[cell].all() {
        let face = &grid.faces[f];
        let j = bump_integral(phi, face.a, face.b, rule);
        let n = face.normal_from(cell);
        mt.push(j * n.t);
        mx.push(j * n.x);
    }
    Point::new(csum(mt), csum(mx))
}

/// `∫ φ dS` along `a -> b`; faces long compared with the bump are cut into
/// pieces of at most a quarter radius first.
fn bump_integral<S: Real>(phi: &TestFunction<S>, a: Point<S>, b: Point<S>, rule: &SegmentRule<S>) -> S {
    let pieces = (a.dist(b) * S::lit(4.0) / phi.radius).ceil().max(S::one());
    let n = pieces.to_usize().unwrap_or(1);
    if n == 1 {
        return rule.integrate(a, b, |y| phi.value(y));
    }
    let nf = S::from_usize_(n);
    csum((0..n).map(|k| {
        let (p, q) = (a.lerp(b, S::from_usize_(k) / nf), a.lerp(b, S::from_usize_(k + 1) / nf));
        rule.integrate(p, q, |y| phi.value(y))
    }))
}

/// `max_i |Σ_C ∫_{∂C} φ n_i|` over all cells; zero up to rounding when the
/// faces tile the slab consistently and `φ` vanishes on its boundary.
pub fn divergence_defect<S: Real>(grid: &SpaceTimeGrid<S>, phi: &TestFunction<S>, q: FaceQuadrature) -> S {
    let rule = SegmentRule::new(q);
    let moments: Vec<Point<S>> = (0..grid.n_cells()).map(|c| cell_moment(grid, c, phi, &rule)).collect();
    let st = csum(moments.iter().map(|m| m.t));
    let sx = csum(moments.iter().map(|m| m.x));
    st.abs().max(sx.abs())
}

/// `max_C |∫_{∂C} φ n - ∫_C ∇φ|`: the face lists cover each cell boundary.
pub fn moment_defect<S: Real>(grid: &SpaceTimeGrid<S>, phi: &TestFunction<S>, q: FaceQuadrature) -> S {
    let rule = SegmentRule::new(q);
    let vrule = PolygonRule::new(q.points * q.segments * 2);
    (0..grid.n_cells())
        .map(|c| {
            let m = cell_moment(grid, c, phi, &rule);
            let poly = &grid.cells[c].vertices;
            let gt = vrule.integrate(poly, |y| phi.gradient(y).t);
            let gx = vrule.integrate(poly, |y| phi.gradient(y).x);
            (m.t - gt).abs().max((m.x - gx).abs())
        })
        .fold(S::zero(), S::max)
}

/// One entropy residual.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyEntry<S> {
    pub a: S,
    pub phi: usize,
    pub value: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport<S> {
    /// Weak residual per test function, battery order.
    pub weak: Vec<S>,
    /// Kruzkov residual per `(a, φ)`, `a` major.
    pub entropy: Vec<EntropyEntry<S>>,
    /// `max |r - r'| / (1 + |r|)` between default and doubled quadrature.
    pub refinement_defect: S,
}

impl<S: Real> ResidualReport<S> {
    pub fn max_weak(&self) -> S {
        self.weak.iter().fold(S::zero(), |a, v| a.max(v.abs()))
    }

    /// Largest (most positive) entropy residual.
    pub fn max_entropy(&self) -> Option<S> {
        self.entropy.iter().map(|e| e.value).reduce(S::max)
    }
}

/// Residuals of the whole battery, each evaluated twice (default and doubled
/// quadrature).
pub fn residual_report<S: Real>(
    ctx: &ResidualContext<'_, S>,
    battery: &[TestFunction<S>],
    levels: &[S],
) -> Result<ResidualReport<S>> {
    let fine = ctx.refined();
    let weak_pairs: Vec<(S, S)> =
        battery.par_iter().map(|phi| Ok((ctx.weak(phi)?, fine.weak(phi)?))).collect::<Result<_>>()?;
    let jobs: Vec<(S, usize)> = levels.iter().flat_map(|&a| (0..battery.len()).map(move |i| (a, i))).collect();
    let ent_pairs: Vec<(S, S)> = jobs
        .par_iter()
        .map(|&(a, i)| {
            let pair = Kruzkov::new(ctx.model, a)?;
            Ok((ctx.entropy(&pair, &battery[i])?, fine.entropy(&pair, &battery[i])?))
        })
        .collect::<Result<_>>()?;
    let defect = weak_pairs
        .iter()
        .chain(&ent_pairs)
        .map(|&(r, r2)| (r - r2).abs() / (S::one() + r.abs()))
        .fold(S::zero(), S::max);
    Ok(ResidualReport {
        weak: weak_pairs.iter().map(|p| p.0).collect(),
        entropy: jobs.iter().zip(&ent_pairs).map(|(&(a, phi), p)| EntropyEntry { a, phi, value: p.0 }).collect(),
        refinement_defect: defect,
    })
}
