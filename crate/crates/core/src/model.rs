//! Physical fluxes, sources and entropy pairs for `u_t + f(u, y)_x = p(u, y)`.
//!
//! The time flux is the identity and is never stored.

use crate::error::{invalid, Result};
use crate::geometry::Point;
use crate::grid::Domain;
use crate::quadrature::GaussLegendre;
use crate::scalar::Real;

/// Box bounds on the state: the admissible set.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibleBox<S> {
    pub lo: Vec<S>,
    pub hi: Vec<S>,
}

impl<S: Real> AdmissibleBox<S> {
    pub fn new(lo: Vec<S>, hi: Vec<S>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return invalid("admissible box bounds must have equal, nonzero length");
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b)) {
            return invalid("admissible box has lo > hi");
        }
        Ok(Self { lo, hi })
    }

    pub fn scalar(lo: S, hi: S) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn m(&self) -> usize {
        self.lo.len()
    }

    /// Membership with a relative slack of `tol` on each side.
    pub fn contains(&self, w: &[S], tol: S) -> bool {
        w.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&v, (&a, &b))| {
            let slack = tol * (S::one() + a.abs().max(b.abs()));
            v >= a - slack && v <= b + slack
        })
    }

    pub fn clamp(&self, w: &mut [S]) {
        for (v, (&a, &b)) in w.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *v = v.max(a).min(b);
        }
    }

    /// `n` evenly spaced points on the diagonal from `lo` to `hi`.
    pub fn diagonal_samples(&self, n: usize) -> Vec<Vec<S>> {
        let n = n.max(2);
        (0..n)
            .map(|k| {
                let s = S::from_usize_(k) / S::from_usize_(n - 1);
                self.lo.iter().zip(&self.hi).map(|(&a, &b)| a + (b - a) * s).collect()
            })
            .collect()
    }
}

pub trait PhysicalModel<S: Real>: Send + Sync {
    fn name(&self) -> &str;

    /// System size.
    fn m(&self) -> usize;

    /// Spatial flux `f(u, y)`.
    fn flux(&self, u: &[S], y: Point<S>, out: &mut [S]);

    fn source(&self, u: &[S], y: Point<S>, out: &mut [S]) {
        let _ = (u, y);
        out.iter_mut().for_each(|v| *v = S::zero());
    }

    fn has_source(&self) -> bool {
        false
    }

    /// Whether `f` and `p` depend on the position `y`.
    fn position_dependent(&self) -> bool {
        false
    }

    fn admissible(&self) -> &AdmissibleBox<S>;

    /// Upper bound of `|∂f/∂u|` over the admissible box and `domain`, if known.
    fn max_wave_speed(&self, domain: &Domain<S>) -> Option<S> {
        let _ = domain;
        None
    }

    /// Interval containing `∂f/∂u` for scalar laws; symmetric by default.
    fn wave_speed_range(&self, domain: &Domain<S>) -> (S, S) {
        let m = self.wave_speed_bound(domain);
        (-m, m)
    }

    /// Bound on `|∂f/∂u|`, falling back to central differences over the box.
    fn wave_speed_bound(&self, domain: &Domain<S>) -> S {
        if let Some(v) = self.max_wave_speed(domain) {
            return v;
        }
        let m = self.m();
        let adm = self.admissible();
        let mut worst = S::zero();
        let (mut fp, mut fm) = (vec![S::zero(); m], vec![S::zero(); m]);
        let ys = [
            Point::new(S::zero(), domain.x_lo),
            Point::new(S::zero(), (domain.x_lo + domain.x_hi) * S::half()),
            Point::new(S::zero(), domain.x_hi),
        ];
        for w in adm.diagonal_samples(65) {
            for y in ys {
                for k in 0..m {
                    let eps = S::lit(1e-6) * (S::one() + w[k].abs());
                    let (mut wp, mut wm) = (w.clone(), w.clone());
                    wp[k] += eps;
                    wm[k] -= eps;
                    self.flux(&wp, y, &mut fp);
                    self.flux(&wm, y, &mut fm);
                    for j in 0..m {
                        worst = worst.max(((fp[j] - fm[j]) / (eps + eps)).abs());
                    }
                }
            }
        }
        worst
    }
}

/// `f(u) = u^2 / 2`.
#[derive(Clone, Debug)]
pub struct Burgers<S> {
    pub admissible: AdmissibleBox<S>,
}

impl<S: Real> Burgers<S> {
    pub fn new(lo: S, hi: S) -> Result<Self> {
        Ok(Self { admissible: AdmissibleBox::scalar(lo, hi)? })
    }
}

impl<S: Real> PhysicalModel<S> for Burgers<S> {
    fn name(&self) -> &str {
        "burgers"
    }
    fn m(&self) -> usize {
        1
    }
    fn flux(&self, u: &[S], _y: Point<S>, out: &mut [S]) {
        out[0] = u[0] * u[0] * S::half();
    }
    fn admissible(&self) -> &AdmissibleBox<S> {
        &self.admissible
    }
    fn max_wave_speed(&self, _domain: &Domain<S>) -> Option<S> {
        Some(self.admissible.lo[0].abs().max(self.admissible.hi[0].abs()))
    }
    fn wave_speed_range(&self, _domain: &Domain<S>) -> (S, S) {
        (self.admissible.lo[0], self.admissible.hi[0])
    }
}

/// `f(u) = c u`.
#[derive(Clone, Debug)]
pub struct Advection<S> {
    pub c: S,
    pub admissible: AdmissibleBox<S>,
}

impl<S: Real> Advection<S> {
    pub fn new(c: S, lo: S, hi: S) -> Result<Self> {
        Ok(Self { c, admissible: AdmissibleBox::scalar(lo, hi)? })
    }
}

impl<S: Real> PhysicalModel<S> for Advection<S> {
    fn name(&self) -> &str {
        "advection"
    }
    fn m(&self) -> usize {
        1
    }
    fn flux(&self, u: &[S], _y: Point<S>, out: &mut [S]) {
        out[0] = self.c * u[0];
    }
    fn admissible(&self) -> &AdmissibleBox<S> {
        &self.admissible
    }
    fn max_wave_speed(&self, _domain: &Domain<S>) -> Option<S> {
        Some(self.c.abs())
    }
    fn wave_speed_range(&self, _domain: &Domain<S>) -> (S, S) {
        (self.c, self.c)
    }
}

/// `f = 0`: the trivial law `u_t = 0`.
#[derive(Clone, Debug)]
pub struct Trivial<S> {
    pub admissible: AdmissibleBox<S>,
}

impl<S: Real> Trivial<S> {
    pub fn new(lo: S, hi: S) -> Result<Self> {
        Ok(Self { admissible: AdmissibleBox::scalar(lo, hi)? })
    }
}

impl<S: Real> PhysicalModel<S> for Trivial<S> {
    fn name(&self) -> &str {
        "trivial"
    }
    fn m(&self) -> usize {
        1
    }
    fn flux(&self, _u: &[S], _y: Point<S>, out: &mut [S]) {
        out.iter_mut().for_each(|v| *v = S::zero());
    }
    fn admissible(&self) -> &AdmissibleBox<S> {
        &self.admissible
    }
    fn max_wave_speed(&self, _domain: &Domain<S>) -> Option<S> {
        Some(S::zero())
    }
}

/// A law written in similarity coordinates `(tau, xi)`:
/// `u_tau + (f(u) - xi u)_xi = -d u`.
pub struct Selfsimilar<S: Real> {
    pub base: Box<dyn PhysicalModel<S>>,
    pub d: usize,
}

impl<S: Real> PhysicalModel<S> for Selfsimilar<S> {
    fn name(&self) -> &str {
        "selfsimilar"
    }
    fn m(&self) -> usize {
        self.base.m()
    }
    fn flux(&self, u: &[S], y: Point<S>, out: &mut [S]) {
        self.base.flux(u, y, out);
        for (o, &v) in out.iter_mut().zip(u) {
            *o -= y.x * v;
        }
    }
    fn source(&self, u: &[S], _y: Point<S>, out: &mut [S]) {
        let d = S::from_usize_(self.d);
        for (o, &v) in out.iter_mut().zip(u) {
            *o = -d * v;
        }
    }
    fn has_source(&self) -> bool {
        true
    }
    fn position_dependent(&self) -> bool {
        true
    }
    fn admissible(&self) -> &AdmissibleBox<S> {
        self.base.admissible()
    }
    fn max_wave_speed(&self, domain: &Domain<S>) -> Option<S> {
        let xi = domain.x_lo.abs().max(domain.x_hi.abs());
        self.base.max_wave_speed(domain).map(|v| v + xi)
    }
}

type FluxFn<S> = Box<dyn Fn(&[S], Point<S>, &mut [S]) + Send + Sync>;

/// Model assembled from closures.
pub struct FnModel<S: Real> {
    pub name: String,
    pub m: usize,
    pub flux: FluxFn<S>,
    pub source: Option<FluxFn<S>>,
    pub position_dependent: bool,
    pub admissible: AdmissibleBox<S>,
    pub max_speed: Option<S>,
}

impl<S: Real> PhysicalModel<S> for FnModel<S> {
    fn name(&self) -> &str {
        &self.name
    }
    fn m(&self) -> usize {
        self.m
    }
    fn flux(&self, u: &[S], y: Point<S>, out: &mut [S]) {
        (self.flux)(u, y, out)
    }
    fn source(&self, u: &[S], y: Point<S>, out: &mut [S]) {
        match &self.source {
            Some(p) => p(u, y, out),
            None => out.iter_mut().for_each(|v| *v = S::zero()),
        }
    }
    fn has_source(&self) -> bool {
        self.source.is_some()
    }
    fn position_dependent(&self) -> bool {
        self.position_dependent
    }
    fn admissible(&self) -> &AdmissibleBox<S> {
        &self.admissible
    }
    fn max_wave_speed(&self, _domain: &Domain<S>) -> Option<S> {
        self.max_speed
    }
}

/// Whether `f` vanishes on sampled admissible states and positions.
pub fn flux_is_zero<S: Real>(model: &dyn PhysicalModel<S>, domain: &Domain<S>) -> bool {
    let mut out = vec![S::zero(); model.m()];
    let xs = [domain.x_lo, (domain.x_lo + domain.x_hi) * S::half(), domain.x_hi];
    model.admissible().diagonal_samples(9).iter().all(|w| {
        xs.iter().all(|&x| {
            model.flux(w, Point::new(S::zero(), x), &mut out);
            out.iter().all(|v| *v == S::zero())
        })
    })
}

/// Scalar entropy `eta0` with entropy flux `eta1` and entropy source `g`:
/// `eta0(u)_t + eta1(u)_x <= g(u)` weakly.
pub trait EntropyPair<S: Real>: Send + Sync {
    fn name(&self) -> String;
    fn eta0(&self, u: &[S], y: Point<S>) -> S;
    fn eta1(&self, u: &[S], y: Point<S>) -> S;
    fn g(&self, u: &[S], y: Point<S>) -> S {
        let _ = (u, y);
        S::zero()
    }
    /// States where `eta0` is not differentiable.
    fn kinks(&self) -> Vec<S> {
        Vec::new()
    }
}

/// Kruzkov pair `|u - a|`, `sgn(u - a)(f(u) - f(a))`.
pub struct Kruzkov<'a, S: Real> {
    pub a: S,
    pub model: &'a dyn PhysicalModel<S>,
}

impl<'a, S: Real> Kruzkov<'a, S> {
    pub fn new(model: &'a dyn PhysicalModel<S>, a: S) -> Result<Self> {
        if model.m() != 1 {
            return invalid(format!("Kruzkov entropies need a scalar law, model has m = {}", model.m()));
        }
        Ok(Self { a, model })
    }
}

fn sgn<S: Real>(v: S) -> S {
    if v > S::zero() {
        S::one()
    } else if v < S::zero() {
        -S::one()
    } else {
        S::zero()
    }
}

impl<S: Real> EntropyPair<S> for Kruzkov<'_, S> {
    fn name(&self) -> String {
        format!("kruzkov(a={})", self.a)
    }
    fn eta0(&self, u: &[S], _y: Point<S>) -> S {
        (u[0] - self.a).abs()
    }
    fn eta1(&self, u: &[S], y: Point<S>) -> S {
        let (mut fu, mut fa) = ([S::zero()], [S::zero()]);
        self.model.flux(u, y, &mut fu);
        self.model.flux(&[self.a], y, &mut fa);
        sgn(u[0] - self.a) * (fu[0] - fa[0])
    }
    fn g(&self, u: &[S], y: Point<S>) -> S {
        if !self.model.has_source() {
            return S::zero();
        }
        let mut p = [S::zero()];
        self.model.source(u, y, &mut p);
        sgn(u[0] - self.a) * p[0]
    }
    fn kinks(&self) -> Vec<S> {
        vec![self.a]
    }
}

/// `eta0 = u^2/2`, `eta1(u) = u f(u) - ∫_0^u f`, with the integral by
/// Gauss-Legendre (exact for polynomial fluxes up to degree 9).
pub struct QuadraticEntropy<'a, S: Real> {
    pub model: &'a dyn PhysicalModel<S>,
    rule: GaussLegendre<S>,
}

impl<'a, S: Real> QuadraticEntropy<'a, S> {
    pub fn new(model: &'a dyn PhysicalModel<S>) -> Result<Self> {
        if model.m() != 1 {
            return invalid("quadratic entropy implemented for scalar laws only");
        }
        Ok(Self { model, rule: GaussLegendre::new(5) })
    }
}

impl<S: Real> EntropyPair<S> for QuadraticEntropy<'_, S> {
    fn name(&self) -> String {
        "quadratic".into()
    }
    fn eta0(&self, u: &[S], _y: Point<S>) -> S {
        u[0] * u[0] * S::half()
    }
    fn eta1(&self, u: &[S], y: Point<S>) -> S {
        let mut f = [S::zero()];
        self.model.flux(u, y, &mut f);
        let int = self.rule.integrate(S::zero(), u[0], 4, |s| {
            let mut v = [S::zero()];
            self.model.flux(&[s], y, &mut v);
            v[0]
        });
        u[0] * f[0] - int
    }
}

/// Largest relative defect of `d eta1/du = eta0'(u) f'(u)` over `states`,
/// by central differences; states within `1e-3` of a kink are skipped.
pub fn entropy_compatibility_defect<S: Real>(
    pair: &dyn EntropyPair<S>,
    model: &dyn PhysicalModel<S>,
    states: &[S],
    y: Point<S>,
) -> S {
    let kinks = pair.kinks();
    let mut worst = S::zero();
    for &u in states {
        if kinks.iter().any(|&k| (u - k).abs() < S::lit(1e-3)) {
            continue;
        }
        let eps = S::lit(1e-5) * (S::one() + u.abs());
        let d = |f: &dyn Fn(S) -> S| (f(u + eps) - f(u - eps)) / (eps + eps);
        let flux = |s: S| {
            let mut v = [S::zero()];
            model.flux(&[s], y, &mut v);
            v[0]
        };
        let lhs = d(&|s| pair.eta1(&[s], y));
        let rhs = d(&|s| pair.eta0(&[s], y)) * d(&flux);
        let scale = S::one() + lhs.abs().max(rhs.abs());
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn y0() -> Point<f64> {
        Point::new(0.0, 0.0)
    }

    #[test]
    fn burgers_flux_and_speed() {
        let b = Burgers::new(-1.0, 2.0).unwrap();
        let mut f = [0.0];
        b.flux(&[3.0], y0(), &mut f);
        assert_eq!(f[0], 4.5);
        let d = Domain::new(1.0, 0.0, 1.0).unwrap();
        assert_eq!(b.max_wave_speed(&d), Some(2.0));
        // the difference-quotient fallback agrees
        let m = FnModel {
            name: "b".into(),
            m: 1,
            flux: Box::new(|u: &[f64], _, o: &mut [f64]| o[0] = 0.5 * u[0] * u[0]),
            source: None,
            position_dependent: false,
            admissible: AdmissibleBox::scalar(-1.0, 2.0).unwrap(),
            max_speed: None,
        };
        assert!((m.wave_speed_bound(&d) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn entropy_pairs_are_compatible() {
        let b = Burgers::new(-2.0, 2.0).unwrap();
        let states: Vec<f64> = (0..41).map(|k| -2.0 + 0.1 * k as f64).collect();
        for a in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let k = Kruzkov::new(&b, a).unwrap();
            assert!(entropy_compatibility_defect(&k, &b, &states, y0()) < 1e-6);
        }
        let q = QuadraticEntropy::new(&b).unwrap();
        // u^3/3 for Burgers
        assert!((q.eta1(&[1.5], y0()) - 1.125).abs() < 1e-14);
        assert!(entropy_compatibility_defect(&q, &b, &states, y0()) < 1e-6);
    }

    #[test]
    fn kruzkov_reduces_when_clipping_is_inactive() {
        let b = Burgers::new(-2.0, 2.0).unwrap();
        let k = Kruzkov::new(&b, -1.0).unwrap();
        assert_eq!(k.eta0(&[0.5], y0()), 1.5);
        assert_eq!(k.eta1(&[0.5], y0()), 0.125 - 0.5);
    }

    #[test]
    fn selfsimilar_flux_subtracts_xi_u() {
        let s = Selfsimilar { base: Box::new(Burgers::new(-1.0, 1.0).unwrap()), d: 1 };
        let mut f = [0.0];
        s.flux(&[1.0], Point::new(0.0, 2.0), &mut f);
        assert_eq!(f[0], 0.5 - 2.0);
        s.source(&[2.0], y0(), &mut f);
        assert_eq!(f[0], -2.0);
        assert!(flux_is_zero(&Trivial::new(0.0, 1.0).unwrap(), &Domain::new(1.0, 0.0, 1.0).unwrap()));
        assert!(!flux_is_zero(&s, &Domain::new(1.0, 0.0, 1.0).unwrap()));
    }

    #[test]
    fn box_membership() {
        let b = AdmissibleBox::scalar(0.0, 1.0).unwrap();
        assert!(b.contains(&[1.0 + 1e-14], 1e-12));
        assert!(!b.contains(&[1.1], 1e-12));
        assert!(AdmissibleBox::scalar(1.0, 0.0).is_err());
    }
}
