//! Gauss–Legendre rules on segments, and collapsed rules on polygons.

use crate::geometry::{signed_area, Point};
use crate::scalar::Real;

/// Gauss–Legendre nodes and weights mapped to `[0, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre<S> {
    pub nodes: Vec<S>,
    pub weights: Vec<S>,
}

impl<S: Real> GaussLegendre<S> {
    /// `n`-point rule; nodes from Newton iteration on `P_n` in `f64`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature needs at least one node");
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, 0.0);
                for j in 0..n {
                    let p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * j as f64 + 1.0) * z * p1 - j as f64 * p2) / (j as f64 + 1.0);
                }
                dp = nf * (z * p0 - p1) / (z * z - 1.0);
                let dz = p0 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            // map [-1,1] -> [0,1]
            nodes[i] = 0.5 * (1.0 - z);
            nodes[n - 1 - i] = 0.5 * (1.0 + z);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.5;
        }
        Self {
            nodes: nodes.into_iter().map(S::lit).collect(),
            weights: weights.into_iter().map(S::lit).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Composite integral of `f` over `[a, b]` with `segments` equal pieces.
    pub fn integrate<F: FnMut(S) -> S>(&self, a: S, b: S, segments: usize, mut f: F) -> S {
        let segs = segments.max(1);
        let h = (b - a) / S::from_usize_(segs);
        let mut acc = S::zero();
        for k in 0..segs {
            let lo = a + h * S::from_usize_(k);
            let mut part = S::zero();
            for (z, w) in self.nodes.iter().zip(&self.weights) {
                part += *w * f(lo + h * *z);
            }
            acc += part * h;
        }
        acc
    }
}

/// Settings for face (segment) quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaceQuadrature {
    /// Gauss points per segment.
    pub points: usize,
    /// Composite segments per face.
    pub segments: usize,
}

impl Default for FaceQuadrature {
    fn default() -> Self {
        Self { points: 5, segments: 4 }
    }
}

impl FaceQuadrature {
    /// Same rule with twice the segments.
    pub fn refined(self) -> Self {
        Self { points: self.points, segments: self.segments * 2 }
    }
}

/// Reusable segment integrator.
#[derive(Clone, Debug)]
pub struct SegmentRule<S> {
    rule: GaussLegendre<S>,
    segments: usize,
}

impl<S: Real> SegmentRule<S> {
    pub fn new(q: FaceQuadrature) -> Self {
        Self { rule: GaussLegendre::new(q.points), segments: q.segments }
    }

    /// `∫_a^b f(y) dS` along the straight segment, with `dS` arclength.
    /// `f` receives the point and accumulates into the caller's buffer via its weight.
    pub fn for_each_point<F: FnMut(Point<S>, S)>(&self, a: Point<S>, b: Point<S>, mut f: F) {
        let len = a.dist(b);
        let segs = S::from_usize_(self.segments);
        for k in 0..self.segments {
            let lo = S::from_usize_(k) / segs;
            for (z, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
                let s = lo + *z / segs;
                f(a.lerp(b, s), *w * len / segs);
            }
        }
    }

    pub fn integrate<F: FnMut(Point<S>) -> S>(&self, a: Point<S>, b: Point<S>, mut f: F) -> S {
        let mut acc = S::zero();
        self.for_each_point(a, b, |p, w| acc += w * f(p));
        acc
    }

    /// One-dimensional composite integral over `[a, b]`.
    pub fn integrate_1d<F: FnMut(S) -> S>(&self, a: S, b: S, f: F) -> S {
        self.rule.integrate(a, b, self.segments, f)
    }
}

/// Polygon quadrature: fan triangulation from the first vertex, each triangle
/// integrated with a collapsed (Duffy) tensor Gauss rule.
#[derive(Clone, Debug)]
pub struct PolygonRule<S> {
    rule: GaussLegendre<S>,
}

impl<S: Real> PolygonRule<S> {
    pub fn new(points: usize) -> Self {
        Self { rule: GaussLegendre::new(points) }
    }

    pub fn for_each_point<F: FnMut(Point<S>, S)>(&self, poly: &[Point<S>], mut f: F) {
        let o = poly[0];
        for i in 1..poly.len() - 1 {
            let (a, b) = (poly[i], poly[i + 1]);
            let area = signed_area(&[o, a, b]);
            if area == S::zero() {
                continue;
            }
            let jac = area.abs() * S::two();
            for (u, wu) in self.rule.nodes.iter().zip(&self.rule.weights) {
                for (v, wv) in self.rule.nodes.iter().zip(&self.rule.weights) {
                    // (u, v) in unit square -> triangle (1-u, u(1-v), uv)
                    let l1 = *u * (S::one() - *v);
                    let l2 = *u * *v;
                    let p = o.add(a.sub(o).scale(l1)).add(b.sub(o).scale(l2));
                    f(p, *wu * *wv * *u * jac);
                }
            }
        }
    }

    pub fn integrate<F: FnMut(Point<S>) -> S>(&self, poly: &[Point<S>], mut f: F) -> S {
        let mut acc = S::zero();
        self.for_each_point(poly, |p, w| acc += w * f(p));
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_point_rule_is_exact_to_degree_nine() {
        let g = GaussLegendre::<f64>::new(5);
        assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let v = g.integrate(0.0, 2.0, 1, |x| x.powi(9));
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-11);
        // known interior node of the 5-point rule on [-1,1]
        let z = 2.0 * g.nodes[3] - 1.0;
        assert!((z - 0.538_469_310_105_683).abs() < 1e-14);
    }

    #[test]
    fn segment_rule_measures_length() {
        let r = SegmentRule::<f64>::new(FaceQuadrature::default());
        let v = r.integrate(Point::new(0.0, 0.0), Point::new(3.0, 4.0), |_| 1.0);
        assert!((v - 5.0).abs() < 1e-14);
    }

    #[test]
    fn polygon_rule_integrates_polynomials() {
        let r = PolygonRule::<f64>::new(4);
        let sq = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        assert!((r.integrate(&sq, |_| 1.0) - 1.0).abs() < 1e-15);
        assert!((r.integrate(&sq, |p| p.t * p.t * p.x) - 1.0 / 6.0).abs() < 1e-15);
    }
}
