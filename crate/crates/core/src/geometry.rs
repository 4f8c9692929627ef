//! Planar geometry in the space-time half-plane, coordinates ordered `(t, x)`.

use crate::scalar::{csum, Real};

/// A point `(t, x)` of space-time.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point<S> {
    pub t: S,
    pub x: S,
}

impl<S: Real> Point<S> {
    #[inline]
    pub fn new(t: S, x: S) -> Self {
        Self { t, x }
    }

    #[inline]
    pub fn sub(self, o: Self) -> Self {
        Self::new(self.t - o.t, self.x - o.x)
    }

    #[inline]
    pub fn add(self, o: Self) -> Self {
        Self::new(self.t + o.t, self.x + o.x)
    }

    #[inline]
    pub fn scale(self, s: S) -> Self {
        Self::new(self.t * s, self.x * s)
    }

    #[inline]
    pub fn dot(self, o: Self) -> S {
        self.t * o.t + self.x * o.x
    }

    #[inline]
    pub fn cross(self, o: Self) -> S {
        self.t * o.x - self.x * o.t
    }

    #[inline]
    pub fn norm(self) -> S {
        self.t.hypot(self.x)
    }

    #[inline]
    pub fn dist(self, o: Self) -> S {
        self.sub(o).norm()
    }

    /// Linear interpolation `self + s (o - self)`.
    #[inline]
    pub fn lerp(self, o: Self, s: S) -> Self {
        Self::new(self.t + s * (o.t - self.t), self.x + s * (o.x - self.x))
    }

    /// Bit pattern used for exact vertex matching.
    pub(crate) fn key(self) -> (u64, u64) {
        let norm = |v: S| {
            let v = v.to_f64_();
            // +0 and -0 must collide
            if v == 0.0 {
                0u64
            } else {
                v.to_bits()
            }
        };
        (norm(self.t), norm(self.x))
    }
}

/// Signed shoelace area; positive for counterclockwise order in the `(t, x)` plane.
pub fn signed_area<S: Real>(poly: &[Point<S>]) -> S {
    let n = poly.len();
    let twice = csum((0..n).map(|i| poly[i].cross(poly[(i + 1) % n])));
    twice * S::half()
}

pub fn centroid<S: Real>(poly: &[Point<S>]) -> Point<S> {
    let n = poly.len();
    let a = signed_area(poly);
    // shift to the first vertex to limit cancellation
    let o = poly[0];
    let mut ct = Vec::with_capacity(n);
    let mut cx = Vec::with_capacity(n);
    for i in 0..n {
        let p = poly[i].sub(o);
        let q = poly[(i + 1) % n].sub(o);
        let c = p.cross(q);
        ct.push((p.t + q.t) * c);
        cx.push((p.x + q.x) * c);
    }
    let six_a = S::lit(6.0) * a;
    Point::new(o.t + csum(ct) / six_a, o.x + csum(cx) / six_a)
}

pub fn perimeter<S: Real>(poly: &[Point<S>]) -> S {
    let n = poly.len();
    csum((0..n).map(|i| poly[i].dist(poly[(i + 1) % n])))
}

/// Largest vertex-to-vertex distance (the diameter of a polygon).
pub fn diameter<S: Real>(poly: &[Point<S>]) -> S {
    let mut d = S::zero();
    for (i, p) in poly.iter().enumerate() {
        for q in &poly[i + 1..] {
            d = d.max(p.dist(*q));
        }
    }
    d
}

/// Axis-aligned bounding box `(t_min, t_max, x_min, x_max)`.
pub fn bbox<S: Real>(poly: &[Point<S>]) -> (S, S, S, S) {
    let mut b = (S::infinity(), S::neg_infinity(), S::infinity(), S::neg_infinity());
    for p in poly {
        b.0 = b.0.min(p.t);
        b.1 = b.1.max(p.t);
        b.2 = b.2.min(p.x);
        b.3 = b.3.max(p.x);
    }
    b
}

/// True when the polygon has no self-intersections between non-adjacent edges.
pub fn is_simple<S: Real>(poly: &[Point<S>]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if a == b {
            return false;
        }
        for j in i + 1..n {
            if j == i || (j + 1) % n == i || j == (i + 1) % n {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

fn orient<S: Real>(a: Point<S>, b: Point<S>, c: Point<S>) -> S {
    b.sub(a).cross(c.sub(a))
}

fn on_segment<S: Real>(a: Point<S>, b: Point<S>, p: Point<S>) -> bool {
    p.t >= a.t.min(b.t) && p.t <= a.t.max(b.t) && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x)
}

/// Closed-segment intersection test.
pub fn segments_intersect<S: Real>(a: Point<S>, b: Point<S>, c: Point<S>, d: Point<S>) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    let z = S::zero();
    if ((o1 > z && o2 < z) || (o1 < z && o2 > z)) && ((o3 > z && o4 < z) || (o3 < z && o4 > z)) {
        return true;
    }
    (o1 == z && on_segment(a, b, c))
        || (o2 == z && on_segment(a, b, d))
        || (o3 == z && on_segment(c, d, a))
        || (o4 == z && on_segment(c, d, b))
}

/// Even-odd point-in-polygon test; boundary points count as inside.
pub fn contains<S: Real>(poly: &[Point<S>], p: Point<S>) -> bool {
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if orient(a, b, p) == S::zero() && on_segment(a, b, p) {
            return true;
        }
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (poly[i], poly[j]);
        if (pi.x > p.x) != (pj.x > p.x) {
            let t_cross = pi.t + (p.x - pi.x) * (pj.t - pi.t) / (pj.x - pi.x);
            if p.t < t_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Distance from a point to a closed segment.
pub fn point_segment_distance<S: Real>(p: Point<S>, a: Point<S>, b: Point<S>) -> S {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == S::zero() {
        return p.dist(a);
    }
    let s = (p.sub(a).dot(ab) / len2).max(S::zero()).min(S::one());
    p.dist(a.lerp(b, s))
}

/// Distance between a closed polygon (as a region) and a closed segment.
pub fn polygon_segment_distance<S: Real>(poly: &[Point<S>], a: Point<S>, b: Point<S>) -> S {
    if contains(poly, a) || contains(poly, b) {
        return S::zero();
    }
    let n = poly.len();
    let mut d = S::infinity();
    for i in 0..n {
        let (c, e) = (poly[i], poly[(i + 1) % n]);
        if segments_intersect(a, b, c, e) {
            return S::zero();
        }
        d = d
            .min(point_segment_distance(c, a, b))
            .min(point_segment_distance(a, c, e))
            .min(point_segment_distance(b, c, e));
    }
    d
}

/// Distance between two closed polygons.
pub fn polygon_distance<S: Real>(p: &[Point<S>], q: &[Point<S>]) -> S {
    let n = q.len();
    (0..n)
        .map(|i| polygon_segment_distance(p, q[i], q[(i + 1) % n]))
        .fold(S::infinity(), S::min)
        .min(if contains(q, p[0]) { S::zero() } else { S::infinity() })
}

/// Length of the horizontal slice `{x : (t, x) in poly}` of a convex polygon.
///
/// At a bottom or top edge lying on the line the slice is that edge.
pub fn slice_width<S: Real>(poly: &[Point<S>], t: S) -> S {
    slice_range(poly, t).map_or(S::zero(), |(lo, hi)| hi - lo)
}

/// `x` interval of the horizontal slice at time `t`, if it has positive width.
pub fn slice_range<S: Real>(poly: &[Point<S>], t: S) -> Option<(S, S)> {
    let n = poly.len();
    let mut lo = S::infinity();
    let mut hi = S::neg_infinity();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if a.t == t {
            lo = lo.min(a.x);
            hi = hi.max(a.x);
        }
        if (a.t < t && b.t > t) || (a.t > t && b.t < t) {
            let s = (t - a.t) / (b.t - a.t);
            let x = a.x + s * (b.x - a.x);
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    (hi > lo).then_some((lo, hi))
}

/// Intersection area of a polygon with an axis-aligned box (Sutherland–Hodgman).
pub fn clip_area_box<S: Real>(poly: &[Point<S>], t0: S, t1: S, x0: S, x1: S) -> S {
    let mut cur: Vec<Point<S>> = poly.to_vec();
    let planes: [(bool, bool, S); 4] = [(true, true, t0), (true, false, t1), (false, true, x0), (false, false, x1)];
    for (on_t, lower, v) in planes {
        if cur.is_empty() {
            break;
        }
        let inside = |p: &Point<S>| {
            let c = if on_t { p.t } else { p.x };
            if lower {
                c >= v
            } else {
                c <= v
            }
        };
        let coord = |p: &Point<S>| if on_t { p.t } else { p.x };
        let mut out = Vec::with_capacity(cur.len() + 2);
        let n = cur.len();
        for i in 0..n {
            let a = cur[i];
            let b = cur[(i + 1) % n];
            let (ia, ib) = (inside(&a), inside(&b));
            if ia {
                out.push(a);
            }
            if ia != ib {
                let s = (v - coord(&a)) / (coord(&b) - coord(&a));
                out.push(a.lerp(b, s));
            }
        }
        cur = out;
    }
    if cur.len() < 3 {
        S::zero()
    } else {
        signed_area(&cur).abs()
    }
}

/// Closed-set intersection test between a polygon and an axis-aligned box.
pub fn intersects_box<S: Real>(poly: &[Point<S>], t0: S, t1: S, x0: S, x1: S) -> bool {
    let in_box = |p: &Point<S>| p.t >= t0 && p.t <= t1 && p.x >= x0 && p.x <= x1;
    if poly.iter().any(in_box) {
        return true;
    }
    let corners = [Point::new(t0, x0), Point::new(t1, x0), Point::new(t1, x1), Point::new(t0, x1)];
    if corners.iter().any(|c| contains(poly, *c)) {
        return true;
    }
    let n = poly.len();
    for i in 0..n {
        for j in 0..4 {
            if segments_intersect(poly[i], poly[(i + 1) % n], corners[j], corners[(j + 1) % 4]) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Point<f64>> {
        vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 2.0), Point::new(0.0, 2.0)]
    }

    #[test]
    fn shoelace_and_centroid() {
        let sq = square();
        assert_eq!(signed_area(&sq), 2.0);
        let c = centroid(&sq);
        assert!((c.t - 0.5).abs() < 1e-15 && (c.x - 1.0).abs() < 1e-15);
        assert_eq!(perimeter(&sq), 6.0);
        assert!((diameter(&sq) - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn slices_and_containment() {
        let sq = square();
        assert_eq!(slice_width(&sq, 0.0), 2.0);
        assert_eq!(slice_width(&sq, 0.3), 2.0);
        assert!(contains(&sq, Point::new(0.5, 1.0)));
        assert!(contains(&sq, Point::new(0.0, 1.0)));
        assert!(!contains(&sq, Point::new(1.5, 1.0)));
        let trap = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.5), Point::new(1.0, 1.5), Point::new(0.0, 1.0)];
        assert!((slice_width(&trap, 0.5f64) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distances() {
        let sq = square();
        let far = vec![Point::new(3.0, 0.0), Point::new(4.0, 0.0), Point::new(4.0, 1.0), Point::new(3.0, 1.0)];
        assert!((polygon_distance(&sq, &far) - 2.0).abs() < 1e-15);
        assert_eq!(polygon_segment_distance(&sq, Point::new(0.5, 0.5), Point::new(5.0, 5.0)), 0.0);
    }

    #[test]
    fn clipping() {
        let sq = square();
        assert!((clip_area_box(&sq, 0.5, 3.0, 1.0, 3.0) - 0.5).abs() < 1e-15);
        assert!(intersects_box(&sq, 1.0, 2.0, 2.0, 3.0));
        assert!(!intersects_box(&sq, 1.1, 2.0, 2.1, 3.0));
    }

    #[test]
    fn simplicity() {
        assert!(is_simple(&square()));
        let bow = vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert!(!is_simple(&bow));
    }
}
