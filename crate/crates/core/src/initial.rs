//! Initial data as piecewise polynomials with explicit breakpoints, so cell
//! averages and face integrals split at discontinuities and come out exact.

use crate::error::{invalid, Result};
use crate::quadrature::GaussLegendre;
use crate::scalar::{csum, Real};

/// Scalar piecewise polynomial on the real line.
///
/// Piece `i` lives on `[breaks[i], breaks[i+1])` with coefficients in powers
/// of `x - breaks[i]`; outside `[breaks[0], breaks[n]]` the function takes the
/// constant tail values.
#[derive(Clone, Debug, PartialEq)]
pub struct Piecewise<S> {
    breaks: Vec<S>,
    pieces: Vec<Vec<S>>,
    left: S,
    right: S,
}

impl<S: Real> Piecewise<S> {
    pub fn new(breaks: Vec<S>, pieces: Vec<Vec<S>>, left: S, right: S) -> Result<Self> {
        if breaks.is_empty() && !(left == right) {
            return invalid("a piecewise function without breakpoints must have equal tails");
        }
        if !breaks.is_empty() && pieces.len() + 1 != breaks.len() {
            return invalid(format!("{} breakpoints need {} pieces, got {}", breaks.len(), breaks.len() - 1, pieces.len()));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) || breaks.iter().any(|b| !b.is_finite()) {
            return invalid("breakpoints must be finite and strictly increasing");
        }
        if pieces.iter().flatten().any(|c| !c.is_finite()) || !left.is_finite() || !right.is_finite() {
            return invalid("coefficients must be finite");
        }
        Ok(Self { breaks, pieces, left, right })
    }

    pub fn constant(c: S) -> Self {
        Self { breaks: Vec::new(), pieces: Vec::new(), left: c, right: c }
    }

    /// `value` on `[a, b)`, zero elsewhere.
    pub fn indicator(a: S, b: S, value: S) -> Result<Self> {
        Self::new(vec![a, b], vec![vec![value]], S::zero(), S::zero())
    }

    /// Riemann data: `u_l` left of `x0`, `u_r` right of it.
    pub fn riemann(x0: S, u_l: S, u_r: S) -> Self {
        Self { breaks: vec![x0], pieces: Vec::new(), left: u_l, right: u_r }
    }

    /// Constant pieces `values[i]` on `[breaks[i], breaks[i+1])`.
    pub fn steps(breaks: Vec<S>, values: Vec<S>, left: S, right: S) -> Result<Self> {
        Self::new(breaks, values.into_iter().map(|v| vec![v]).collect(), left, right)
    }

    /// Linear ramp from `(a, u_a)` to `(b, u_b)`, constant beyond.
    pub fn ramp(a: S, b: S, u_a: S, u_b: S) -> Result<Self> {
        Self::new(vec![a, b], vec![vec![u_a, (u_b - u_a) / (b - a)]], u_a, u_b)
    }

    pub fn breakpoints(&self) -> &[S] {
        &self.breaks
    }

    pub fn tails(&self) -> (S, S) {
        (self.left, self.right)
    }

    pub fn pieces(&self) -> &[Vec<S>] {
        &self.pieces
    }

    pub fn max_degree(&self) -> usize {
        self.pieces.iter().map(|p| p.len().saturating_sub(1)).max().unwrap_or(0)
    }

    /// Index of the piece containing `x`: `None` for the tails.
    fn locate(&self, x: S) -> Option<usize> {
        let n = self.breaks.len();
        if n == 0 || x < self.breaks[0] || x >= self.breaks[n - 1] {
            return None;
        }
        Some(self.breaks.partition_point(|&b| b <= x) - 1)
    }

    /// Right-continuous evaluation.
    pub fn eval(&self, x: S) -> S {
        match self.locate(x) {
            Some(i) => horner(&self.pieces[i], x - self.breaks[i]),
            None if self.breaks.is_empty() || x < self.breaks[0] => self.left,
            None => self.right,
        }
    }

    /// `∫_a^b u dx`, exact.
    pub fn integral(&self, a: S, b: S) -> S {
        if b < a {
            return -self.integral(b, a);
        }
        let mut acc = Vec::new();
        self.for_each_span(a, b, |lo, hi, piece| {
            acc.push(match piece {
                Span::Tail(v) => v * (hi - lo),
                Span::Poly(i) => {
                    let x0 = self.breaks[i];
                    antiderivative(&self.pieces[i], hi - x0) - antiderivative(&self.pieces[i], lo - x0)
                }
            });
        });
        csum(acc)
    }

    /// Mean over `[a, b]`; exactly the constant when `[a, b]` lies in one constant span.
    pub fn average(&self, a: S, b: S) -> S {
        let mut spans = Vec::new();
        self.for_each_span(a, b, |_, _, s| spans.push(s));
        if let [only] = spans.as_slice() {
            match *only {
                Span::Tail(v) => return v,
                Span::Poly(i) if self.pieces[i].len() == 1 => return self.pieces[i][0],
                _ => {}
            }
        }
        self.integral(a, b) / (b - a)
    }

    /// Splits `[a, b]` at breakpoints and hands each smooth span to `f`.
    fn for_each_span<F: FnMut(S, S, Span<S>)>(&self, a: S, b: S, mut f: F) {
        if !(b > a) {
            return;
        }
        let n = self.breaks.len();
        if n == 0 {
            f(a, b, Span::Tail(self.left));
            return;
        }
        let mut lo = a;
        if lo < self.breaks[0] {
            let hi = b.min(self.breaks[0]);
            f(lo, hi, Span::Tail(self.left));
            lo = hi;
        }
        for i in 0..n.saturating_sub(1) {
            let (x0, x1) = (self.breaks[i], self.breaks[i + 1]);
            if lo >= b {
                return;
            }
            if x1 <= lo {
                continue;
            }
            let hi = b.min(x1);
            f(lo.max(x0), hi, Span::Poly(i));
            lo = hi;
        }
        if lo < b {
            f(lo.max(self.breaks[n - 1]), b, Span::Tail(self.right));
        }
    }

    /// Smooth sub-intervals of `[a, b]` (split at breakpoints).
    pub fn spans(&self, a: S, b: S) -> Vec<(S, S)> {
        let mut out = Vec::new();
        self.for_each_span(a, b, |lo, hi, _| out.push((lo, hi)));
        out
    }

    /// Points in `(a, b)` where `u - level` changes sign (including jumps across it).
    pub fn crossings(&self, level: S, a: S, b: S) -> Vec<S> {
        const SAMPLES: usize = 32;
        let mut out = Vec::new();
        let mut prev: Option<bool> = None;
        self.for_each_span(a, b, |lo, hi, span| {
            let g = |x: S| self.eval_span(&span, x) - level;
            let mut last = g(lo) > S::zero();
            if prev.is_some_and(|p| p != last) {
                out.push(lo);
            }
            if let Span::Poly(_) = span {
                let mut x_prev = lo;
                for k in 1..=SAMPLES {
                    let x = lo + (hi - lo) * S::from_usize_(k) / S::from_usize_(SAMPLES);
                    let here = g(x) > S::zero();
                    if here != last {
                        out.push(bisect(&g, x_prev, x));
                        last = here;
                    }
                    x_prev = x;
                }
            }
            prev = Some(last);
        });
        out.retain(|&x| x > a && x < b);
        out.dedup();
        out
    }

    fn eval_span(&self, span: &Span<S>, x: S) -> S {
        match *span {
            Span::Tail(v) => v,
            Span::Poly(i) => horner(&self.pieces[i], x - self.breaks[i]),
        }
    }

    /// Bounds of `u` over the whole line (tails included).
    pub fn range(&self) -> (S, S) {
        let mut lo = self.left.min(self.right);
        let mut hi = self.left.max(self.right);
        for (i, p) in self.pieces.iter().enumerate() {
            let (x0, x1) = (self.breaks[i], self.breaks[i + 1]);
            let samples = if p.len() <= 2 { 1 } else { 256 };
            for k in 0..=samples {
                let x = (x1 - x0) * S::from_usize_(k) / S::from_usize_(samples);
                let v = horner(p, x);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    /// `∫_a^b g(x, u(x)) dx`, Gauss-Legendre on each smooth span, split
    /// further at `extra` points (kinks of `g`).
    pub fn integrate_with<G: FnMut(S, S) -> S>(
        &self,
        a: S,
        b: S,
        extra: &[S],
        rule: &GaussLegendre<S>,
        segments: usize,
        mut g: G,
    ) -> S {
        let mut cuts: Vec<S> = extra.iter().copied().filter(|&x| x > a && x < b).collect();
        cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let mut acc = Vec::new();
        self.for_each_span(a, b, |lo, hi, span| {
            let mut pts = vec![lo];
            pts.extend(cuts.iter().copied().filter(|&x| x > lo && x < hi));
            pts.push(hi);
            for w in pts.windows(2) {
                acc.push(rule.integrate(w[0], w[1], segments, |x| g(x, self.eval_span(&span, x))));
            }
        });
        csum(acc)
    }
}

enum Span<S> {
    Tail(S),
    Poly(usize),
}

fn bisect<S: Real, G: Fn(S) -> S>(g: &G, mut lo: S, mut hi: S) -> S {
    let s_lo = g(lo) > S::zero();
    for _ in 0..200 {
        let mid = (lo + hi) * S::half();
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) > S::zero()) == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * S::half()
}

fn horner<S: Real>(c: &[S], x: S) -> S {
    c.iter().rev().fold(S::zero(), |acc, &v| acc * x + v)
}

fn antiderivative<S: Real>(c: &[S], x: S) -> S {
    c.iter()
        .enumerate()
        .rev()
        .fold(S::zero(), |acc, (k, &v)| acc * x + v / S::from_usize_(k + 1))
        * x
}

/// `R^m`-valued initial data, one piecewise polynomial per component.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialData<S> {
    components: Vec<Piecewise<S>>,
}

impl<S: Real> InitialData<S> {
    pub fn new(components: Vec<Piecewise<S>>) -> Result<Self> {
        if components.is_empty() {
            return invalid("initial data needs at least one component");
        }
        Ok(Self { components })
    }

    pub fn scalar(p: Piecewise<S>) -> Self {
        Self { components: vec![p] }
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &Piecewise<S> {
        &self.components[i]
    }

    pub fn eval(&self, x: S, out: &mut [S]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(x);
        }
    }

    pub fn integral(&self, a: S, b: S, out: &mut [S]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.integral(a, b);
        }
    }

    /// All breakpoints of all components, sorted.
    pub fn breakpoints(&self) -> Vec<S> {
        let mut v: Vec<S> = self.components.iter().flat_map(|c| c.breakpoints().iter().copied()).collect();
        v.sort_by(|p, q| p.partial_cmp(q).unwrap());
        v.dedup();
        v
    }

    /// `∫ |u| dx` over `[a, b]` (first component).
    pub fn l1_norm(&self, a: S, b: S) -> S {
        let p = &self.components[0];
        let mut cuts = p.crossings(S::zero(), a, b);
        cuts.insert(0, a);
        cuts.push(b);
        csum(cuts.windows(2).map(|w| p.integral(w[0], w[1]).abs()))
    }
}
