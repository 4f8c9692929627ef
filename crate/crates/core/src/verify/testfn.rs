use crate::error::{invalid, Result};
use crate::geometry::Point;
use crate::scalar::Real;

/// Smooth bump `amplitude exp(-1 / (1 - r^2))` with `r = |y - center| / radius`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestFunction<S> {
    pub center: Point<S>,
    pub radius: S,
    pub amplitude: S,
}

impl<S: Real> TestFunction<S> {
    pub fn bump(center: Point<S>, radius: S, amplitude: S) -> Result<Self> {
        if !(radius > S::zero()) || !radius.is_finite() {
            return invalid(format!("test function radius must be positive, got {radius}"));
        }
        if !(amplitude >= S::zero()) || !amplitude.is_finite() {
            return invalid(format!("test function amplitude must be nonnegative, got {amplitude}"));
        }
        Ok(Self { center, radius, amplitude })
    }

    fn rho2(&self, y: Point<S>) -> S {
        let d = y.sub(self.center);
        (d.t * d.t + d.x * d.x) / (self.radius * self.radius)
    }

    pub fn value(&self, y: Point<S>) -> S {
        let r2 = self.rho2(y);
        if r2 >= S::one() {
            return S::zero();
        }
        self.amplitude * (-S::one() / (S::one() - r2)).exp()
    }

    /// `(d/dt, d/dx)`.
    pub fn gradient(&self, y: Point<S>) -> Point<S> {
        let r2 = self.rho2(y);
        if r2 >= S::one() {
            return Point::new(S::zero(), S::zero());
        }
        let q = S::one() - r2;
        let k = -S::two() * self.value(y) / (q * q * self.radius * self.radius);
        y.sub(self.center).scale(k)
    }

    /// `(t0, t1, x0, x1)` of the support.
    pub fn bbox(&self) -> (S, S, S, S) {
        let (c, r) = (self.center, self.radius);
        (c.t - r, c.t + r, c.x - r, c.x + r)
    }

    /// Slice of the support on the line `t = t0`, if any.
    pub fn slice(&self, t0: S) -> Option<(S, S)> {
        let dt = t0 - self.center.t;
        let w2 = self.radius * self.radius - dt * dt;
        (w2 > S::zero()).then(|| {
            let w = w2.sqrt();
            (self.center.x - w, self.center.x + w)
        })
    }
}

/// Fixed battery on the slab `[0, t_end] x [x_lo, x_hi]`: five bumps on a
/// diagonal through the interior and two centred on `t = 0`.
///
/// `s = min(t_end, (x_hi - x_lo) / 2)` sets the radii, so every interior bump
/// stays inside the slab.
pub fn default_battery<S: Real>(t_end: S, x_lo: S, x_hi: S) -> Vec<TestFunction<S>> {
    let w = x_hi - x_lo;
    let s = t_end.min(w * S::half());
    let l = S::lit;
    let mut out: Vec<TestFunction<S>> = (0..5)
        .map(|k| {
            let k = S::from_usize_(k);
            TestFunction {
                center: Point::new(t_end * (l(0.45) + l(0.025) * k), x_lo + w * (l(0.3) + l(0.1) * k)),
                radius: s * (l(0.4) - l(0.0625) * k),
                amplitude: S::one(),
            }
        })
        .collect();
    for f in [0.35, 0.65] {
        out.push(TestFunction { center: Point::new(S::zero(), x_lo + w * l(f)), radius: s * l(0.2), amplitude: S::one() });
    }
    out
}
