//! Reference solutions and the `L¹` distance to them.

use crate::error::{invalid, Result};
use crate::initial::Piecewise;
use crate::quadrature::GaussLegendre;
use crate::scalar::{csum, Real};
use crate::solver::ProfileCell;

/// A function of `x` at a fixed time.
pub trait Profile<S: Real>: Sync {
    fn value(&self, x: S) -> S;
    /// Points where the profile is not smooth.
    fn breakpoints(&self) -> Vec<S> {
        Vec::new()
    }
}

/// Riemann problems and the trivial problem, each with its exact solution.
#[derive(Clone, Debug, PartialEq)]
pub enum ExactProblem<S> {
    /// Burgers with `u_l > u_r`, jump at `x0`.
    BurgersShock { u_l: S, u_r: S, x0: S },
    /// Burgers with `u_l < u_r`, fan centred at `x0`.
    BurgersRarefaction { u_l: S, u_r: S, x0: S },
    /// `u_t + c u_x = 0`.
    Advection { c: S, u0: Piecewise<S> },
    /// `u_t = 0` with `u0 = χ_[0,1]`.
    TrivialIndicator,
}

#[derive(Clone, Debug)]
pub struct ExactReference<S> {
    problem: ExactProblem<S>,
}

pub fn exact_reference<S: Real>(problem: ExactProblem<S>) -> Result<ExactReference<S>> {
    match problem {
        ExactProblem::BurgersShock { u_l, u_r, .. } if !(u_l > u_r) => {
            return invalid(format!("a Burgers shock needs u_l > u_r, got ({u_l}, {u_r})"))
        }
        ExactProblem::BurgersRarefaction { u_l, u_r, .. } if !(u_l < u_r) => {
            return invalid(format!("a Burgers rarefaction needs u_l < u_r, got ({u_l}, {u_r})"))
        }
        _ => {}
    }
    Ok(ExactReference { problem })
}

impl<S: Real> ExactReference<S> {
    pub fn problem(&self) -> &ExactProblem<S> {
        &self.problem
    }

    /// Shock speed, for the shock problem.
    pub fn shock_speed(&self) -> Option<S> {
        match self.problem {
            ExactProblem::BurgersShock { u_l, u_r, .. } => Some((u_l + u_r) * S::half()),
            _ => None,
        }
    }

    /// Initial data of the problem.
    pub fn initial(&self) -> Piecewise<S> {
        match &self.problem {
            ExactProblem::BurgersShock { u_l, u_r, x0 } | ExactProblem::BurgersRarefaction { u_l, u_r, x0 } => {
                Piecewise::riemann(*x0, *u_l, *u_r)
            }
            ExactProblem::Advection { u0, .. } => u0.clone(),
            ExactProblem::TrivialIndicator => {
                Piecewise::indicator(S::zero(), S::one(), S::one()).expect("valid indicator")
            }
        }
    }

    pub fn eval(&self, t: S, x: S) -> S {
        match &self.problem {
            ExactProblem::BurgersShock { u_l, u_r, x0 } => {
                if x < *x0 + self.shock_speed().expect("shock") * t {
                    *u_l
                } else {
                    *u_r
                }
            }
            ExactProblem::BurgersRarefaction { u_l, u_r, x0 } => {
                let xi = x - *x0;
                if xi <= *u_l * t {
                    *u_l
                } else if xi >= *u_r * t {
                    *u_r
                } else {
                    xi / t
                }
            }
            ExactProblem::Advection { c, u0 } => u0.eval(x - *c * t),
            ExactProblem::TrivialIndicator => {
                if x >= S::zero() && x < S::one() {
                    S::one()
                } else {
                    S::zero()
                }
            }
        }
    }

    pub fn breakpoints(&self, t: S) -> Vec<S> {
        match &self.problem {
            ExactProblem::BurgersShock { x0, .. } => vec![*x0 + self.shock_speed().expect("shock") * t],
            ExactProblem::BurgersRarefaction { u_l, u_r, x0 } => vec![*x0 + *u_l * t, *x0 + *u_r * t],
            ExactProblem::Advection { c, u0 } => u0.breakpoints().iter().map(|&b| b + *c * t).collect(),
            ExactProblem::TrivialIndicator => vec![S::zero(), S::one()],
        }
    }

    pub fn at(&self, t: S) -> Snapshot<'_, S> {
        Snapshot { reference: self, t }
    }
}

/// An exact reference frozen at time `t`.
pub struct Snapshot<'a, S> {
    reference: &'a ExactReference<S>,
    t: S,
}

impl<S: Real> Profile<S> for Snapshot<'_, S> {
    fn value(&self, x: S) -> S {
        self.reference.eval(self.t, x)
    }
    fn breakpoints(&self) -> Vec<S> {
        self.reference.breakpoints(self.t)
    }
}

/// `u0` convolved with a Gaussian of variance `t / (4h)`.
///
/// Each double step of staggered Lax-Friedrichs applies the weights
/// `1/4, 1/2, 1/4` at spacing `h`, variance `h²/2` per time `2h³`; after time
/// `t` that is `t / (4h)`.
#[derive(Clone, Debug)]
pub struct SmoothedReference<S> {
    pub sigma: S,
    u0: Piecewise<S>,
}

pub fn smoothed_reference<S: Real>(t: S, h: S, u0: &Piecewise<S>) -> Result<SmoothedReference<S>> {
    if !(t > S::zero()) || !(h > S::zero()) {
        return invalid(format!("smoothed reference needs t, h > 0, got t = {t}, h = {h}"));
    }
    if u0.max_degree() > 0 {
        return invalid("smoothed reference is implemented for piecewise-constant data");
    }
    Ok(SmoothedReference { sigma: (t / (S::lit(4.0) * h)).sqrt(), u0: u0.clone() })
}

impl<S: Real> SmoothedReference<S> {
    /// Normal CDF with standard deviation `sigma`.
    fn cdf(&self, z: S) -> S {
        S::half() * (S::one() + (z / (self.sigma * S::SQRT_2())).erf())
    }
}

impl<S: Real> Profile<S> for SmoothedReference<S> {
    fn value(&self, x: S) -> S {
        let b = self.u0.breakpoints();
        let (left, right) = self.u0.tails();
        if b.is_empty() {
            return left;
        }
        let mut terms = vec![left * (S::one() - self.cdf(x - b[0])), right * self.cdf(x - b[b.len() - 1])];
        for (i, p) in self.u0.pieces().iter().enumerate() {
            let v = p.first().copied().unwrap_or(S::zero());
            terms.push(v * (self.cdf(x - b[i]) - self.cdf(x - b[i + 1])));
        }
        csum(terms)
    }
}

/// `Σ_C ∫_{[x0,x1] ∩ window} |u_C - ref(x)| dx`, four 4-point Gauss panels per
/// piece, pieces split at the reference breakpoints.
pub fn l1_distance<S: Real>(profile: &[ProfileCell<S>], reference: &dyn Profile<S>, window: (S, S)) -> S {
    let gauss = GaussLegendre::new(4);
    let breaks = reference.breakpoints();
    csum(profile.iter().filter_map(|c| {
        let (lo, hi) = (c.x0.max(window.0), c.x1.min(window.1));
        if !(hi > lo) {
            return None;
        }
        let mut pts: Vec<S> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
        pts.push(lo);
        pts.push(hi);
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let u = c.value[0];
        Some(csum(pts.windows(2).map(|w| gauss.integrate(w[0], w[1], 4, |x| (u - reference.value(x)).abs()))))
    }))
}

/// A piecewise-constant profile as a reference.
impl<S: Real> Profile<S> for Vec<ProfileCell<S>> {
    fn value(&self, x: S) -> S {
        let i = self.partition_point(|c| c.x1 <= x).min(self.len().saturating_sub(1));
        self.get(i).map_or(S::zero(), |c| c.value[0])
    }
    fn breakpoints(&self) -> Vec<S> {
        self.iter().map(|c| c.x0).chain(self.last().map(|c| c.x1)).collect()
    }
}

/// `Piecewise` data as a reference.
impl<S: Real> Profile<S> for Piecewise<S> {
    fn value(&self, x: S) -> S {
        self.eval(x)
    }
    fn breakpoints(&self) -> Vec<S> {
        Piecewise::breakpoints(self).to_vec()
    }
}
