//! Convergence studies over a sequence of mesh widths.

use super::reference::{exact_reference, l1_distance, smoothed_reference, ExactProblem, Profile};
use super::residual::{residual_report, ResidualContext, ResidualReport};
use super::testfn::{default_battery, TestFunction};
use crate::error::{invalid, Error, Result};
use crate::geometry::Point;
use crate::grid::{build_staggered_grid, build_uniform_grid, GridFamily, GridFunction, SpaceTimeGrid};
use crate::initial::{InitialData, Piecewise};
use crate::model::{Advection, Burgers, PhysicalModel, Trivial};
use crate::numerics::{lf_scheme, staggered_lf_scheme};
use crate::quadrature::FaceQuadrature;
use crate::scalar::Real;
use crate::solver::{layer_profile, march, march_periodic, ProfileCell};

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind<S> {
    Burgers,
    Advection { c: S },
    Trivial,
}

/// Time step as a function of the mesh width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeStep<S> {
    Fixed(S),
    /// `dt = c h`
    Linear(S),
    /// `dt = c h^3`
    Cubic(S),
}

impl<S: Real> TimeStep<S> {
    pub fn dt(self, h: S) -> S {
        match self {
            TimeStep::Fixed(c) => c,
            TimeStep::Linear(c) => c * h,
            TimeStep::Cubic(c) => c * h * h * h,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SchemeKind<S> {
    LaxFriedrichs { lambda: S },
    StaggeredLf { step: TimeStep<S> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReferenceKind<S> {
    Exact(ExactProblem<S>),
    /// Heat-kernel smoothing of `u0` (staggered scheme only).
    Smoothed,
}

/// One experiment; `convergence_study` runs it for several `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment<S> {
    pub name: String,
    pub model: ModelKind<S>,
    pub scheme: SchemeKind<S>,
    pub u0: Piecewise<S>,
    pub t_end: S,
    pub x_lo: S,
    pub x_hi: S,
    /// `x` window of the `L¹` error.
    pub window: (S, S),
    pub reference: Option<ReferenceKind<S>>,
    /// Exact solution reported next to `reference` (distance only, no rate).
    pub truth: Option<ExactProblem<S>>,
    /// Kruzkov levels for entropy residuals.
    pub entropy_levels: Vec<S>,
    /// Evaluate weak and entropy residuals over the battery.
    pub residuals: bool,
    /// `None` uses `default_battery` over `[0, t_end] x window`.
    pub battery: Option<Vec<TestFunction<S>>>,
    pub quadrature: FaceQuadrature,
}

impl<S: Real> Experiment<S> {
    pub fn new(name: &str, model: ModelKind<S>, scheme: SchemeKind<S>, u0: Piecewise<S>, t_end: S, x: (S, S)) -> Self {
        Self {
            name: name.into(),
            model,
            scheme,
            u0,
            t_end,
            x_lo: x.0,
            x_hi: x.1,
            window: x,
            reference: None,
            truth: None,
            entropy_levels: Vec::new(),
            residuals: false,
            battery: None,
            quadrature: FaceQuadrature::default(),
        }
    }

    pub fn battery(&self) -> Vec<TestFunction<S>> {
        self.battery.clone().unwrap_or_else(|| default_battery(self.t_end, self.window.0, self.window.1))
    }

    /// The physical model, with an admissible box padded around the data range.
    pub fn build_model(&self) -> Result<Box<dyn PhysicalModel<S>>> {
        let (lo, hi) = self.u0.range();
        let pad = S::lit(0.5) * (hi - lo) + S::lit(0.5);
        let (lo, hi) = (lo - pad, hi + pad);
        Ok(match self.model {
            ModelKind::Burgers => Box::new(Burgers::new(lo, hi)?),
            ModelKind::Advection { c } => Box::new(Advection::new(c, lo, hi)?),
            ModelKind::Trivial => Box::new(Trivial::new(lo, hi)?),
        })
    }

    /// Runs the experiment at mesh width `h`.
    pub fn run(&self, h: S) -> Result<Run<S>> {
        let model = self.build_model()?;
        let u0 = InitialData::scalar(self.u0.clone());
        match self.scheme {
            SchemeKind::LaxFriedrichs { lambda } => self.run_lf(h, lambda, model.as_ref(), &u0),
            SchemeKind::StaggeredLf { step } => self.run_staggered(h, step.dt(h), model.as_ref(), &u0),
        }
    }

    fn run_lf(&self, h: S, lambda: S, model: &dyn PhysicalModel<S>, u0: &InitialData<S>) -> Result<Run<S>> {
        // one extra layer so that a layer starts exactly at t_end
        let n = (self.t_end / (lambda * h)).round().max(S::one());
        let t_grid = self.t_end * (n + S::one()) / n;
        let grid = build_uniform_grid(h, self.t_end / (n * h), t_grid, self.x_lo, self.x_hi)?;
        let GridFamily::Uniform { lambda: lg, .. } = grid.family else { unreachable!() };
        let scheme = lf_scheme(model, &grid, u0, lg)?;
        let result = march(&scheme)?;
        let nl = n.to_usize().expect("layer count");
        let t_report = grid.layer_times[nl];
        let profile = layer_profile(&grid, &result.solution, t_report);
        let (fl, fr) = self.tail_fluxes(model);
        let drift = grid
            .layer_times
            .iter()
            .zip(&result.per_layer_mass)
            .map(|(&t, &m)| (m - result.per_layer_mass[0] - t * (fl - fr)).abs())
            .fold(S::zero(), S::max);
        let residuals = if self.residuals {
            let ctx = ResidualContext::new(&grid, model, u0, &result.solution)
                .excluding(&result.flagged)
                .with_quadrature(self.quadrature);
            Some(residual_report(&ctx, &self.battery(), &self.entropy_levels)?)
        } else {
            None
        };
        let quasi_ratio = grid.metrics().quasi_ratio;
        drop(scheme);
        Ok(Run {
            h,
            h_max: grid.metrics().h_max,
            quasi_ratio,
            t_report,
            profile,
            mass_drift: drift,
            residuals,
            solution: Some(result.solution),
            grid,
        })
    }

    fn run_staggered(&self, h: S, dt: S, model: &dyn PhysicalModel<S>, u0: &InitialData<S>) -> Result<Run<S>> {
        if self.residuals && !self.entropy_levels.is_empty() {
            return invalid("staggered runs do not evaluate entropy residuals");
        }
        let pairs = (self.t_end / (S::two() * dt)).round();
        if !(pairs >= S::one()) {
            return invalid(format!("t_end {} is shorter than two steps of {dt}", self.t_end));
        }
        let repeats = pairs.to_usize().expect("step count");
        let dt = self.t_end / (S::two() * pairs);
        let long = repeats > 64;
        let grid = if long {
            // even, odd, even: layer 2 repeats layer 0
            build_staggered_grid(h, dt, S::lit(3.0) * dt, self.x_lo, self.x_hi)?
        } else {
            build_staggered_grid(h, dt, self.t_end + dt, self.x_lo, self.x_hi)?
        };
        let scheme = staggered_lf_scheme(model, &grid, u0)?;
        let metrics = grid.metrics();
        let (profile, drift, solution, residuals) = if long {
            if self.residuals {
                return invalid(format!(
                    "{repeats} double steps are marched periodically; residuals need the full grid"
                ));
            }
            let (u, mass) = march_periodic(&scheme, 2, repeats)?;
            let drift = mass.iter().map(|&m| (m - mass[0]).abs()).fold(S::zero(), S::max);
            (layer_profile(&grid, &u, grid.layer_times[0]), drift, None, None)
        } else {
            let r = march(&scheme)?;
            let res = if self.residuals {
                let ctx = ResidualContext::new(&grid, model, u0, &r.solution)
                    .excluding(&r.flagged)
                    .with_quadrature(self.quadrature);
                Some(residual_report(&ctx, &self.battery(), &[])?)
            } else {
                None
            };
            let p = layer_profile(&grid, &r.solution, grid.layer_times[2 * repeats]);
            (p, r.mass_drift(), Some(r.solution), res)
        };
        drop(scheme);
        Ok(Run {
            h,
            h_max: metrics.h_max,
            quasi_ratio: metrics.quasi_ratio,
            t_report: self.t_end,
            profile,
            mass_drift: drift,
            residuals,
            solution,
            grid,
        })
    }

    fn tail_fluxes(&self, model: &dyn PhysicalModel<S>) -> (S, S) {
        let (l, r) = self.u0.tails();
        let (mut fl, mut fr) = ([S::zero()], [S::zero()]);
        model.flux(&[l], Point::new(S::zero(), self.x_lo), &mut fl);
        model.flux(&[r], Point::new(S::zero(), self.x_hi), &mut fr);
        (fl[0], fr[0])
    }

    /// `L¹` error of a run against the experiment's reference.
    pub fn l1_error(&self, run: &Run<S>) -> Result<Option<S>> {
        let Some(reference) = &self.reference else {
            return Ok(None);
        };
        Ok(Some(match reference {
            ReferenceKind::Exact(p) => {
                let r = exact_reference(p.clone())?;
                l1_distance(&run.profile, &r.at(self.t_end), self.window)
            }
            ReferenceKind::Smoothed => {
                let r = smoothed_reference(self.t_end, run.h, &self.u0)?;
                l1_distance(&run.profile, &r as &dyn Profile<S>, self.window)
            }
        }))
    }
}

/// Output of one experiment run.
pub struct Run<S: Real> {
    pub h: S,
    pub h_max: S,
    pub quasi_ratio: S,
    /// Time of `profile`.
    pub t_report: S,
    pub profile: Vec<ProfileCell<S>>,
    /// Largest deviation of the slab mass from the initial mass plus the
    /// lateral inflow.
    pub mass_drift: S,
    pub residuals: Option<ResidualReport<S>>,
    /// Full solution; `None` for periodic marches.
    pub solution: Option<GridFunction<S>>,
    pub grid: SpaceTimeGrid<S>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow<S> {
    pub h: S,
    pub h_max: S,
    pub quasi_ratio: S,
    pub l1_error: Option<S>,
    /// `L¹` distance to `Experiment::truth`.
    pub l1_truth: Option<S>,
    pub residuals: Option<ResidualReport<S>>,
    pub mass_drift: S,
    /// `log2(e_{k-1} / e_k)` of the `L¹` error.
    pub rate: Option<S>,
}

impl<S: Real> StudyRow<S> {
    pub fn max_weak(&self) -> Option<S> {
        self.residuals.as_ref().map(|r| r.max_weak())
    }

    pub fn max_entropy(&self) -> Option<S> {
        self.residuals.as_ref().and_then(|r| r.max_entropy())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable<S> {
    pub experiment: String,
    pub rows: Vec<StudyRow<S>>,
    pub battery: Vec<TestFunction<S>>,
}

impl<S: Real> ConvergenceTable<S> {
    pub fn errors(&self) -> Vec<Option<S>> {
        self.rows.iter().map(|r| r.l1_error).collect()
    }
}

/// Runs `exp` for each `h`; the sequence must halve.
pub fn convergence_study<S: Real>(exp: &Experiment<S>, hs: &[S]) -> Result<ConvergenceTable<S>> {
    if hs.len() < 3 {
        return invalid(format!("a convergence study needs at least 3 mesh widths, got {}", hs.len()));
    }
    for w in hs.windows(2) {
        if ((w[0] / w[1]) - S::two()).abs() > S::lit(1e-9) {
            return invalid(format!("mesh widths must halve: {} -> {}", w[0], w[1]));
        }
    }
    let mut rows: Vec<StudyRow<S>> = Vec::with_capacity(hs.len());
    for &h in hs {
        let run = exp.run(h).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::InvalidArgument(format!("h = {h}: {m}")),
            Error::Support(m) => Error::Support(format!("h = {h}: {m}")),
            Error::Incompatible(m) => Error::Incompatible(format!("h = {h}: {m}")),
            Error::Internal(m) => Error::Internal(format!("h = {h}: {m}")),
            other => other,
        })?;
        let l1 = exp.l1_error(&run)?;
        let l1_truth = match &exp.truth {
            Some(p) => Some(l1_distance(&run.profile, &exact_reference(p.clone())?.at(exp.t_end), exp.window)),
            None => None,
        };
        let rate = match (rows.last().and_then(|r| r.l1_error), l1) {
            (Some(prev), Some(cur)) if cur > S::zero() => Some((prev / cur).log2()),
            _ => None,
        };
        rows.push(StudyRow {
            h,
            h_max: run.h_max,
            quasi_ratio: run.quasi_ratio,
            l1_error: l1,
            l1_truth,
            residuals: run.residuals,
            mass_drift: run.mass_drift,
            rate,
        });
    }
    Ok(ConvergenceTable { experiment: exp.name.clone(), rows, battery: exp.battery() })
}

/// The Burgers shock study: LF, `λ = 0.5`, Riemann data `(1, 0)` at `x = 0`,
/// `t = 0.5` on `[-2, 3]`, error window `[-0.5, 1.5]`.
pub fn burgers_shock_experiment<S: Real>() -> Experiment<S> {
    let l = S::lit;
    let mut e = Experiment::new(
        "lax_friedrichs_shock",
        ModelKind::Burgers,
        SchemeKind::LaxFriedrichs { lambda: l(0.5) },
        Piecewise::riemann(S::zero(), S::one(), S::zero()),
        l(0.5),
        (l(-2.0), l(3.0)),
    );
    e.window = (l(-0.5), l(1.5));
    e.reference = Some(ReferenceKind::Exact(ExactProblem::BurgersShock { u_l: S::one(), u_r: S::zero(), x0: S::zero() }));
    e.entropy_levels = [-1.0, -0.5, 0.0, 0.5, 1.0].into_iter().map(l).collect();
    e.residuals = true;
    e
}

/// Expansion data `(0, 1)` under LF; the reference is the rarefaction.
pub fn burgers_expansion_experiment<S: Real>() -> Experiment<S> {
    let mut e = burgers_shock_experiment();
    e.name = "lax_friedrichs_rarefaction".into();
    e.u0 = Piecewise::riemann(S::zero(), S::zero(), S::one());
    e.reference =
        Some(ReferenceKind::Exact(ExactProblem::BurgersRarefaction { u_l: S::zero(), u_r: S::one(), x0: S::zero() }));
    e
}

/// Staggered LF on `u_t = 0`, `u0 = χ_[0,1]`, `dt = h^3`, `t = 1`, compared
/// with the heat-kernel smoothing.
pub fn counterexample_experiment<S: Real>() -> Experiment<S> {
    let l = S::lit;
    let mut e = Experiment::new(
        "counterexample",
        ModelKind::Trivial,
        SchemeKind::StaggeredLf { step: TimeStep::Cubic(S::one()) },
        Piecewise::indicator(S::zero(), S::one(), S::one()).expect("indicator"),
        S::one(),
        (l(-25.0), l(26.0)),
    );
    e.reference = Some(ReferenceKind::Smoothed);
    e.truth = Some(ExactProblem::TrivialIndicator);
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sequences() {
        let e = burgers_shock_experiment::<f64>();
        assert!(convergence_study(&e, &[0.04, 0.02]).is_err());
        assert!(convergence_study(&e, &[0.04, 0.03, 0.015]).is_err());
    }

    #[test]
    fn time_steps() {
        assert_eq!(TimeStep::Cubic(1.0).dt(0.1), 0.1 * 0.1 * 0.1);
        assert_eq!(TimeStep::Linear(0.5).dt(0.1), 0.05);
        assert_eq!(TimeStep::Fixed(0.2).dt(0.1), 0.2);
    }

    #[test]
    fn trivial_problem_converges_slowly() {
        let l = 0.5;
        let mut e = Experiment::new(
            "trivial",
            ModelKind::Trivial,
            SchemeKind::LaxFriedrichs { lambda: l },
            Piecewise::indicator(0.0, 1.0, 1.0).unwrap(),
            0.5,
            (-2.0, 3.0),
        );
        e.reference = Some(ReferenceKind::Exact(ExactProblem::TrivialIndicator));
        e.window = (-0.5, 1.5);
        let t = convergence_study(&e, &[0.04, 0.02, 0.01]).unwrap();
        for r in &t.rows[1..] {
            assert!(r.rate.unwrap() >= 0.4, "{:?}", r.rate);
        }
        assert!(t.rows.iter().all(|r| r.mass_drift < 1e-12));
    }

    #[test]
    fn shock_residuals_and_errors_fall() {
        let e = burgers_shock_experiment::<f64>();
        let t = convergence_study(&e, &[0.04, 0.02, 0.01]).unwrap();
        let weak: Vec<f64> = t.rows.iter().map(|r| r.max_weak().unwrap()).collect();
        assert!(weak.windows(2).all(|w| w[1] < w[0]), "{weak:?}");
        for r in &t.rows {
            assert!(r.mass_drift < 1e-12, "{}", r.mass_drift);
            assert!(r.residuals.as_ref().unwrap().refinement_defect < 1e-10);
        }
        // deterministic
        let again = convergence_study(&e, &[0.04, 0.02, 0.01]).unwrap();
        assert_eq!(t, again);
    }
}
