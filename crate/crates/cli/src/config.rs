//! Experiment configuration: the typed view of an INI file.
//!
//! The grammar is documented in `docs/config.md`.

use std::path::PathBuf;

use stlw_core::grid::RefineRegion;
use stlw_core::initial::Piecewise;
use stlw_core::numerics::Reconstruction;
use stlw_core::verify::{ExactProblem, TimeStep};

use crate::error::{CliError, Result};
use crate::ini::{self, Entry, Ini, Section};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Uniform,
    Staggered,
    LocalTimestep,
    MovingVertex,
    Remap,
    Perturbed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeName {
    LaxFriedrichs,
    StaggeredLf,
    SpacetimeLf,
}

/// `Biased` plants a conservation fault in the audited flux.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FluxVariant {
    Exact,
    Biased,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelSpec {
    Burgers,
    Advection { c: f64 },
    Trivial,
    /// Burgers in similarity variables with source `-d u`.
    Selfsimilar { d: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RemapSpec {
    pub t: f64,
    /// New cells per old cell; the count scales with `1 / h`.
    pub ratio: f64,
    /// New breakpoints at `x_lo + W (i / n)^grading`.
    pub grading: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub family: Family,
    /// Strictly decreasing.
    pub hs: Vec<f64>,
    pub lambda: f64,
    pub dt: Option<TimeStep<f64>>,
    pub refine: Option<RefineRegion<f64>>,
    /// Vertex velocity `amp sin(pi (x - x_lo) / W)`.
    pub velocity: f64,
    pub remap: Option<RemapSpec>,
    pub perturbation: f64,
    pub triangulate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeSpec {
    pub name: SchemeName,
    pub flux: FluxVariant,
    /// Numerical viscosity of the space-time scheme; `1 / lambda` if unset.
    pub alpha: Option<f64>,
    pub reconstruction: Reconstruction,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Reference {
    Exact(ExactProblem<f64>),
    Smoothed,
}

/// Checks applied to a finished run; `--assert` turns failures into a
/// nonzero exit.
#[derive(Clone, Debug, PartialEq)]
pub enum Assertion {
    FluxProperties,
    MassDriftMax(f64),
    L1Max(f64),
    L1FinalMax(f64),
    L1RatioMin(f64),
    RateMin(f64),
    WeakDecreasing,
    WeakFinalRatioMax(f64),
    EntropyMax(f64),
    TruthFinalMin(f64),
    TruthNondecreasing,
    QuadDefectMax(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub description: String,
    pub model: ModelSpec,
    pub grid: GridSpec,
    pub scheme: SchemeSpec,
    pub u0: Piecewise<f64>,
    /// Riemann data `(x0, u_l, u_r)` when `u0` was given that way.
    pub riemann: Option<(f64, f64, f64)>,
    pub t_end: f64,
    pub x_range: (f64, f64),
    pub window: (f64, f64),
    pub reference: Option<Reference>,
    /// Second reference reported next to the first, e.g. the true solution
    /// when the first is a smoothed limit.
    pub truth: Option<ExactProblem<f64>>,
    pub battery: String,
    pub entropy: Vec<f64>,
    pub residuals: bool,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub asserts: Vec<Assertion>,
}

pub const BATTERIES: &[&str] = &["default-v1"];

fn pair(e: &Entry) -> Result<(f64, f64)> {
    let v: Vec<f64> = e.list("a number")?;
    match v.as_slice() {
        [a, b] if a < b => Ok((*a, *b)),
        _ => e.err(format!("`{}`: expected `lo, hi` with lo < hi", e.key)),
    }
}

fn positive(e: &Entry, what: &str) -> Result<f64> {
    let v: f64 = e.parse(what)?;
    if !(v > 0.0) || !v.is_finite() {
        return e.err(format!("`{}` must be positive", e.key));
    }
    Ok(v)
}

fn numbers(words: &[Entry]) -> Result<Vec<f64>> {
    words.iter().map(|w| w.parse::<f64>("a number")).collect()
}

fn parse_model(s: &Section) -> Result<ModelSpec> {
    s.only(&["kind", "c", "d"])?;
    let kind = s.require("kind")?;
    Ok(match kind.value.as_str() {
        "burgers" => ModelSpec::Burgers,
        "trivial" => ModelSpec::Trivial,
        "advection" => ModelSpec::Advection { c: s.require("c")?.parse("a number")? },
        "selfsimilar" => ModelSpec::Selfsimilar { d: s.get("d").map(|e| e.parse("a dimension")).transpose()?.unwrap_or(1) },
        other => return kind.err(format!("unknown model `{other}` (burgers, advection, trivial, selfsimilar)")),
    })
}

fn parse_step(e: &Entry) -> Result<TimeStep<f64>> {
    let w = e.words();
    let [rule, c] = w.as_slice() else {
        return e.err("`dt`: expected `fixed <dt>`, `linear <c>` or `cubic <c>`");
    };
    let c = positive(c, "a number")?;
    match rule.value.as_str() {
        "fixed" => Ok(TimeStep::Fixed(c)),
        "linear" => Ok(TimeStep::Linear(c)),
        "cubic" => Ok(TimeStep::Cubic(c)),
        other => rule.err(format!("unknown time-step rule `{other}` (fixed, linear, cubic)")),
    }
}

fn parse_grid(s: &Section) -> Result<GridSpec> {
    s.only(&["family", "h", "lambda", "dt", "refine", "velocity", "remap", "perturbation", "triangulate"])?;
    let fam = s.require("family")?;
    let family = match fam.value.as_str() {
        "uniform" => Family::Uniform,
        "staggered" => Family::Staggered,
        "local-timestep" => Family::LocalTimestep,
        "moving-vertex" => Family::MovingVertex,
        "remap" => Family::Remap,
        "perturbed" => Family::Perturbed,
        other => {
            return fam.err(format!(
                "unknown grid family `{other}` (uniform, staggered, local-timestep, moving-vertex, remap, perturbed)"
            ))
        }
    };
    let h_entry = s.require("h")?;
    let items = h_entry.items();
    let mut hs = Vec::with_capacity(items.len());
    for (i, it) in items.iter().enumerate() {
        let h = positive(it, "a mesh width")?;
        if i > 0 && !(h < hs[i - 1]) {
            return it.err("mesh widths must be strictly decreasing");
        }
        hs.push(h);
    }
    let lambda = s.get("lambda").map(|e| positive(e, "a number")).transpose()?.unwrap_or(0.5);
    let dt = s.get("dt").map(parse_step).transpose()?;
    if family == Family::Staggered && dt.is_none() {
        return Err(CliError::Config {
            line: fam.line,
            column: fam.column,
            message: "staggered grids need `dt`".into(),
        });
    }
    let refine = match s.get("refine") {
        Some(e) => {
            let it = e.items();
            let [a, b, f] = it.as_slice() else {
                return e.err("`refine`: expected `x_from, x_to, factor`");
            };
            let (x_from, x_to) = (a.parse::<f64>("a number")?, b.parse::<f64>("a number")?);
            if !(x_from < x_to) {
                return b.err("refinement region must have x_from < x_to");
            }
            Some(RefineRegion { x_from, x_to, factor: f.parse("a positive integer")? })
        }
        None if family == Family::LocalTimestep => {
            s.require("refine")?;
            None
        }
        None => None,
    };
    let remap = match s.get("remap") {
        Some(e) => {
            let it = e.items();
            let [t, n, g] = it.as_slice() else {
                return e.err("`remap`: expected `t, ratio, grading`");
            };
            Some(RemapSpec { t: positive(t, "a time")?, ratio: positive(n, "a cell ratio")?, grading: positive(g, "a number")? })
        }
        None if family == Family::Remap => {
            s.require("remap")?;
            None
        }
        None => None,
    };
    Ok(GridSpec {
        family,
        hs,
        lambda,
        dt,
        refine,
        velocity: s.get("velocity").map(|e| e.parse("a number")).transpose()?.unwrap_or(0.0),
        remap,
        perturbation: s.get("perturbation").map(|e| e.parse("a number")).transpose()?.unwrap_or(0.2),
        triangulate: s.get("triangulate").map(Entry::flag).transpose()?.unwrap_or(true),
    })
}

fn parse_scheme(s: &Section) -> Result<SchemeSpec> {
    s.only(&["name", "flux", "alpha", "reconstruction"])?;
    let n = s.require("name")?;
    let name = match n.value.as_str() {
        "lax-friedrichs" => SchemeName::LaxFriedrichs,
        "staggered-lf" => SchemeName::StaggeredLf,
        "spacetime-lf" => SchemeName::SpacetimeLf,
        other => return n.err(format!("unknown scheme `{other}` (lax-friedrichs, staggered-lf, spacetime-lf)")),
    };
    let flux = match s.get("flux") {
        None => FluxVariant::Exact,
        Some(e) => match e.value.as_str() {
            "exact" => FluxVariant::Exact,
            "biased" => FluxVariant::Biased,
            other => return e.err(format!("unknown flux variant `{other}` (exact, biased)")),
        },
    };
    let reconstruction = match s.get("reconstruction") {
        None => Reconstruction::Constant,
        Some(e) => e.value.parse().or_else(|err: stlw_core::Error| e.err(err.to_string()))?,
    };
    Ok(SchemeSpec { name, flux, alpha: s.get("alpha").map(|e| positive(e, "a number")).transpose()?, reconstruction })
}

type Data = (Piecewise<f64>, Option<(f64, f64, f64)>);

fn parse_data(s: &Section) -> Result<Data> {
    s.only(&["u0", "breaks", "values", "left", "right"])?;
    let e = s.require("u0")?;
    let w = e.words();
    let Some(kind) = w.first() else {
        return e.err("`u0` is empty");
    };
    let args = numbers(&w[1..])?;
    let arity = |n: usize, usage: &str| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            e.err(format!("`u0 = {usage}` takes {n} numbers, got {}", args.len()))
        }
    };
    let core = |r: stlw_core::Result<Piecewise<f64>>| r.or_else(|err| e.err(err.to_string()));
    Ok(match kind.value.as_str() {
        "constant" => {
            arity(1, "constant <c>")?;
            (Piecewise::constant(args[0]), None)
        }
        "riemann" => {
            arity(3, "riemann <x0> <u_l> <u_r>")?;
            (Piecewise::riemann(args[0], args[1], args[2]), Some((args[0], args[1], args[2])))
        }
        "indicator" => {
            arity(3, "indicator <a> <b> <value>")?;
            (core(Piecewise::indicator(args[0], args[1], args[2]))?, None)
        }
        "ramp" => {
            arity(4, "ramp <a> <b> <u_a> <u_b>")?;
            (core(Piecewise::ramp(args[0], args[1], args[2], args[3]))?, None)
        }
        "steps" => {
            arity(0, "steps")?;
            let breaks: Vec<f64> = s.require("breaks")?.list("a number")?;
            let values: Vec<f64> = s.require("values")?.list("a number")?;
            let left = s.require("left")?.parse("a number")?;
            let right = s.require("right")?.parse("a number")?;
            (core(Piecewise::steps(breaks, values, left, right))?, None)
        }
        other => return kind.err(format!("unknown data `{other}` (constant, riemann, indicator, ramp, steps)")),
    })
}

fn parse_problem(e: &Entry, model: ModelSpec, data: &Data) -> Result<Option<Reference>> {
    let need_riemann = |what: &str| {
        data.1.ok_or_else(|| CliError::Config {
            line: e.line,
            column: e.column,
            message: format!("`{what}` needs `u0 = riemann ...`"),
        })
    };
    Ok(Some(match e.value.as_str() {
        "none" => return Ok(None),
        "smoothed" => Reference::Smoothed,
        "trivial-indicator" => Reference::Exact(ExactProblem::TrivialIndicator),
        "burgers-shock" => {
            let (x0, u_l, u_r) = need_riemann("burgers-shock")?;
            Reference::Exact(ExactProblem::BurgersShock { u_l, u_r, x0 })
        }
        "burgers-rarefaction" => {
            let (x0, u_l, u_r) = need_riemann("burgers-rarefaction")?;
            Reference::Exact(ExactProblem::BurgersRarefaction { u_l, u_r, x0 })
        }
        "advection" => match model {
            ModelSpec::Advection { c } => Reference::Exact(ExactProblem::Advection { c, u0: data.0.clone() }),
            _ => return e.err("`advection` reference needs the advection model"),
        },
        other => {
            return e.err(format!(
                "unknown reference `{other}` (none, smoothed, trivial-indicator, burgers-shock, burgers-rarefaction, advection)"
            ))
        }
    }))
}

fn parse_asserts(s: &Section) -> Result<Vec<Assertion>> {
    let mut out = Vec::new();
    for e in &s.entries {
        let num = || e.parse::<f64>("a number");
        let on = || e.flag();
        let a = match e.key.as_str() {
            "flux_properties" => on()?.then_some(Assertion::FluxProperties),
            "weak_decreasing" => on()?.then_some(Assertion::WeakDecreasing),
            "truth_nondecreasing" => on()?.then_some(Assertion::TruthNondecreasing),
            "mass_drift_max" => Some(Assertion::MassDriftMax(num()?)),
            "l1_max" => Some(Assertion::L1Max(num()?)),
            "l1_final_max" => Some(Assertion::L1FinalMax(num()?)),
            "l1_ratio_min" => Some(Assertion::L1RatioMin(num()?)),
            "rate_min" => Some(Assertion::RateMin(num()?)),
            "weak_final_ratio_max" => Some(Assertion::WeakFinalRatioMax(num()?)),
            "entropy_max" => Some(Assertion::EntropyMax(num()?)),
            "truth_final_min" => Some(Assertion::TruthFinalMin(num()?)),
            "quad_defect_max" => Some(Assertion::QuadDefectMax(num()?)),
            other => {
                return Err(CliError::Config {
                    line: e.line,
                    column: e.key_column,
                    message: format!("unknown assertion `{other}`"),
                })
            }
        };
        out.extend(a);
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn parse(src: &str) -> Result<Self> {
        Self::from_ini(&ini::parse(src)?)
    }

    pub fn from_ini(ini: &Ini) -> Result<Self> {
        const SECTIONS: &[&str] = &["experiment", "model", "grid", "scheme", "data", "reference", "verify", "assert"];
        if let Some(s) = ini.sections.iter().find(|s| !SECTIONS.contains(&s.name.as_str())) {
            return Err(CliError::Config {
                line: s.line,
                column: 2,
                message: format!("unknown section [{}] (expected one of {})", s.name, SECTIONS.join(", ")),
            });
        }
        let exp = ini.require("experiment")?;
        exp.only(&["name", "description", "t_end", "x_range", "window", "output", "seed"])?;
        let name_e = exp.require("name")?;
        if !name_e.value.bytes().all(|b| b.is_ascii_alphanumeric() || b"_-".contains(&b)) || name_e.value.is_empty() {
            return name_e.err("experiment names use letters, digits, `_` and `-`");
        }
        let x_range = pair(exp.require("x_range")?)?;
        let window = match exp.get("window") {
            Some(e) => {
                let w = pair(e)?;
                if w.0 < x_range.0 || w.1 > x_range.1 {
                    return e.err("window must lie inside x_range");
                }
                w
            }
            None => x_range,
        };
        let model = parse_model(ini.require("model")?)?;
        let data = parse_data(ini.require("data")?)?;
        let (reference, truth) = match ini.section("reference") {
            Some(s) => {
                s.only(&["kind", "truth"])?;
                let reference = match s.get("kind") {
                    Some(e) => parse_problem(e, model, &data)?,
                    None => None,
                };
                let truth = match s.get("truth") {
                    Some(e) => match parse_problem(e, model, &data)? {
                        Some(Reference::Exact(p)) => Some(p),
                        Some(Reference::Smoothed) => return e.err("`truth` must be an exact solution"),
                        None => None,
                    },
                    None => None,
                };
                (reference, truth)
            }
            None => (None, None),
        };
        let (battery, entropy, residuals) = match ini.section("verify") {
            Some(s) => {
                s.only(&["battery", "entropy", "residuals"])?;
                let battery = match s.get("battery") {
                    Some(e) if BATTERIES.contains(&e.value.as_str()) => e.value.clone(),
                    Some(e) => return e.err(format!("unknown battery `{}` ({})", e.value, BATTERIES.join(", "))),
                    None => BATTERIES[0].to_string(),
                };
                let entropy = s.get("entropy").map(|e| e.list("a number")).transpose()?.unwrap_or_default();
                let residuals = s.get("residuals").map(Entry::flag).transpose()?.unwrap_or(false);
                (battery, entropy, residuals)
            }
            None => (BATTERIES[0].to_string(), Vec::new(), false),
        };
        let t_end = positive(exp.require("t_end")?, "a time")?;
        let grid = parse_grid(ini.require("grid")?)?;
        // perturbed grids are never marched, so they may omit the scheme
        let scheme = match ini.section("scheme") {
            None if grid.family == Family::Perturbed => SchemeSpec {
                name: SchemeName::SpacetimeLf,
                flux: FluxVariant::Exact,
                alpha: None,
                reconstruction: Reconstruction::Constant,
            },
            _ => parse_scheme(ini.require("scheme")?)?,
        };
        Ok(Self {
            name: name_e.value.clone(),
            description: exp.get("description").map(|e| e.value.clone()).unwrap_or_default(),
            model,
            grid,
            scheme,
            u0: data.0,
            riemann: data.1,
            t_end,
            x_range,
            window,
            reference,
            truth,
            battery,
            entropy,
            residuals,
            output: exp.get("output").map(|e| PathBuf::from(&e.value)),
            seed: exp.get("seed").map(|e| e.parse("an unsigned integer")).transpose()?.unwrap_or(0),
            asserts: ini.section("assert").map(parse_asserts).transpose()?.unwrap_or_default(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHOCK: &str = "\
[experiment]
name = demo
t_end = 0.5
x_range = -2, 3
window = -0.5, 1.5

[model]
kind = burgers

[grid]
family = uniform
h = 0.04, 0.02, 0.01
lambda = 0.5

[scheme]
name = lax-friedrichs

[data]
u0 = riemann 0 1 0

[reference]
kind = burgers-shock

[verify]
entropy = -1, 0, 1
residuals = true

[assert]
weak_decreasing = true
l1_ratio_min = 1.3
";

    fn err_at(src: &str) -> (usize, usize, String) {
        match ExperimentConfig::parse(src) {
            Err(CliError::Config { line, column, message }) => (line, column, message),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn parses_a_full_config() {
        let c = ExperimentConfig::parse(SHOCK).unwrap();
        assert_eq!(c.grid.hs, vec![0.04, 0.02, 0.01]);
        assert_eq!(c.riemann, Some((0.0, 1.0, 0.0)));
        assert_eq!(c.reference, Some(Reference::Exact(ExactProblem::BurgersShock { u_l: 1.0, u_r: 0.0, x0: 0.0 })));
        assert_eq!(c.entropy, vec![-1.0, 0.0, 1.0]);
        assert_eq!(c.asserts, vec![Assertion::WeakDecreasing, Assertion::L1RatioMin(1.3)]);
        assert_eq!(c.battery, "default-v1");
        assert_eq!(c.window, (-0.5, 1.5));
    }

    #[test]
    fn h_list_must_decrease() {
        let (line, column, msg) = err_at(&SHOCK.replace("h = 0.04, 0.02, 0.01", "h = 0.04, 0.02, 0.03"));
        assert_eq!((line, column), (12, 17));
        assert!(msg.contains("decreasing"));
    }

    #[test]
    fn names_must_resolve() {
        let (line, column, _) = err_at(&SHOCK.replace("kind = burgers\n", "kind = burger\n"));
        assert_eq!((line, column), (8, 8));
        let (line, _, msg) = err_at(&SHOCK.replace("name = lax-friedrichs", "name = upwind"));
        assert_eq!(line, 16);
        assert!(msg.contains("unknown scheme"));
        let (line, column, _) = err_at(&SHOCK.replace("[assert]\n", "[assert]\nbogus = 1\n"));
        assert_eq!((line, column), (29, 1));
        let (_, _, msg) = err_at(&SHOCK.replace("u0 = riemann 0 1 0", "u0 = indicator 0 1 1"));
        assert!(msg.contains("needs `u0 = riemann"), "{msg}");
        let (line, column, _) = err_at(&SHOCK.replace("u0 = riemann 0 1 0", "u0 = riemann 0 x 0"));
        assert_eq!((line, column), (19, 16));
    }

    #[test]
    fn missing_pieces_are_reported() {
        let (_, _, msg) = err_at(&SHOCK.replace("[model]\nkind = burgers\n", ""));
        assert!(msg.contains("missing section [model]"));
        let (line, _, msg) = err_at(&SHOCK.replace("family = uniform", "family = staggered"));
        assert_eq!(line, 11);
        assert!(msg.contains("dt"));
    }
}
