//! Randomised invariants.

use proptest::prelude::*;

use stlw_core::grid::io::{dump_grid, load_grid};
use stlw_core::grid::{build_moving_vertex_grid, build_uniform_grid};
use stlw_core::initial::{InitialData, Piecewise};
use stlw_core::model::Burgers;
use stlw_core::numerics::{lf_scheme, remap_operator, Reconstruction};
use stlw_core::solver::march;

/// Strictly increasing partition of `[lo, hi]` from positive weights.
fn partition(lo: f64, hi: f64, w: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    let mut out = vec![lo];
    let mut acc = 0.0;
    for v in &w[..w.len() - 1] {
        acc += v;
        out.push(lo + (hi - lo) * acc / total);
    }
    out.push(hi);
    out
}

fn mass(breaks: &[f64], vals: &[f64]) -> f64 {
    vals.iter().zip(breaks.windows(2)).map(|(v, w)| v * (w[1] - w[0])).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn remap_conserves_and_keeps_constants(
        wo in prop::collection::vec(0.1f64..1.0, 2..40),
        wn in prop::collection::vec(0.1f64..1.0, 2..40),
        seed_vals in prop::collection::vec(-5.0f64..5.0, 40),
        k in -5.0f64..5.0,
        minmod in any::<bool>(),
    ) {
        let old = partition(-1.0, 3.0, &wo);
        let new = partition(-1.0, 3.0, &wn);
        let vals = &seed_vals[..old.len() - 1];
        let recon = if minmod { Reconstruction::Minmod } else { Reconstruction::Constant };
        let r = remap_operator(&old, vals, 1, &new, recon).unwrap();
        let scale: f64 = 1.0 + vals.iter().map(|v| v.abs()).sum::<f64>();
        prop_assert!((mass(&old, vals) - mass(&new, &r.values)).abs() <= 1e-13 * scale);
        let c = remap_operator(&old, &vec![k; old.len() - 1], 1, &new, recon).unwrap();
        prop_assert!(c.values.iter().all(|&v| v == k));
        // new values stay within the old range
        let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        prop_assert!(r.values.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
    }

    #[test]
    fn lax_friedrichs_conserves_mass(
        values in prop::collection::vec(-1.0f64..1.0, 3),
        cut in -0.5f64..0.5,
    ) {
        let g = build_uniform_grid(0.1, 0.4, 0.8, -4.0, 5.0).unwrap();
        let b = Burgers::new(-1.5, 1.5).unwrap();
        let u0 = InitialData::scalar(Piecewise::steps(vec![cut, cut + 0.7], vec![values[1]], values[0], values[2]).unwrap());
        let r = march(&lf_scheme(&b, &g, &u0, 0.4).unwrap()).unwrap();
        // the tails carry f(left) - f(right) into the slab per unit time
        let inflow = 0.5 * (values[0] * values[0] - values[2] * values[2]);
        for (t, m) in g.layer_times.iter().zip(&r.per_layer_mass) {
            prop_assert!((m - r.per_layer_mass[0] - t * inflow).abs() <= 1e-12);
        }
        // maximum principle of the monotone scheme
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        for c in 0..g.n_cells() {
            if r.solution.is_defined(c) {
                let v = r.solution.scalar(c);
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn piecewise_integrals_are_additive(
        values in prop::collection::vec(-2.0f64..2.0, 4),
        a in -2.0f64..0.0,
        m in 0.0f64..1.0,
        b in 1.0f64..3.0,
    ) {
        let p = Piecewise::steps(vec![-0.5, 0.2, 0.9], vec![values[1], values[2]], values[0], values[3]).unwrap();
        let whole = p.integral(a, b);
        prop_assert!((p.integral(a, m) + p.integral(m, b) - whole).abs() <= 1e-13);
        prop_assert!((p.average(a, b) * (b - a) - whole).abs() <= 1e-13);
    }

    #[test]
    fn moving_grid_dump_round_trips(amp in 0.0f64..0.3, h in 0.05f64..0.2) {
        let g = build_moving_vertex_grid(h, 0.5, 0.6, 0.0, 1.0, |t, x| amp * x * (1.0 - x) * (1.0 - t)).unwrap();
        let mut buf = Vec::new();
        dump_grid(&g, &mut buf).unwrap();
        let back = load_grid::<f64, _>(buf.as_slice()).unwrap();
        prop_assert_eq!(back.metrics(), g.metrics());
        prop_assert_eq!(back.faces.len(), g.faces.len());
        for (f, e) in g.faces.iter().zip(&back.faces) {
            prop_assert_eq!((f.a, f.b, f.left, f.right), (e.a, e.b, e.left, e.right));
        }
    }
}
