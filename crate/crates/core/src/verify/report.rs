//! CSV, text and SVG renderings of convergence tables.

use std::fmt::Write as _;

use super::study::ConvergenceTable;
use crate::scalar::Real;

pub const CSV_HEADER: &str = "experiment,h,phi_id,weak_residual,entropy_a,entropy_residual,l1_error,mass_drift,rate";

fn num<S: Real>(v: Option<S>) -> String {
    v.map(|v| format!("{:e}", v.to_f64_())).unwrap_or_default()
}

/// One line per `(h, φ, a)`; rows without residuals get a single line with
/// empty residual columns.
pub fn table_csv<S: Real>(table: &ConvergenceTable<S>) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in &table.rows {
        let tail = format!("{},{},{}", num(row.l1_error), num(Some(row.mass_drift)), num(row.rate));
        let h = format!("{:e}", row.h.to_f64_());
        let Some(res) = &row.residuals else {
            let _ = writeln!(out, "{},{h},,,,,{tail}", table.experiment);
            continue;
        };
        for (i, w) in res.weak.iter().enumerate() {
            let ents: Vec<_> = res.entropy.iter().filter(|e| e.phi == i).collect();
            if ents.is_empty() {
                let _ = writeln!(out, "{},{h},{i},{},,,{tail}", table.experiment, num(Some(*w)));
            }
            for e in ents {
                let _ = writeln!(
                    out,
                    "{},{h},{i},{},{},{},{tail}",
                    table.experiment,
                    num(Some(*w)),
                    num(Some(e.a)),
                    num(Some(e.value))
                );
            }
        }
    }
    out
}

pub fn table_summary<S: Real>(table: &ConvergenceTable<S>) -> String {
    let mut out = format!("experiment {}\n", table.experiment);
    let _ = writeln!(
        out,
        "{:>10} {:>10} {:>12} {:>12} {:>12} {:>12} {:>8} {:>12}",
        "h", "h_max", "l1_error", "weak_max", "entropy_max", "mass_drift", "rate", "quad_defect"
    );
    let cell = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4e}"));
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{:>10.4e} {:>10.4e} {:>12} {:>12} {:>12} {:>12.3e} {:>8} {:>12}",
            r.h.to_f64_(),
            r.h_max.to_f64_(),
            cell(r.l1_error.map(|v| v.to_f64_())),
            cell(r.max_weak().map(|v| v.to_f64_())),
            cell(r.max_entropy().map(|v| v.to_f64_())),
            r.mass_drift.to_f64_(),
            r.rate.map_or("-".to_string(), |v| format!("{:.3}", v.to_f64_())),
            cell(r.residuals.as_ref().map(|x| x.refinement_defect.to_f64_())),
        );
    }
    out
}

/// Standalone SVG: `log2 h` against `log10` of each series.
pub fn log_log_svg(title: &str, series: &[(&str, Vec<(f64, f64)>)]) -> String {
    const W: f64 = 480.0;
    const H: f64 = 320.0;
    const PAD: f64 = 48.0;
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, s)| s.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|&(h, v)| (h.log2(), v.log10())))
        .collect();
    let span = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-9 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = span(|p| p.0);
    let (y0, y1) = span(|p| p.1);
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(out, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">log2 h</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" font-size="12" transform="rotate(-90 14 {})" text-anchor="middle">log10 value</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (i, (name, s)) in series.iter().enumerate() {
        let c = colors[i % colors.len()];
        let p: Vec<String> = s
            .iter()
            .filter(|p| p.0 > 0.0 && p.1 > 0.0)
            .map(|&(h, v)| format!("{:.2},{:.2}", sx(h.log2()), sy(v.log10())))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="series" data-name="{}" points="{}" fill="none" stroke="{c}"/>"#,
            escape(name),
            p.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" fill="{c}">{}</text>"#,
            PAD + 8.0,
            PAD + 14.0 * (i as f64 + 1.0),
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// `log_log_svg` of the error and residual columns of a table.
pub fn table_svg<S: Real>(table: &ConvergenceTable<S>) -> String {
    let col = |f: &dyn Fn(&super::study::StudyRow<S>) -> Option<S>| -> Vec<(f64, f64)> {
        table.rows.iter().filter_map(|r| f(r).map(|v| (r.h.to_f64_(), v.to_f64_().abs()))).collect()
    };
    let mut series = vec![("l1_error", col(&|r| r.l1_error))];
    let weak = col(&|r| r.max_weak());
    if !weak.is_empty() {
        series.push(("weak_residual", weak));
    }
    log_log_svg(&table.experiment, &series)
}
