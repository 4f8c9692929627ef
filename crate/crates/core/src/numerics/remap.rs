//! Conservative transfer of cell averages between two partitions of an interval.

use crate::error::{invalid, Error, Result};
use crate::scalar::{csum, Real};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Reconstruction {
    #[default]
    Constant,
    /// Piecewise linear with minmod-limited slopes, flat in the end cells.
    Minmod,
}

impl std::str::FromStr for Reconstruction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Self::Constant),
            "minmod" => Ok(Self::Minmod),
            other => invalid(format!("unknown reconstruction `{other}` (constant, minmod)")),
        }
    }
}

/// One overlap `old ∩ new` and the integral of the reconstruction over it.
#[derive(Clone, Debug, PartialEq)]
pub struct RemapFace<S> {
    pub old: usize,
    pub new: usize,
    pub x0: S,
    pub x1: S,
    pub flux: Vec<S>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RemapResult<S> {
    /// `m` values per new cell, flat.
    pub values: Vec<S>,
    pub faces: Vec<RemapFace<S>>,
}

pub(crate) fn minmod<S: Real>(a: S, b: S) -> S {
    if a * b <= S::zero() {
        S::zero()
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

fn check_breaks<S: Real>(b: &[S], what: &str) -> Result<()> {
    if b.len() < 2 || b.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid(format!("{what} breakpoints must be strictly increasing with at least two entries"));
    }
    Ok(())
}

/// Remaps averages `old_values` (`m` per cell of `old_breaks`) onto `new_breaks`.
///
/// Both partitions must cover the same interval. Every new value is the mean
/// of the reconstruction over the new cell, so the total integral is kept up
/// to rounding and constants are reproduced exactly.
pub fn remap_operator<S: Real>(
    old_breaks: &[S],
    old_values: &[S],
    m: usize,
    new_breaks: &[S],
    recon: Reconstruction,
) -> Result<RemapResult<S>> {
    check_breaks(old_breaks, "old")?;
    check_breaks(new_breaks, "new")?;
    let n_old = old_breaks.len() - 1;
    let n_new = new_breaks.len() - 1;
    if m == 0 || old_values.len() != n_old * m {
        return invalid(format!("expected {} old values, got {}", n_old * m, old_values.len()));
    }
    let span = old_breaks[n_old] - old_breaks[0];
    let tol = S::lit(1e-12) * span;
    if (old_breaks[0] - new_breaks[0]).abs() > tol || (old_breaks[n_old] - new_breaks[n_new]).abs() > tol {
        return invalid("old and new partitions cover different intervals");
    }

    let centre = |i: usize| (old_breaks[i] + old_breaks[i + 1]) * S::half();
    let value = |i: usize, k: usize| old_values[i * m + k];
    let mut slopes = vec![S::zero(); n_old * m];
    if recon == Reconstruction::Minmod {
        for i in 1..n_old.saturating_sub(1) {
            for k in 0..m {
                let l = (value(i, k) - value(i - 1, k)) / (centre(i) - centre(i - 1));
                let r = (value(i + 1, k) - value(i, k)) / (centre(i + 1) - centre(i));
                slopes[i * m + k] = minmod(l, r);
            }
        }
    }

    let mut faces = Vec::new();
    let mut means = Vec::new();
    let (mut i, mut j) = (0, 0);
    let mut x = old_breaks[0];
    while i < n_old && j < n_new {
        let end = old_breaks[i + 1].min(new_breaks[j + 1]);
        if end - x > tol {
            let mid = (x + end) * S::half() - centre(i);
            let mean: Vec<S> = (0..m).map(|k| value(i, k) + slopes[i * m + k] * mid).collect();
            let flux = mean.iter().map(|&v| (end - x) * v).collect();
            means.push(mean);
            faces.push(RemapFace { old: i, new: j, x0: x, x1: end, flux });
        }
        x = end;
        if (old_breaks[i + 1] - end).abs() <= tol {
            i += 1;
        }
        if (new_breaks[j + 1] - end).abs() <= tol {
            j += 1;
        }
    }
    if i != n_old || j != n_new {
        return Err(Error::Internal("remap overlaps do not partition the interval".into()));
    }

    // base + Σ w (mean - base) per new cell keeps constants exact
    let mut values = vec![S::zero(); n_new * m];
    let mut start = 0;
    while start < faces.len() {
        let nc = faces[start].new;
        let end = start + faces[start..].iter().take_while(|f| f.new == nc).count();
        let group = &faces[start..end];
        let width = csum(group.iter().map(|f| f.x1 - f.x0));
        for k in 0..m {
            let base = means[start][k];
            let dev = csum(group.iter().zip(&means[start..end]).skip(1).map(|(f, v)| (f.x1 - f.x0) / width * (v[k] - base)));
            values[nc * m + k] = base + dev;
        }
        start = end;
    }
    Ok(RemapResult { values, faces })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_remap_example() {
        let r = remap_operator(&[0.0, 1.0, 2.0], &[1.0, 3.0], 1, &[0.0, 0.5, 2.0], Reconstruction::Constant).unwrap();
        assert_eq!(r.values[0], 1.0);
        assert!((r.values[1] - 7.0f64 / 3.0).abs() < 1e-15);
        assert_eq!(r.faces.len(), 3);
        let mass: f64 = r.faces.iter().map(|f| f.flux[0]).sum();
        assert!((mass - 4.0).abs() < 1e-15);
    }

    #[test]
    fn minmod_is_conservative_and_keeps_constants() {
        let old: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let vals: Vec<f64> = (0..10).map(|i| ((i as f64) * 0.7).sin()).collect();
        let new: Vec<f64> = (0..=7).map(|i| (i as f64 / 7.0).powf(1.3)).collect();
        let r = remap_operator(&old, &vals, 1, &new, Reconstruction::Minmod).unwrap();
        let before: f64 = vals.iter().map(|v| 0.1 * v).sum();
        let after: f64 = r.values.iter().zip(new.windows(2)).map(|(v, w)| v * (w[1] - w[0])).sum();
        assert!((before - after).abs() < 1e-14);
        let c = remap_operator(&old, &[0.3; 10], 1, &new, Reconstruction::Minmod).unwrap();
        assert!(c.values.iter().all(|&v| v == 0.3));
    }

    #[test]
    fn rejects_mismatched_partitions() {
        assert!(remap_operator(&[0.0, 1.0], &[1.0], 1, &[0.0, 2.0], Reconstruction::Constant).is_err());
        assert!(remap_operator(&[0.0, 1.0], &[1.0], 1, &[0.0, 0.0, 1.0], Reconstruction::Constant).is_err());
    }
}
