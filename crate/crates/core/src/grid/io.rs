//! Line-oriented text dump of a grid.
//!
//! ```text
//! STGRID 1 <ncells> <nfaces> <T> <x_lo> <x_hi> <h>
//! C <id> <layer> <nverts> t1 x1 t2 x2 ...
//! F <id> <I|B> <left|-1> <right|-1> ta xa tb xb
//! ```
//!
//! `I` marks interior faces, `B` initial-boundary faces. Floats are written
//! as shortest round-trip decimals, so a load reproduces the grid bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use super::{assemble, make_cell, Domain, Face, FaceKind, GridFamily, SpaceTimeGrid};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::scalar::Real;

pub fn dump_grid<S: Real, W: Write>(grid: &SpaceTimeGrid<S>, mut w: W) -> Result<()> {
    let d = grid.domain;
    writeln!(
        w,
        "STGRID 1 {} {} {:?} {:?} {:?} {:?}",
        grid.n_cells(),
        grid.faces.len(),
        d.t_end,
        d.x_lo,
        d.x_hi,
        grid.h
    )?;
    for c in &grid.cells {
        write!(w, "C {} {} {}", c.id, c.layer, c.vertices.len())?;
        for p in &c.vertices {
            write!(w, " {:?} {:?}", p.t, p.x)?;
        }
        writeln!(w)?;
    }
    let id = |c: Option<usize>| c.map_or(-1i64, |v| v as i64);
    for f in &grid.faces {
        let kind = match f.kind {
            FaceKind::Interior => 'I',
            FaceKind::Initial => 'B',
        };
        writeln!(
            w,
            "F {} {} {} {} {:?} {:?} {:?} {:?}",
            f.id,
            kind,
            id(f.left),
            id(f.right),
            f.a.t,
            f.a.x,
            f.b.t,
            f.b.x
        )?;
    }
    Ok(())
}

pub fn write_grid<S: Real>(grid: &SpaceTimeGrid<S>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    dump_grid(grid, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_grid<S: Real>(path: &Path) -> Result<SpaceTimeGrid<S>> {
    load_grid(BufReader::new(File::open(path)?))
}

struct Tokens<'a> {
    line: usize,
    it: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
}

impl<'a> Tokens<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Self { line, it: src.char_indices().peekable(), src }
    }

    fn err<T>(&self, column: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse { line: self.line, column, message: message.into() })
    }

    fn next_raw(&mut self) -> Option<(usize, &'a str)> {
        while let Some(&(_, c)) = self.it.peek() {
            if c.is_whitespace() {
                self.it.next();
            } else {
                break;
            }
        }
        let (start, _) = *self.it.peek()?;
        let mut end = self.src.len();
        while let Some(&(i, c)) = self.it.peek() {
            if c.is_whitespace() {
                end = i;
                break;
            }
            self.it.next();
        }
        Some((start + 1, &self.src[start..end]))
    }

    fn next<T: FromStr>(&mut self, what: &str) -> Result<T> {
        let col = self.src.len() + 1;
        match self.next_raw() {
            None => self.err(col, format!("missing {what}")),
            Some((c, tok)) => tok.parse().or_else(|_| self.err(c, format!("bad {what} '{tok}'"))),
        }
    }

    fn finish(&mut self) -> Result<()> {
        match self.next_raw() {
            None => Ok(()),
            Some((c, tok)) => self.err(c, format!("unexpected trailing token '{tok}'")),
        }
    }
}

pub fn load_grid<S: Real, R: BufRead>(r: R) -> Result<SpaceTimeGrid<S>> {
    let mut lines = r.lines().enumerate();
    let (ln, header) = match lines.next() {
        Some((i, l)) => (i + 1, l?),
        None => return Err(Error::Parse { line: 1, column: 1, message: "empty file".into() }),
    };
    let mut tk = Tokens::new(&header, ln);
    let magic: String = tk.next("magic")?;
    if magic != "STGRID" {
        return tk.err(1, "expected STGRID header");
    }
    let version: u32 = tk.next("version")?;
    if version != 1 {
        return tk.err(8, format!("unsupported version {version}"));
    }
    let n_cells: usize = tk.next("cell count")?;
    let n_faces: usize = tk.next("face count")?;
    let (t_end, x_lo, x_hi, h): (S, S, S, S) =
        (tk.next("T")?, tk.next("x_lo")?, tk.next("x_hi")?, tk.next("h")?);
    tk.finish()?;
    let domain = Domain::new(t_end, x_lo, x_hi)?;

    let mut cells: Vec<super::Cell<S>> = Vec::with_capacity(n_cells);
    let mut faces = Vec::with_capacity(n_faces);
    let mut last_line = ln;
    for (i, line) in lines {
        let ln = i + 1;
        last_line = ln;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut tk = Tokens::new(&line, ln);
        let tag: String = tk.next("record tag")?;
        match tag.as_str() {
            "C" => {
                let id: usize = tk.next("cell id")?;
                if id != cells.len() {
                    return tk.err(3, format!("cell id {id} out of sequence (expected {})", cells.len()));
                }
                let layer: usize = tk.next("layer")?;
                let nv: usize = tk.next("vertex count")?;
                let mut verts = Vec::with_capacity(nv);
                for _ in 0..nv {
                    verts.push(Point::new(tk.next("t")?, tk.next("x")?));
                }
                tk.finish()?;
                let cell = make_cell(id, verts, layer, &domain)
                    .map_err(|e| Error::Parse { line: ln, column: 1, message: e.to_string() })?;
                cells.push(cell);
            }
            "F" => {
                let id: usize = tk.next("face id")?;
                if id != faces.len() {
                    return tk.err(3, format!("face id {id} out of sequence (expected {})", faces.len()));
                }
                let kind: String = tk.next("face kind")?;
                let kind = match kind.as_str() {
                    "I" => FaceKind::Interior,
                    "B" => FaceKind::Initial,
                    other => return tk.err(5, format!("face kind must be I or B, got '{other}'")),
                };
                let left: i64 = tk.next("left cell")?;
                let right: i64 = tk.next("right cell")?;
                let a: Point<S> = Point::new(tk.next("ta")?, tk.next("xa")?);
                let b: Point<S> = Point::new(tk.next("tb")?, tk.next("xb")?);
                tk.finish()?;
                let cell_ref = |v: i64| if v < 0 { None } else { Some(v as usize) };
                let d = b.sub(a);
                let measure = d.norm();
                if !(measure > S::zero()) {
                    return tk.err(1, "degenerate face");
                }
                let normal = match kind {
                    FaceKind::Initial => Point::new(S::one(), S::zero()),
                    FaceKind::Interior => Point::new(d.x / measure, -d.t / measure),
                };
                faces.push(Face { id, a, b, left: cell_ref(left), right: cell_ref(right), normal, measure, kind });
            }
            other => return tk.err(1, format!("unknown record '{other}'")),
        }
    }
    if cells.len() != n_cells || faces.len() != n_faces {
        return Err(Error::Parse {
            line: last_line,
            column: 1,
            message: format!(
                "truncated: found {} cells and {} faces, header declares {n_cells} and {n_faces}",
                cells.len(),
                faces.len()
            ),
        });
    }
    let tol = S::lit(1e-12) * (t_end.abs() + x_lo.abs() + x_hi.abs());
    for c in &mut cells {
        let n = c.vertices.len();
        for i in 0..n {
            let (a, b) = (c.vertices[i], c.vertices[(i + 1) % n]);
            let on = |u: S, v: S, level: S| (u - level).abs() <= tol && (v - level).abs() <= tol;
            if on(a.x, b.x, x_lo) || on(a.x, b.x, x_hi) {
                c.lateral = true;
            }
            if on(a.t, b.t, t_end) {
                c.top = true;
            }
        }
    }
    assemble(cells, faces, domain, h, GridFamily::Unstructured, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_uniform_grid;

    #[test]
    fn round_trip_is_bit_identical() {
        let g = build_uniform_grid(0.1, 0.3, 0.5, -0.3, 0.7).unwrap();
        let mut buf = Vec::new();
        dump_grid(&g, &mut buf).unwrap();
        let back: SpaceTimeGrid<f64> = load_grid(&buf[..]).unwrap();
        assert_eq!(g.metrics(), back.metrics());
        for (a, b) in g.faces.iter().zip(&back.faces) {
            assert_eq!((a.left, a.right, a.a, a.b, a.kind), (b.left, b.right, b.a, b.b, b.kind));
            assert_eq!(a.normal, b.normal);
            assert_eq!(a.measure, b.measure);
        }
    }

    #[test]
    fn truncated_file_names_a_line() {
        let g = build_uniform_grid(0.5, 0.5, 0.5, 0.0, 1.0).unwrap();
        let mut buf = Vec::new();
        dump_grid(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(3).collect::<Vec<_>>().join("\n");
        let err = load_grid::<f64, _>(cut.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let bad = text.replacen("C 1 0 4", "C 1 0 x", 1);
        let err = load_grid::<f64, _>(bad.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, column: 7, .. }), "{err}");
    }
}
