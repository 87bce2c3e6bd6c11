//! Plain-text node/element format:
//!
//! ```text
//! # comment
//! nodes <I>
//! x y          (I lines)
//! triangles <M>
//! i j k        (M lines, 0-based)
//! ```
//!
//! Coordinates are written with 17 significant digits, which round-trips
//! every `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Mesh, Point};
use crate::error::{Error, Result};

struct Lines<'a> {
    path: &'a Path,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last_line: usize,
}

impl<'a> Lines<'a> {
    /// Next non-empty line with comments stripped, as (line number, tokens).
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            self.last_line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if !tokens.is_empty() {
                return Some((i + 1, tokens));
            }
        }
        None
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse { path: self.path.to_path_buf(), line, message: message.into() }
    }

    fn header(&mut self, keyword: &str) -> Result<usize> {
        let (line, tokens) = self
            .next_tokens()
            .ok_or_else(|| self.err(self.last_line + 1, format!("expected `{keyword} <count>`, found end of file")))?;
        match tokens.as_slice() {
            [k, n] if *k == keyword => {
                n.parse::<usize>().map_err(|_| self.err(line, format!("invalid {keyword} count `{n}`")))
            }
            _ => Err(self.err(line, format!("expected `{keyword} <count>`"))),
        }
    }

    fn record<T: std::str::FromStr, const N: usize>(&mut self, what: &str) -> Result<[T; N]> {
        let (line, tokens) = self
            .next_tokens()
            .ok_or_else(|| self.err(self.last_line + 1, format!("expected {what}, found end of file")))?;
        if tokens.len() != N {
            return Err(self.err(line, format!("expected {N} values for {what}, found {}", tokens.len())));
        }
        let mut parsed = Vec::with_capacity(N);
        for t in tokens {
            parsed.push(t.parse::<T>().map_err(|_| self.err(line, format!("invalid value `{t}` in {what}")))?);
        }
        parsed.try_into().map_err(|_| self.err(line, "internal arity mismatch"))
    }
}

/// Parses mesh text; `path` is only used in error messages.
pub fn parse_mesh(text: &str, path: &Path) -> Result<Mesh> {
    let mut lines = Lines { path, inner: text.lines().enumerate(), last_line: 0 };

    let nn = lines.header("nodes")?;
    let mut vertices: Vec<Point> = Vec::with_capacity(nn);
    for _ in 0..nn {
        let [x, y] = lines.record::<f64, 2>("node coordinates")?;
        if !x.is_finite() || !y.is_finite() {
            return Err(lines.err(lines.last_line, "non-finite coordinate"));
        }
        vertices.push([x, y]);
    }
    let nt = lines.header("triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        triangles.push(lines.record::<usize, 3>("triangle")?);
    }
    if let Some((line, _)) = lines.next_tokens() {
        return Err(lines.err(line, "unexpected content after the triangle list"));
    }
    Mesh::new(vertices, triangles)
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text, path)
}

/// Serializes a mesh into the text format.
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "nodes {}", mesh.num_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{:.16e} {:.16e}", p[0], p[1]);
    }
    let _ = writeln!(out, "triangles {}", mesh.num_triangles());
    for t in mesh.triangles() {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    out
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_mesh(mesh)).map_err(|e| Error::io(path, e))
}
