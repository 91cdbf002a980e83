//! Plain-text matrix format.
//!
//! ```text
//! 2 3
//! 1 0 -2.5
//! 4 1e-3 0
//! ```
//!
//! The header holds the row and column counts, then one line per row.
//! Blank lines between matrices are ignored so several matrices may share
//! one file. Values are written with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Renders `x` with 17 significant digits.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn write_matrix(m: &DenseMatrix) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|&x| format_real(x)).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

/// Line cursor over a text holding one or more matrices.
pub struct MatrixReader<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> MatrixReader<'a> {
    pub fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate().peekable(),
        }
    }

    /// Next non-blank line, with its 1-based line number.
    pub fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.lines.by_ref() {
            let t = line.trim();
            if !t.is_empty() {
                return Some((i + 1, t));
            }
        }
        None
    }

    pub fn is_exhausted(&mut self) -> bool {
        while let Some((_, line)) = self.lines.peek() {
            if line.trim().is_empty() {
                self.lines.next();
            } else {
                return false;
            }
        }
        true
    }

    pub fn read_matrix(&mut self) -> Result<DenseMatrix> {
        let (lineno, header) = self
            .next_line()
            .ok_or_else(|| Error::Parse("expected a matrix header \"rows cols\"".into()))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        let [r, c] = dims.as_slice() else {
            return Err(Error::Parse(format!(
                "line {lineno}: header must be two integers \"rows cols\", got {header:?}"
            )));
        };
        let parse_dim = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Parse(format!("line {lineno}: invalid dimension {s:?}")))
        };
        let (rows, cols) = (parse_dim(r)?, parse_dim(c)?);
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            let (lineno, line) = self.next_line().ok_or_else(|| {
                Error::Parse(format!(
                    "unexpected end of input: missing row {} of {rows}",
                    i + 1
                ))
            })?;
            let before = data.len();
            for tok in line.split_whitespace() {
                let x: f64 = tok
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {lineno}: invalid number {tok:?}")))?;
                if !x.is_finite() {
                    return Err(Error::Parse(format!(
                        "line {lineno}: non-finite value {tok:?}"
                    )));
                }
                data.push(x);
            }
            if data.len() - before != cols {
                return Err(Error::Parse(format!(
                    "line {lineno}: expected {cols} values, found {}",
                    data.len() - before
                )));
            }
        }
        DenseMatrix::new(rows, cols, data)
    }
}

pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    let mut reader = MatrixReader::new(text);
    let m = reader.read_matrix()?;
    if let Some((lineno, _)) = reader.next_line() {
        return Err(Error::Parse(format!(
            "line {lineno}: trailing content after matrix"
        )));
    }
    Ok(m)
}

pub fn read_matrix_file(path: &Path) -> Result<DenseMatrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_matrix(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_matrix_file(path: &Path, m: &DenseMatrix) -> std::io::Result<()> {
    std::fs::write(path, write_matrix(m))
}
