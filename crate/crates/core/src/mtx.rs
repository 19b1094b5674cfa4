//! Matrix Market coordinate format (`real`/`integer`, `general`/`symmetric`).
//!
//! Indices are 1-based on disk and 0-based in memory. Symmetric files are held as their
//! lower triangle; an upper-triangle entry in a symmetric file is mirrored down. Duplicate
//! entries are summed on ingestion. Values are written in shortest round-trip form, so a
//! write/read cycle reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::CscMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Symmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixMarket {
    pub matrix: CscMatrix,
    pub symmetry: Symmetry,
}

pub fn read_matrix_market(path: &Path) -> Result<MatrixMarket> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(&text, path)
}

/// Parses Matrix Market text; `origin` is only used for error messages.
pub fn parse_matrix_market(text: &str, origin: &Path) -> Result<MatrixMarket> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(err(1, format!("not a Matrix Market matrix header: {header:?}")));
    }
    if fields[2] != "coordinate" {
        return Err(err(1, format!("unsupported format {:?}", fields[2])));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(err(1, format!("unsupported field type {:?}", fields[3])));
    }
    let symmetry = match fields[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(err(1, format!("unsupported symmetry {other:?}"))),
    };

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = data
        .next()
        .ok_or_else(|| err(1, "missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| err(size_line, format!("bad size line: {e}")))?;
    let [nrows, ncols, nnz] = dims[..] else {
        return Err(err(size_line, "size line must hold rows, columns and entries".into()));
    };
    if symmetry == Symmetry::Symmetric && nrows != ncols {
        return Err(err(size_line, "symmetric matrix must be square".into()));
    }

    let mut trip = Vec::with_capacity(nnz);
    for (line_no, line) in data.by_ref().take(nnz) {
        let mut it = line.split_whitespace();
        let (Some(i), Some(j), Some(v), None) = (it.next(), it.next(), it.next(), it.next())
        else {
            return Err(err(line_no, "expected `row col value`".into()));
        };
        let i: usize = i.parse().map_err(|e| err(line_no, format!("bad row index: {e}")))?;
        let j: usize = j.parse().map_err(|e| err(line_no, format!("bad column index: {e}")))?;
        let v: f64 = v.parse().map_err(|e| err(line_no, format!("bad value: {e}")))?;
        if i == 0 || j == 0 || i > nrows || j > ncols {
            return Err(err(
                line_no,
                format!("entry ({i}, {j}) outside a {nrows}x{ncols} matrix"),
            ));
        }
        let (r, c) = (i - 1, j - 1);
        match symmetry {
            Symmetry::General => trip.push((r, c, v)),
            Symmetry::Symmetric => trip.push((r.max(c), r.min(c), v)),
        }
    }
    if trip.len() != nnz {
        return Err(err(
            text.lines().count(),
            format!("expected {nnz} entries, found {}", trip.len()),
        ));
    }
    if let Some((line_no, _)) = data.next() {
        return Err(err(line_no, format!("more than the declared {nnz} entries")));
    }
    let matrix = CscMatrix::from_triplets(nrows, ncols, &trip)?;
    Ok(MatrixMarket { matrix, symmetry })
}

/// Renders a matrix; for `Symmetric` only the lower triangle is written.
pub fn format_matrix_market(matrix: &CscMatrix, symmetry: Symmetry) -> String {
    let entries: Vec<(usize, usize, f64)> = match symmetry {
        Symmetry::General => matrix.iter().collect(),
        Symmetry::Symmetric => matrix.iter().filter(|&(i, j, _)| i >= j).collect(),
    };
    let kind = match symmetry {
        Symmetry::General => "general",
        Symmetry::Symmetric => "symmetric",
    };
    let mut out = String::with_capacity(32 * (entries.len() + 2));
    let _ = writeln!(out, "%%MatrixMarket matrix coordinate real {kind}");
    let _ = writeln!(out, "{} {} {}", matrix.nrows(), matrix.ncols(), entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, v);
    }
    out
}

pub fn write_matrix_market(path: &Path, matrix: &CscMatrix, symmetry: Symmetry) -> Result<()> {
    fs::write(path, format_matrix_market(matrix, symmetry)).map_err(|e| Error::io(path, e))
}
