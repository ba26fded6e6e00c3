//! Matrix Market coordinate I/O for test fixtures: symmetric matrices
//! (lower-triangle storage) and general rectangular two-nonzero factors.

use std::fmt::Write as _;

use super::sparse::{SparseSym, TwoNnzFactor};
use super::LinalgError;

fn parse_err(line: usize, msg: impl Into<String>) -> LinalgError {
    LinalgError::MatrixMarket {
        line,
        msg: msg.into(),
    }
}

struct Header {
    rows: usize,
    cols: usize,
    nnz: usize,
    symmetric: bool,
    body_start: usize,
}

fn parse_header(text: &str, want_symmetric: bool) -> Result<Header, LinalgError> {
    let mut lines = text.lines().enumerate();
    let (line_no, banner) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty matrix market input"))?;
    let banner_lc = banner.to_ascii_lowercase();
    if !banner_lc.starts_with("%%matrixmarket") {
        return Err(parse_err(line_no + 1, "missing %%MatrixMarket banner"));
    }
    let fields: Vec<&str> = banner_lc.split_whitespace().collect();
    if fields.len() < 5 || fields[1] != "matrix" || fields[2] != "coordinate" || fields[3] != "real"
    {
        return Err(parse_err(
            line_no + 1,
            "expected `matrix coordinate real <symmetry>` banner",
        ));
    }
    let symmetric = match fields[4] {
        "symmetric" => true,
        "general" => false,
        other => return Err(parse_err(line_no + 1, format!("unsupported symmetry {other}"))),
    };
    if symmetric != want_symmetric {
        return Err(parse_err(
            line_no + 1,
            format!(
                "expected {} matrix",
                if want_symmetric { "symmetric" } else { "general" }
            ),
        ));
    }
    for (idx, line) in lines {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(parse_err(idx + 1, "size line must be `rows cols nnz`"));
        }
        let rows = parts[0]
            .parse()
            .map_err(|_| parse_err(idx + 1, "bad row count"))?;
        let cols = parts[1]
            .parse()
            .map_err(|_| parse_err(idx + 1, "bad column count"))?;
        let nnz = parts[2]
            .parse()
            .map_err(|_| parse_err(idx + 1, "bad nnz count"))?;
        return Ok(Header {
            rows,
            cols,
            nnz,
            symmetric,
            body_start: idx + 1,
        });
    }
    Err(parse_err(0, "missing size line"))
}

fn parse_entries(
    text: &str,
    header: &Header,
) -> Result<Vec<(usize, usize, f64)>, LinalgError> {
    let mut entries = Vec::with_capacity(header.nnz);
    for (idx, line) in text.lines().enumerate().skip(header.body_start) {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(parse_err(idx + 1, "entry must be `row col value`"));
        }
        let i: usize = parts[0]
            .parse()
            .map_err(|_| parse_err(idx + 1, "bad row index"))?;
        let j: usize = parts[1]
            .parse()
            .map_err(|_| parse_err(idx + 1, "bad column index"))?;
        let v: f64 = parts[2]
            .parse()
            .map_err(|_| parse_err(idx + 1, "bad value"))?;
        if i == 0 || j == 0 || i > header.rows || j > header.cols {
            return Err(parse_err(idx + 1, "index out of declared bounds"));
        }
        if header.symmetric && j > i {
            return Err(parse_err(
                idx + 1,
                "symmetric storage must hold the lower triangle (row ≥ col)",
            ));
        }
        entries.push((i - 1, j - 1, v));
    }
    if entries.len() != header.nnz {
        return Err(parse_err(
            0,
            format!("declared {} entries, found {}", header.nnz, entries.len()),
        ));
    }
    Ok(entries)
}

/// Reads a symmetric matrix from Matrix Market coordinate text
/// (lower-triangle storage).
pub fn read_sparse_sym(text: &str) -> Result<SparseSym, LinalgError> {
    let header = parse_header(text, true)?;
    if header.rows != header.cols {
        return Err(parse_err(0, "symmetric matrix must be square"));
    }
    let entries = parse_entries(text, &header)?;
    SparseSym::from_triplets(header.rows, &entries)
}

/// Writes the lower triangle of a symmetric matrix in coordinate form.
pub fn write_sparse_sym(m: &SparseSym) -> String {
    let mut entries = Vec::new();
    for j in 0..m.n() {
        for (i, v) in m.col(j) {
            if i >= j {
                entries.push((i, j, v));
            }
        }
    }
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix coordinate real symmetric\n");
    let _ = writeln!(out, "{} {} {}", m.n(), m.n(), entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v);
    }
    out
}

/// Reads an `n×m` two-nonzero factor from general coordinate text.
pub fn read_two_nnz_factor(text: &str) -> Result<TwoNnzFactor, LinalgError> {
    let header = parse_header(text, false)?;
    let entries = parse_entries(text, &header)?;
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); header.cols];
    for (i, j, v) in entries {
        columns[j].push((i, v));
    }
    TwoNnzFactor::new(header.rows, columns)
}

/// Writes a two-nonzero factor in general coordinate form.
pub fn write_two_nnz_factor(f: &TwoNnzFactor) -> String {
    let mut entries = Vec::new();
    for j in 0..f.cols() {
        for (r, v) in f.col_entries(j) {
            if r != usize::MAX {
                entries.push((r, j, v));
            }
        }
    }
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", f.rows(), f.cols(), entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v);
    }
    out
}
