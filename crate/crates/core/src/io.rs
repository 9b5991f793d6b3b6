//! CSV input and output for datasets and matrices.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Parses headerless numeric CSV (optionally skipping one header line) into
/// rows of equal length. Errors carry 1-based line and column numbers.
pub fn parse_rows(input: impl Read, header: bool) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Parse {
                line,
                column: 0,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let mut row = Vec::with_capacity(record.len());
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                column: col + 1,
                message: format!("'{field}' is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line,
                    column: col + 1,
                    message: format!("'{field}' is not finite"),
                });
            }
            row.push(value);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    line,
                    column: row.len().min(first.len()) + 1,
                    message: format!("expected {} fields, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a dataset: one observation per line, one variable per column.
pub fn read_dataset(path: &Path, header: bool) -> Result<Dataset> {
    let rows = parse_rows(File::open(path)?, header)?;
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            column: 0,
            message: format!("{} holds no data rows", path.display()),
        });
    }
    Dataset::from_rows(&rows)
}

/// Reads a square symmetric matrix written as `p` lines of `p` values.
pub fn read_matrix(path: &Path) -> Result<SymMatrix> {
    let rows = parse_rows(File::open(path)?, false)?;
    if rows.is_empty() || rows.len() != rows[0].len() {
        return Err(Error::Parse {
            line: rows.len() as u64,
            column: 0,
            message: format!(
                "{} is not a square matrix ({} rows of {} values)",
                path.display(),
                rows.len(),
                rows.first().map_or(0, Vec::len)
            ),
        });
    }
    SymMatrix::from_rows(&rows)
}

/// Writes `m` as `p` lines of `p` comma-separated values. Values use the
/// shortest representation that reads back to the same `f64`.
pub fn write_matrix(path: &Path, m: &SymMatrix) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_matrix_to(&mut out, m)?;
    out.flush()?;
    Ok(())
}

pub fn write_matrix_to(out: &mut impl Write, m: &SymMatrix) -> Result<()> {
    for row in m.to_rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}
