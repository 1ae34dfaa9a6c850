//! Feature and label file formats.
//!
//! Feature files come in two layouts:
//!
//! * headerless CSV, one sample per row, decimal floating point;
//! * binary: the magic bytes `SCL1`, a little-endian `u32` row count, a
//!   little-endian `u32` column count, then row-major little-endian IEEE-754
//!   `f64` values.
//!
//! The reader picks the layout from the first four bytes. Label files are
//! headerless CSV with one integer per line (0 = background). Label pair
//! files hold `index,label` lines with an optional `index,label` header.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Result, ScaleError};

pub const BINARY_MAGIC: &[u8; 4] = b"SCL1";

pub fn read_features(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| ScaleError::io(path, e))?;
    let m = if bytes.starts_with(BINARY_MAGIC) {
        decode_binary(path, &bytes)?
    } else {
        let text = std::str::from_utf8(&bytes).map_err(|_| ScaleError::format(path, "neither SCL1 binary nor UTF-8 CSV"))?;
        parse_csv_features(path, text)?
    };
    if let Some((i, j)) = first_non_finite(&m) {
        return Err(ScaleError::data(format!(
            "{}: non-finite value at row {i}, column {j}",
            path.display()
        )));
    }
    Ok(m)
}

fn first_non_finite(m: &DMatrix<f64>) -> Option<(usize, usize)> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if !m[(i, j)].is_finite() {
                return Some((i, j));
            }
        }
    }
    None
}

fn decode_binary(path: &Path, bytes: &[u8]) -> Result<DMatrix<f64>> {
    if bytes.len() < 12 {
        return Err(ScaleError::format(path, "truncated SCL1 header"));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| ScaleError::format(path, "SCL1 dimensions overflow"))?;
    if body.len() != expected {
        return Err(ScaleError::format(
            path,
            format!("SCL1 header announces {rows}x{cols} values ({expected} bytes) but body has {} bytes", body.len()),
        ));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

fn parse_csv_features(path: &Path, text: &str) -> Result<DMatrix<f64>> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let before = values.len();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                ScaleError::format(path, format!("line {}: cannot parse {field:?} as a number", lineno + 1))
            })?;
            values.push(v);
        }
        let width = values.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(ScaleError::format(
                    path,
                    format!("line {}: expected {c} columns, found {width}", lineno + 1),
                ))
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| ScaleError::format(path, "no data rows"))?;
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

pub fn encode_binary(features: &DMatrix<f64>) -> Vec<u8> {
    let (rows, cols) = features.shape();
    let mut out = Vec::with_capacity(12 + rows * cols * 8);
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    for i in 0..rows {
        for j in 0..cols {
            out.extend_from_slice(&features[(i, j)].to_le_bytes());
        }
    }
    out
}

pub fn write_features_binary(path: impl AsRef<Path>, features: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_binary(features)).map_err(|e| ScaleError::io(path, e))
}

pub fn write_features_csv(path: impl AsRef<Path>, features: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for i in 0..features.nrows() {
        let row: Vec<String> = features.row(i).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| ScaleError::io(path, e))
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<u32>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| ScaleError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|_| ScaleError::format(path, format!("line {}: {l:?} is not a label", i + 1)))
        })
        .collect()
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[u32]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| ScaleError::io(path, e))
}

/// Reads `index,label` pairs.
pub fn read_label_pairs(path: impl AsRef<Path>) -> Result<Vec<(usize, u32)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| ScaleError::io(path, e))?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.replace(' ', "") == "index,label") {
            continue;
        }
        let bad = || ScaleError::format(path, format!("line {}: expected `index,label`, got {line:?}", i + 1));
        let (idx, label) = line.split_once(',').ok_or_else(bad)?;
        let idx = idx.trim().parse().map_err(|_| bad())?;
        let label = label.trim().parse().map_err(|_| bad())?;
        pairs.push((idx, label));
    }
    Ok(pairs)
}

/// Query log with header `order,index,label`.
pub fn write_query_log(mut out: impl Write, queried: &[(usize, u32)]) -> std::io::Result<()> {
    writeln!(out, "order,index,label")?;
    for (order, (idx, label)) in queried.iter().enumerate() {
        writeln!(out, "{order},{idx},{label}")?;
    }
    Ok(())
}
