//! Reading point tables from CSV or whitespace-separated text.
//!
//! Rows and columns in error messages are 1-based and count physical rows of
//! the file, header included. Blank lines are skipped.

use std::path::Path;

use ksm_core::PointSet;
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// CSV when the first non-blank line contains a comma, whitespace otherwise.
    Auto,
    Csv,
    Whitespace,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}, column {col}: cannot parse {value:?} as a number")]
    Parse {
        row: usize,
        col: usize,
        value: String,
    },
    #[error("row {row}, column {col}: non-finite value {value:?}")]
    NonFinite {
        row: usize,
        col: usize,
        value: String,
    },
    #[error("row {row} has {found} columns, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("input contains no data rows")]
    EmptyFile,
    #[error("{0}")]
    Invalid(String),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
}

pub fn ingest(path: &Path, format: Format) -> Result<PointSet, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_str(&text, format)
}

/// Splits `text` into `(row number, cells)` records.
fn records(text: &str, format: Format) -> Result<Vec<(usize, Vec<String>)>, IngestError> {
    let format = match format {
        Format::Auto => {
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
            if first.contains(',') {
                Format::Csv
            } else {
                Format::Whitespace
            }
        }
        f => f,
    };
    match format {
        Format::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .trim(csv::Trim::All)
                .from_reader(text.as_bytes());
            let mut out = Vec::new();
            for rec in reader.records() {
                let rec = rec?;
                let row = rec.position().map_or(out.len() + 1, |p| p.line() as usize);
                if rec.iter().all(|c| c.is_empty()) {
                    continue;
                }
                out.push((row, rec.iter().map(str::to_owned).collect()));
            }
            Ok(out)
        }
        _ => Ok(text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| (i + 1, l.split_whitespace().map(str::to_owned).collect()))
            .collect()),
    }
}

pub fn parse_str(text: &str, format: Format) -> Result<PointSet, IngestError> {
    let mut recs = records(text, format)?;
    // a first row that is not entirely numeric is a header
    if let Some((_, first)) = recs.first() {
        if first.iter().any(|c| c.parse::<f64>().is_err()) {
            recs.remove(0);
        }
    }
    let Some((_, first)) = recs.first() else {
        return Err(IngestError::EmptyFile);
    };
    let d = first.len();
    let mut values = Vec::with_capacity(recs.len() * d);
    for (row, cells) in &recs {
        if cells.len() != d {
            return Err(IngestError::RaggedRows {
                row: *row,
                expected: d,
                found: cells.len(),
            });
        }
        for (j, cell) in cells.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| IngestError::Parse {
                row: *row,
                col: j + 1,
                value: cell.clone(),
            })?;
            if !v.is_finite() {
                return Err(IngestError::NonFinite {
                    row: *row,
                    col: j + 1,
                    value: cell.clone(),
                });
            }
            values.push(v);
        }
    }
    PointSet::new(DMatrix::from_row_slice(recs.len(), d, &values))
        .map_err(|e| IngestError::Invalid(e.to_string()))
}
