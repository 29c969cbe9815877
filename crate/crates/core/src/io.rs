//! CSV and JSON serialization of correlation-matrix batches.
//!
//! CSV layout: header `sample_id,rho_2_1,rho_3_1,rho_3_2,...` (1-based
//! indices, strictly-lower entries row-major), one matrix per line. Values use
//! the shortest representation that reads back bit-exactly.

use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::CorrelationMatrix;
use crate::samplers::{Method, SampleBatch};

/// Output format of the `sample` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::domain(format!("unknown format '{s}' (expected csv or json)"))),
        }
    }
}

/// Column names for a `dim × dim` matrix, `sample_id` first.
pub fn csv_header(dim: usize) -> Vec<String> {
    let mut cols = vec!["sample_id".to_string()];
    for i in 1..dim {
        for j in 0..i {
            cols.push(format!("rho_{}_{}", i + 1, j + 1));
        }
    }
    cols
}

/// Dimension whose strictly-lower triangle has `k` entries.
fn dim_from_offdiag_count(k: usize) -> Option<usize> {
    let mut t = 1usize;
    while t * (t - 1) / 2 < k {
        t += 1;
    }
    (t * (t - 1) / 2 == k).then_some(t)
}

pub fn write_matrices_csv<W: Write>(out: W, dim: usize, matrices: &[CorrelationMatrix]) -> Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "{}", csv_header(dim).join(","))?;
    for (id, p) in matrices.iter().enumerate() {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
        write!(w, "{id}")?;
        for v in p.lower_offdiag() {
            write!(w, ",{v:?}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV batch. With `expected_dim`, a header of another dimension is
/// an error. Every row must form a valid correlation matrix.
pub fn read_matrices_csv<R: Read>(input: R, expected_dim: Option<usize>) -> Result<Vec<CorrelationMatrix>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = rdr.headers().map_err(csv_error)?.clone();
    let dim = dim_from_offdiag_count(header.len().saturating_sub(1)).filter(|_| !header.is_empty());
    let dim = match dim {
        Some(d) if header.iter().eq(csv_header(d).iter().map(String::as_str)) => d,
        _ => {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: format!("unrecognized header '{}'", header.iter().collect::<Vec<_>>().join(",")),
            })
        }
    };
    if let Some(e) = expected_dim {
        if e != dim {
            return Err(Error::DimensionMismatch {
                expected: e,
                found: dim,
            });
        }
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut values = Vec::with_capacity(rec.len().saturating_sub(1));
        for (col, field) in rec.iter().enumerate().skip(1) {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                column: col + 1,
                message: format!("'{field}' is not a number"),
            })?;
            values.push(v);
        }
        if rec.get(0).is_some_and(|id| id.parse::<u64>().is_err()) {
            return Err(Error::Parse {
                line,
                column: 1,
                message: format!("'{}' is not a sample id", &rec[0]),
            });
        }
        let p = CorrelationMatrix::from_lower_offdiag(dim, &values)
            .map_err(|e| Error::InvalidCorrelation(format!("line {line}: {}", invariant(e))))?;
        out.push(p);
    }
    Ok(out)
}

fn invariant(e: Error) -> String {
    match e {
        Error::InvalidCorrelation(msg) => msg,
        other => other.to_string(),
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::Parse {
            line,
            column: (*len as usize).min(*expected_len as usize) + 1,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        _ => Error::Parse {
            line,
            column: 0,
            message: e.to_string(),
        },
    }
}

/// JSON form of a batch: its metadata, the CSV column names, and one array of
/// strictly-lower entries per matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchDocument {
    pub method: Method,
    pub dim: usize,
    pub dof: f64,
    pub eta: f64,
    pub seed: u64,
    pub retries: usize,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl BatchDocument {
    pub fn from_batch(batch: &SampleBatch) -> Self {
        Self {
            method: batch.method,
            dim: batch.dim,
            dof: batch.dof,
            eta: batch.eta,
            seed: batch.seed,
            retries: batch.retries,
            columns: csv_header(batch.dim)[1..].to_vec(),
            rows: batch.matrices.iter().map(|p| p.lower_offdiag()).collect(),
        }
    }

    pub fn matrices(&self) -> Result<Vec<CorrelationMatrix>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                CorrelationMatrix::from_lower_offdiag(self.dim, r)
                    .map_err(|e| Error::InvalidCorrelation(format!("row {i}: {}", invariant(e))))
            })
            .collect()
    }
}

pub fn write_batch_json<W: Write>(out: W, batch: &SampleBatch) -> Result<()> {
    write_json(out, &BatchDocument::from_batch(batch))
}

pub fn read_batch_json<R: Read>(input: R) -> Result<BatchDocument> {
    serde_json::from_reader(input).map_err(|e| Error::Parse {
        line: e.line() as u64,
        column: e.column(),
        message: e.to_string(),
    })
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(out: W, value: &T) -> Result<()> {
    let mut w = std::io::BufWriter::new(out);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_batch<W: Write>(out: W, batch: &SampleBatch, format: Format) -> Result<()> {
    match format {
        Format::Csv => write_matrices_csv(out, batch.dim, &batch.matrices),
        Format::Json => write_batch_json(out, batch),
    }
}
