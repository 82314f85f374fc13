//! CSV ingestion and emission.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use assoc::{AssocError, DataTable};
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}:{line}: column '{column}': cannot parse '{cell}' as a finite number")]
    NonNumericCell {
        path: String,
        line: usize,
        column: String,
        cell: String,
    },

    #[error("{path}:{line}: expected {expected} fields, found {found}")]
    RaggedRows {
        path: String,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{0}: table has no data rows")]
    EmptyTable(String),

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Assoc(#[from] AssocError),
}

impl CliError {
    /// 2 for input validation problems, 3 for numerical degeneracies.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Assoc(e) => match e {
                AssocError::DegenerateTable(_)
                | AssocError::NumericalInconsistency(_)
                | AssocError::NotPositiveDefinite
                | AssocError::NotPsd(_)
                | AssocError::ZeroVarianceColumn(_)
                | AssocError::NonFinite(_) => 3,
                _ => 2,
            },
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

struct RawCsv {
    headers: Vec<String>,
    row_labels: Vec<String>,
    values: Vec<Vec<f64>>,
}

fn read_csv(path: &Path, has_row_ids: bool) -> Result<RawCsv> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| CliError::Io {
        path: display.clone(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(BufReader::new(file));
    let header_record = reader
        .headers()
        .map_err(|e| CliError::Parse {
            path: display.clone(),
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    let mut headers: Vec<String> = header_record.iter().map(|s| s.trim().to_string()).collect();
    if has_row_ids {
        if headers.is_empty() {
            return Err(CliError::EmptyTable(display));
        }
        headers.remove(0);
    }
    if headers.is_empty() {
        return Err(CliError::EmptyTable(display));
    }
    let expected = headers.len() + has_row_ids as usize;
    let mut row_labels = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| CliError::Parse {
            path: display.clone(),
            line,
            msg: e.to_string(),
        })?;
        if record.len() != expected {
            return Err(CliError::RaggedRows {
                path: display.clone(),
                line,
                expected,
                found: record.len(),
            });
        }
        let mut cells = record.iter();
        if has_row_ids {
            row_labels.push(cells.next().unwrap().trim().to_string());
        } else {
            row_labels.push(format!("r{idx}"));
        }
        let mut row = Vec::with_capacity(headers.len());
        for (cell, name) in cells.zip(&headers) {
            let parsed: Option<f64> = cell.trim().parse().ok().filter(|v: &f64| v.is_finite());
            match parsed {
                Some(v) => row.push(v),
                None => {
                    return Err(CliError::NonNumericCell {
                        path: display.clone(),
                        line,
                        column: name.clone(),
                        cell: cell.to_string(),
                    })
                }
            }
        }
        values.push(row);
    }
    if values.is_empty() {
        return Err(CliError::EmptyTable(display));
    }
    Ok(RawCsv {
        headers,
        row_labels,
        values,
    })
}

/// Loads an observations-by-variables CSV (header row required).
pub fn load_table(path: &Path, has_row_ids: bool) -> Result<DataTable> {
    let raw = read_csv(path, has_row_ids)?;
    let n = raw.values.len();
    let p = raw.headers.len();
    let values = DMatrix::from_fn(n, p, |i, j| raw.values[i][j]);
    Ok(DataTable::new(
        values,
        Some(raw.row_labels),
        Some(raw.headers),
    )?)
}

/// Loads a square matrix CSV (header row plus optional row-id column).
pub fn load_square(path: &Path, has_row_ids: bool) -> Result<(DMatrix<f64>, Vec<String>)> {
    let raw = read_csv(path, has_row_ids)?;
    let n = raw.values.len();
    if raw.headers.len() != n {
        return Err(CliError::Invalid(format!(
            "{}: matrix input must be square, got {} rows x {} columns",
            path.display(),
            n,
            raw.headers.len()
        )));
    }
    let values = DMatrix::from_fn(n, n, |i, j| raw.values[i][j]);
    let labels = if has_row_ids {
        raw.row_labels
    } else {
        raw.headers
    };
    Ok((values, labels))
}

/// Serializes a table back to CSV; `{}` on f64 prints the shortest decimal
/// that round-trips.
pub fn table_to_csv(t: &DataTable, with_row_ids: bool) -> String {
    let mut out = String::new();
    if with_row_ids {
        out.push_str("id,");
    }
    out.push_str(&t.col_labels().join(","));
    out.push('\n');
    for i in 0..t.nrows() {
        let mut fields = Vec::with_capacity(t.ncols() + 1);
        if with_row_ids {
            fields.push(t.row_labels()[i].clone());
        }
        for j in 0..t.ncols() {
            fields.push(format!("{}", t.values()[(i, j)]));
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Writes to the given path, or stdout when absent.
pub fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            let mut f = File::create(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            f.write_all(content.as_bytes()).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })
        }
        None => {
            let mut stdout = std::io::stdout();
            stdout
                .write_all(content.as_bytes())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}
