//! Matrices as headerless CSV, one row per line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use lowrank_core::DenseMatrix;

#[derive(Debug, thiserror::Error)]
pub enum MatrixIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

fn parse_error(path: &Path, message: impl Into<String>) -> MatrixIoError {
    MatrixIoError::Parse {
        path: path.display().to_string(),
        message: message.into(),
    }
}

pub fn load_matrix(path: &Path) -> Result<DenseMatrix, MatrixIoError> {
    let file = File::open(path).map_err(|source| MatrixIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut entries = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, record) in reader.records().enumerate() {
        // The reader itself rejects rows whose length differs from the first.
        let record = record.map_err(|e| parse_error(path, e.to_string()))?;
        cols.get_or_insert(record.len());
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| {
                parse_error(path, format!("row {}: '{field}' is not a number", line + 1))
            })?;
            entries.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| parse_error(path, "empty matrix"))?;
    DenseMatrix::from_row_major(rows, cols, &entries).map_err(|e| parse_error(path, e.to_string()))
}

/// Writes every entry with 17 significant digits so reloading is lossless.
pub fn save_matrix(x: &DenseMatrix, path: &Path) -> Result<(), MatrixIoError> {
    let io_err = |source| MatrixIoError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for i in 0..x.rows() {
        let line: Vec<String> = x.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", line.join(",")).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}
