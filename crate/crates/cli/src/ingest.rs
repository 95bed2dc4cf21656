//! CSV ingestion: header row of variable names, one fully observed numeric
//! row per time point.

use nalgebra::DMatrix;

use givar::spectral::TimeSeries;
use givar::{Error, Result};

/// Reads a series from CSV. With `pre_centered` the columns must already
/// sum to zero (the `--no-demean` escape hatch); otherwise the series is
/// loaded raw and demeaned downstream.
pub fn load_series(path: &str, pre_centered: bool) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::InvalidData(format!("{path}: {e}")))?;
    let labels: Vec<String> = reader
        .headers()
        .map_err(|e| Error::InvalidData(format!("{path}: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if labels.is_empty() {
        return Err(Error::InvalidData(format!("{path}: empty header row")));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        // header is line 1, first data row is line 2
        let line = idx + 2;
        let record = record.map_err(|e| Error::InvalidData(format!("{path}: {e}")))?;
        if record.len() != labels.len() {
            return Err(Error::InvalidData(format!(
                "{path}: row {line} has {} fields, expected {}",
                record.len(),
                labels.len()
            )));
        }
        let mut row = Vec::with_capacity(labels.len());
        for (col, field) in record.iter().enumerate() {
            if field.is_empty() {
                return Err(Error::InvalidData(format!(
                    "{path}: row {line}, column {} ('{}'): missing value",
                    col + 1,
                    labels[col]
                )));
            }
            let value: f64 = field.parse().map_err(|_| {
                Error::InvalidData(format!(
                    "{path}: row {line}, column {} ('{}'): invalid number '{field}'",
                    col + 1,
                    labels[col]
                ))
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(Error::InvalidData(format!(
            "{path}: need at least two data rows, found {}",
            rows.len()
        )));
    }

    let data = DMatrix::from_fn(rows.len(), labels.len(), |i, j| rows[i][j]);
    if pre_centered {
        TimeSeries::new_demeaned(data, labels)
    } else {
        TimeSeries::new(data, labels)
    }
}
