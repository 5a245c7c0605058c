use std::path::Path;

use crate::error::{CliError, CliResult};

/// Numeric values from the first column of a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub values: Vec<f64>,
    /// Rows that were empty, non-numeric or non-finite (a header is not counted).
    pub dropped: usize,
    pub header: bool,
}

/// Reads a single-column CSV (optional header). Cells that do not parse as
/// finite numbers are dropped and counted.
pub fn read_sample(path: &Path) -> CliResult<Sample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::new();
    let mut dropped = 0;
    let mut header = false;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let cell = record.get(0).unwrap_or("");
        match cell.parse::<f64>().ok().filter(|x| x.is_finite()) {
            Some(x) => values.push(x),
            None if i == 0 && !cell.is_empty() && cell.parse::<f64>().is_err() => header = true,
            None => dropped += 1,
        }
    }
    Ok(Sample {
        values,
        dropped,
        header,
    })
}
