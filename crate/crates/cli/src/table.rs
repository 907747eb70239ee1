//! Numeric CSV input.
//!
//! Fields are comma-separated with `.` as the decimal mark. A first row that
//! does not parse as numbers is taken as a header and skipped.

use std::fs::File;
use std::io::{self, Read};
use std::path::Path;

use crate::error::CliError;

/// Rows of a numeric table, all of the same width.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn columns(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// The single column of a one-column table.
    pub fn single_column(&self) -> Result<Vec<f64>, CliError> {
        if self.columns() != 1 {
            return Err(CliError::Input(format!(
                "expected a single column of numbers, found {} columns",
                self.columns()
            )));
        }
        Ok(self.rows.iter().map(|r| r[0]).collect())
    }
}

/// Reads the file at `path`, or standard input when `path` is `-`.
pub fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    let res = if path == Path::new("-") {
        io::stdin().read_to_end(&mut buf)
    } else {
        File::open(path).and_then(|mut f| f.read_to_end(&mut buf))
    };
    res.map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(buf)
}

fn parse_row(record: &csv::StringRecord) -> Option<Vec<f64>> {
    record
        .iter()
        .map(|field| field.parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect()
}

pub fn parse_table(bytes: &[u8]) -> Result<Table, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(bytes);
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("malformed CSV: {e}")))?;
        match parse_row(&record) {
            Some(row) => rows.push(row),
            None if line == 0 => {}
            None => {
                return Err(CliError::Input(format!(
                    "row {} is not numeric: {:?}",
                    line + 1,
                    record.iter().collect::<Vec<_>>()
                )))
            }
        }
    }
    let width = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || width == 0 {
        return Err(CliError::Input("input contains no numeric rows".into()));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != width) {
        return Err(CliError::Input(format!(
            "row {} has {} fields, expected {width}",
            bad + 1,
            rows[bad].len()
        )));
    }
    Ok(Table { rows })
}
