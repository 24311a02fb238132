use serde::Serialize;

use crate::error::{Error, Module, Result};

const MODULE: Module = Module::Harness;

/// Column contract of the `compare` output.
pub const COMPARE_COLUMNS: [&str; 6] = ["n", "F_Q_map", "F_Q_closed", "F_C", "diff_QC", "diff_map_closed"];

/// One CSV field. Reals are written with 17 significant digits so they
/// round-trip exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Cell {
    Int(u64),
    Real(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Header plus rows, all of the header's width.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str], rows: Vec<Vec<Cell>>) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.len() != header.len()) {
            return Err(Error::consistency(
                MODULE,
                format!("row of width {} under a header of width {}", bad.len(), header.len()),
            ));
        }
        Ok(Table { header: header.iter().map(|s| s.to_string()).collect(), rows })
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// UTF-8 CSV with LF line endings and the header always present.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let fail = |e: csv::Error| Error::consistency(MODULE, format!("CSV encoding failed: {e}"));
        writer.write_record(&self.header).map_err(fail)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(Cell::render)).map_err(fail)?;
        }
        let bytes = writer.into_inner().map_err(|e| Error::consistency(MODULE, format!("CSV encoding failed: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::consistency(MODULE, format!("CSV is not UTF-8: {e}")))
    }
}

/// Verifies a `compare` CSV: exact header, integer step column counting up
/// from zero, finite reals in 17-digit scientific notation, and non-negative
/// difference columns.
pub fn check_compare_schema(text: &str) -> Result<()> {
    let bad = |message: String| Error::consistency(MODULE, format!("compare output violates its schema: {message}"));
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(COMPARE_COLUMNS) {
        return Err(bad(format!("header is {:?}", header.iter().collect::<Vec<_>>())));
    }
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let n: u64 =
            record[0].parse().map_err(|_| bad(format!("row {line}: step {:?} is not an integer", &record[0])))?;
        if n != line as u64 {
            return Err(bad(format!("row {line} has step {n}")));
        }
        for (col, field) in record.iter().enumerate().skip(1) {
            let mantissa_digits =
                field.split(['e', 'E']).next().map(|m| m.chars().filter(char::is_ascii_digit).count());
            if mantissa_digits != Some(17) || !field.contains('e') {
                return Err(bad(format!(
                    "row {line}, column {}: {field:?} is not 17-digit scientific",
                    COMPARE_COLUMNS[col]
                )));
            }
            let value: f64 = field.parse().map_err(|_| bad(format!("row {line}: {field:?} is not a number")))?;
            if !value.is_finite() || (col >= 4 && value < 0.0) {
                return Err(bad(format!("row {line}, column {}: value {value}", COMPARE_COLUMNS[col])));
            }
        }
    }
    Ok(())
}
