//! CSV ingestion for price or return columns.

use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// Column names accepted for `--returns` when `--column` is not given.
pub const RETURN_COLUMNS: [&str; 3] = ["return", "returns", "observed"];
pub const PRICE_COLUMN: &str = "price";
pub const DATE_COLUMN: &str = "date";

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Prices,
    Returns,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputData {
    pub path: PathBuf,
    pub kind: InputKind,
    pub column: String,
    /// Returns, after differencing log prices when the input holds prices.
    pub returns: Vec<f64>,
    /// Dates aligned with `returns`, when the file has a `date` column.
    pub dates: Option<Vec<String>>,
}

fn parse_value(raw: &str, line: u64, column: &str) -> CliResult<f64> {
    raw.trim().parse::<f64>().map_err(|_| {
        CliError::data(format!("line {line}, column '{column}': cannot parse '{raw}' as a number"))
    })
}

pub fn read_input(path: &Path, kind: InputKind, column: Option<&str>) -> CliResult<InputData> {
    if !path.exists() {
        return Err(CliError::data(format!("file not found: {}", path.display())));
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (idx, name) = match (column, kind) {
        (Some(c), _) => (find(c), c.to_string()),
        (None, InputKind::Prices) => (find(PRICE_COLUMN), PRICE_COLUMN.to_string()),
        (None, InputKind::Returns) => RETURN_COLUMNS
            .iter()
            .find_map(|c| find(c).map(|i| (Some(i), c.to_string())))
            .unwrap_or((None, RETURN_COLUMNS[0].to_string())),
    };
    let idx = idx.ok_or_else(|| {
        CliError::data(format!(
            "{}: no column '{name}' in header [{}]",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(", ")
        ))
    })?;
    let date_idx = find(DATE_COLUMN);

    let mut values = Vec::new();
    let mut dates = date_idx.map(|_| Vec::new());
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let raw = record
            .get(idx)
            .ok_or_else(|| CliError::data(format!("line {line}: missing column '{name}'")))?;
        values.push(parse_value(raw, line, &name)?);
        if let (Some(d), Some(i)) = (dates.as_mut(), date_idx) {
            d.push(record.get(i).unwrap_or("").to_string());
        }
    }

    let returns = match kind {
        InputKind::Returns => values,
        InputKind::Prices => {
            if let Some(pos) = values.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
                return Err(CliError::data(format!("price at data row {} must be positive and finite", pos + 1)));
            }
            if let Some(d) = dates.as_mut() {
                if !d.is_empty() {
                    d.remove(0);
                }
            }
            values.windows(2).map(|w| w[1].ln() - w[0].ln()).collect()
        }
    };
    Ok(InputData { path: path.to_path_buf(), kind, column: name, returns, dates })
}
