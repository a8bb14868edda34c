//! Input parsing (data CSV, prior and scenario JSON, draws CSV) and fixed
//! numeric formatting for outputs.

use std::fs;
use std::path::Path;

use synprior::prior::PriorEntry;
use synprior::scenarios::ScenarioFile;
use synprior::{BcjPrior, Dataset, PosteriorDraws};

use crate::error::{CliError, CliResult};

pub const INTERCEPT_LABEL: &str = "(Intercept)";

pub fn read_to_string(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::new(crate::error::Category::Io, format!("{}: {e}", path.display())))
}

/// A parsed data file with coefficient labels matching the design columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedData {
    pub data: Dataset,
    pub labels: Vec<String>,
}

/// Parses a header-led CSV with a 0/1 column `y`; every other column is a
/// covariate, in file order. An intercept column is prepended when asked.
pub fn parse_data_csv(text: &str, intercept: bool) -> CliResult<LoadedData> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::parse(format!("data header: {e}")))?
        .clone();
    let y_col = headers
        .iter()
        .position(|h| h == "y")
        .ok_or_else(|| CliError::parse("data header has no `y` column"))?;
    let covariates: Vec<usize> = (0..headers.len()).filter(|&i| i != y_col).collect();

    let mut labels = Vec::new();
    if intercept {
        labels.push(INTERCEPT_LABEL.to_string());
    }
    labels.extend(covariates.iter().map(|&i| headers[i].to_string()));
    if labels.is_empty() {
        return Err(CliError::parse("data has no covariate columns and no intercept"));
    }

    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row_no = idx + 1;
        let record = record.map_err(|e| CliError::parse(format!("data row {row_no}: {e}")))?;
        let line = record.position().map_or(row_no + 1, |p| p.line() as usize);
        let field = |i: usize| -> CliResult<f64> {
            let raw = record.get(i).unwrap_or("");
            raw.parse::<f64>().map_err(|_| {
                CliError::parse(format!(
                    "data row {row_no} (line {line}): column `{}` value `{raw}` is not a number",
                    &headers[i]
                ))
            })
        };
        let yv = field(y_col)?;
        if yv != 0.0 && yv != 1.0 {
            return Err(CliError::parse(format!("data row {row_no} (line {line}): y must be 0 or 1, got {yv}")));
        }
        let mut x = Vec::with_capacity(labels.len());
        if intercept {
            x.push(1.0);
        }
        for &c in &covariates {
            x.push(field(c)?);
        }
        rows.push(x);
        y.push(yv as u8);
    }
    if rows.is_empty() {
        return Err(CliError::parse("data file has no rows"));
    }
    Ok(LoadedData {
        data: Dataset::new(rows, y)?,
        labels,
    })
}

pub fn parse_prior(text: &str) -> CliResult<BcjPrior> {
    let entries: Vec<PriorEntry> = serde_json::from_str(text).map_err(|e| {
        CliError::parse(format!("prior file (line {}, column {}): {e}", e.line(), e.column()))
    })?;
    BcjPrior::from_entries(&entries).map_err(|e| CliError::parse(e.to_string()))
}

pub fn parse_scenario(text: &str) -> CliResult<ScenarioFile> {
    serde_json::from_str(text).map_err(|e| {
        CliError::parse(format!("scenario file (line {}, column {}): {e}", e.line(), e.column()))
    })
}

/// Reads draws written by `fit`: a header of labels, one draw per row.
pub fn parse_draws_csv(text: &str) -> CliResult<PosteriorDraws> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let labels: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::parse(format!("draws header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row_no = idx + 1;
        let record = record.map_err(|e| CliError::parse(format!("draws row {row_no}: {e}")))?;
        let row = record
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| CliError::parse(format!("draws row {row_no}: non-numeric value")))?;
        rows.push(row);
    }
    Ok(PosteriorDraws::from_rows(rows, labels)?)
}

/// Probability with four decimals.
pub fn prob(v: f64) -> String {
    format!("{v:.4}")
}

/// Percentage (of a probability) with one decimal.
pub fn pct(v: f64) -> String {
    format!("{:.1}", 100.0 * v)
}

/// Dose or temperature label.
pub fn num(v: f64) -> String {
    format!("{v:.1}")
}
