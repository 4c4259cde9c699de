//! Delimited-text input: one row per observation with a timestamp and a value.

use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeZone, Utc};
use qcone_core::decompose::IndexSeries;
use serde::{Deserialize, Serialize};

use crate::config::DataConfig;
use crate::error::{CliError, ErrorKind, Stage};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum TimestampFormat {
    /// Integer epoch seconds, RFC 3339, `YYYY-MM-DD HH:MM:SS` or a bare date.
    Auto,
    Epoch,
    Iso,
    Date,
    /// chrono format string for a naive UTC date-time.
    Custom(String),
}

impl From<String> for TimestampFormat {
    fn from(s: String) -> Self {
        match s.as_str() {
            "auto" => Self::Auto,
            "epoch" => Self::Epoch,
            "iso" => Self::Iso,
            "date" => Self::Date,
            _ => Self::Custom(s),
        }
    }
}

impl From<TimestampFormat> for String {
    fn from(f: TimestampFormat) -> Self {
        match f {
            TimestampFormat::Auto => "auto".into(),
            TimestampFormat::Epoch => "epoch".into(),
            TimestampFormat::Iso => "iso".into(),
            TimestampFormat::Date => "date".into(),
            TimestampFormat::Custom(s) => s,
        }
    }
}

fn parse_epoch(s: &str) -> Option<i64> {
    s.parse::<i64>().ok()
}

fn parse_iso(s: &str) -> Option<i64> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.timestamp());
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|t| t.and_utc().timestamp())
}

fn parse_date(s: &str) -> Option<i64> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp())
}

/// Seconds since the epoch (UTC) of `s` under `format`.
pub fn parse_timestamp(s: &str, format: &TimestampFormat) -> Result<i64, String> {
    let s = s.trim();
    let parsed = match format {
        TimestampFormat::Auto => parse_epoch(s).or_else(|| parse_iso(s)).or_else(|| parse_date(s)),
        TimestampFormat::Epoch => parse_epoch(s),
        TimestampFormat::Iso => parse_iso(s),
        TimestampFormat::Date => parse_date(s),
        TimestampFormat::Custom(f) => NaiveDateTime::parse_from_str(s, f)
            .map(|t| t.and_utc().timestamp())
            .or_else(|_| NaiveDate::parse_from_str(s, f).map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp()))
            .ok(),
    };
    parsed.ok_or_else(|| format!("cannot parse timestamp {s:?} as {}", String::from(format.clone())))
}

/// `YYYY-MM-DDTHH:MM:SSZ`.
pub fn format_timestamp(t: i64) -> String {
    match Utc.timestamp_opt(t, 0).single() {
        Some(d) => d.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        None => t.to_string(),
    }
}

/// One parsed observation and the line it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub line: u64,
    pub timestamp: i64,
    pub value: f64,
}

fn data_error(path: &Path, message: String) -> CliError {
    CliError::data(format!("{}: {message}", path.display()))
}

/// Parses every row of `path`, checking order and duplicates.
pub fn read_rows(path: &Path, cfg: &DataConfig) -> Result<Vec<Row>, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::new(Stage::Ingest, ErrorKind::Config, format!("cannot read input {}: {e}", path.display())))?;
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(data_error(path, "input is empty".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(cfg.delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let headers = reader.headers().map_err(|e| data_error(path, format!("malformed header: {e}")))?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::new(
                Stage::Ingest,
                ErrorKind::Config,
                format!(
                    "{}: column {name:?} not found (available: {})",
                    path.display(),
                    headers.iter().collect::<Vec<_>>().join(", ")
                ),
            )
        })
    };
    let ts_col = column(&cfg.timestamp_column)?;
    let val_col = column(&cfg.value_column)?;

    let mut rows: Vec<Row> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            data_error(path, format!("line {line}: malformed row: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let field = |col: usize, name: &str| {
            record
                .get(col)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| data_error(path, format!("line {line}, column {} ({name}): missing value", col + 1)))
        };
        let timestamp = parse_timestamp(field(ts_col, &cfg.timestamp_column)?, &cfg.timestamp_format).map_err(|m| {
            data_error(path, format!("line {line}, column {} ({}): {m}", ts_col + 1, cfg.timestamp_column))
        })?;
        let raw = field(val_col, &cfg.value_column)?;
        let value: f64 = raw.parse().map_err(|_| {
            data_error(path, format!("line {line}, column {} ({}): cannot parse {raw:?} as a number", val_col + 1, cfg.value_column))
        })?;
        if !(value.is_finite() && value > 0.0) {
            return Err(data_error(
                path,
                format!("line {line}, column {} ({}): index values must be positive and finite, got {raw}", val_col + 1, cfg.value_column),
            ));
        }
        if let Some(prev) = rows.last() {
            if timestamp == prev.timestamp {
                return Err(data_error(
                    path,
                    format!("line {line}: duplicate timestamp {} (also on line {})", format_timestamp(timestamp), prev.line),
                ));
            }
            if timestamp < prev.timestamp {
                return Err(data_error(
                    path,
                    format!(
                        "line {line}: timestamp {} is earlier than {} on line {}; rows must be in ascending time order",
                        format_timestamp(timestamp),
                        format_timestamp(prev.timestamp),
                        prev.line
                    ),
                ));
            }
        }
        rows.push(Row { line, timestamp, value });
    }
    if rows.is_empty() {
        return Err(data_error(path, "input has a header but no observations".into()));
    }
    Ok(rows)
}

/// Smallest gap between consecutive timestamps.
pub fn infer_resolution(rows: &[Row]) -> Option<i64> {
    rows.windows(2).map(|w| w[1].timestamp - w[0].timestamp).min()
}

pub fn series_from_rows(rows: &[Row], resolution: Option<i64>) -> Result<IndexSeries, CliError> {
    let resolution = resolution.or_else(|| infer_resolution(rows)).unwrap_or(1);
    IndexSeries::new(
        rows.iter().map(|r| r.timestamp).collect(),
        rows.iter().map(|r| r.value).collect(),
        resolution,
    )
    .map_err(|e| CliError::from_core(Stage::Ingest, e))
}

/// Reads and validates the configured input.
pub fn ingest(path: &Path, cfg: &DataConfig) -> Result<IndexSeries, CliError> {
    let rows = read_rows(path, cfg)?;
    series_from_rows(&rows, cfg.resolution_secs)
}
