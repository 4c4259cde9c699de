//! Output tables (comma-separated, one header row) and the run manifest.
//!
//! | file                 | columns                                                                  |
//! |----------------------|--------------------------------------------------------------------------|
//! | `decomposition.csv`  | timestamp, index, return, trend, fluctuation                             |
//! | `curves.csv`         | horizon, q, q_se, beta, beta_se, alpha, alpha_se, diffusion, zone, misfit, quality |
//! | `zones.csv`          | label, start, end, slope, alpha                                          |
//! | `trend.csv`          | step, value, derivative                                                  |
//! | `cone_laws.csv`      | step, trend, q, beta                                                     |
//! | `cone_grid.csv`      | step, price, probability                                                 |
//! | `contours.csv`       | level, step, lower, upper                                                |
//! | `paths_summary.csv`  | step, mean, median, lower, upper                                         |
//! | `accuracy.csv`       | timestamp, step, value, lower, upper, inside                             |
//!
//! Steps count sampling intervals of the input after the forecast anchor;
//! horizons count them as lags. Timestamps are ISO 8601 UTC.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRow {
    pub timestamp: String,
    pub index: f64,
    #[serde(rename = "return")]
    pub price_return: f64,
    pub trend: f64,
    pub fluctuation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub horizon: f64,
    pub q: f64,
    pub q_se: f64,
    pub beta: f64,
    pub beta_se: f64,
    pub alpha: f64,
    pub alpha_se: f64,
    pub diffusion: f64,
    pub zone: Option<String>,
    pub misfit: f64,
    pub quality: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneRow {
    /// `A`, `B`, `C` or `crossover`.
    pub label: String,
    pub start: f64,
    pub end: f64,
    pub slope: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub step: usize,
    pub value: f64,
    pub derivative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawRow {
    pub step: usize,
    pub trend: f64,
    pub q: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub step: usize,
    pub price: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourRow {
    pub level: f64,
    pub step: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummaryRow {
    pub step: usize,
    pub mean: f64,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub timestamp: String,
    pub step: usize,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub inside: bool,
}

pub fn to_csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::io(Stage::Output, format!("cannot serialize row: {e}")))?;
    }
    w.into_inner().map_err(|e| CliError::io(Stage::Output, format!("cannot flush table: {e}")))
}

pub fn from_csv_bytes<T: DeserializeOwned>(bytes: &[u8]) -> Result<Vec<T>, CliError> {
    csv::Reader::from_reader(bytes)
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::data(format!("malformed table: {e}")))
}

pub fn read_table<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    from_csv_bytes(&bytes).map_err(|e| CliError::data(format!("{}: {}", path.display(), e.message)))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Record of a run: resolved configuration, input and output hashes and the
/// headline results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub input_sha256: String,
    /// Output file name to SHA-256 of its bytes.
    pub outputs: BTreeMap<String, String>,
    /// Headline numbers, e.g. accuracy and zone boundaries.
    pub results: BTreeMap<String, ResultValue>,
    pub config: toml::Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ResultValue {
    Number(f64),
    Text(String),
    Flag(bool),
}

impl Manifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::data(format!("malformed manifest: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

/// Output files staged in a scratch directory and moved into place only when
/// the whole command succeeds.
pub struct Staging {
    dir: std::path::PathBuf,
    out: std::path::PathBuf,
    files: BTreeMap<String, String>,
}

impl Staging {
    pub fn new(out: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(out)
            .map_err(|e| CliError::io(Stage::Output, format!("cannot create {}: {e}", out.display())))?;
        let dir = out.join(format!(".staging-{}", std::process::id()));
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(|e| CliError::io(Stage::Output, format!("cannot clear {}: {e}", dir.display())))?;
        }
        std::fs::create_dir(&dir).map_err(|e| CliError::io(Stage::Output, format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir, out: out.to_path_buf(), files: BTreeMap::new() })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut f = std::fs::File::create(&path)
            .map_err(|e| CliError::io(Stage::Output, format!("cannot create {}: {e}", path.display())))?;
        f.write_all(bytes).map_err(|e| CliError::io(Stage::Output, format!("cannot write {}: {e}", path.display())))?;
        self.files.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_table<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let bytes = to_csv_bytes(rows)?;
        self.write_bytes(name, &bytes)
    }

    /// Hashes of the files staged so far.
    pub fn hashes(&self) -> &BTreeMap<String, String> {
        &self.files
    }

    /// Moves every staged file into the output directory.
    pub fn commit(self) -> Result<Vec<String>, CliError> {
        let names: Vec<String> = self.files.keys().cloned().collect();
        for name in &names {
            std::fs::rename(self.dir.join(name), self.out.join(name))
                .map_err(|e| CliError::io(Stage::Output, format!("cannot move {name} into {}: {e}", self.out.display())))?;
        }
        let _ = std::fs::remove_dir_all(&self.dir);
        Ok(names)
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.dir);
    }
}
