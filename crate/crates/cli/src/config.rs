//! Run configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Stage};
use crate::ingest::TimestampFormat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub data: DataConfig,
    pub decompose: DecomposeConfig,
    pub estimate: EstimateConfig,
    pub zones: ZonesConfig,
    pub trend: TrendConfig,
    pub forecast: ForecastConfig,
    pub score: ScoreConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            out: PathBuf::from("qcone-out"),
            data: DataConfig::default(),
            decompose: DecomposeConfig::default(),
            estimate: EstimateConfig::default(),
            zones: ZonesConfig::default(),
            trend: TrendConfig::default(),
            forecast: ForecastConfig::default(),
            score: ScoreConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub input: PathBuf,
    pub timestamp_column: String,
    pub value_column: String,
    /// `auto`, `epoch`, `iso`, `date` or a chrono format string.
    pub timestamp_format: TimestampFormat,
    pub delimiter: char,
    /// Sampling step in seconds; inferred as the smallest timestamp gap when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution_secs: Option<i64>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::new(),
            timestamp_column: "timestamp".into(),
            value_column: "close".into(),
            timestamp_format: TimestampFormat::Auto,
            delimiter: ',',
            resolution_secs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeConfig {
    /// Start of the price return; the first observation when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<String>,
    /// Last observation used for estimation; the forecast anchor when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end: Option<String>,
    /// Moving-average window in steps.
    pub window: usize,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self { t0: None, end: None, window: 250 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    /// `pdf-ls`, `q-moments` or `cdf-ls`.
    pub method: String,
    /// Explicit lags in steps; overrides the log-spaced grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<usize>>,
    pub horizon_min: usize,
    pub horizon_max: usize,
    pub horizon_count: usize,
    pub min_samples: usize,
    /// Horizons per window of the local power-law fit for alpha.
    pub alpha_window: usize,
    /// Tolerances of the large-horizon convergence check.
    pub convergence_q_tol: f64,
    pub convergence_alpha_tol: f64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            method: "cdf-ls".into(),
            horizons: None,
            horizon_min: 1,
            horizon_max: 120,
            horizon_count: 24,
            min_samples: 500,
            alpha_window: 5,
            convergence_q_tol: 0.05,
            convergence_alpha_tol: 0.05,
        }
    }
}

impl EstimateConfig {
    pub fn horizon_list(&self) -> Result<Vec<usize>, CliError> {
        match &self.horizons {
            Some(h) => Ok(h.clone()),
            None => qcone_core::estimate::log_spaced_horizons(self.horizon_min, self.horizon_max, self.horizon_count)
                .map_err(|e| CliError::from_core(Stage::Config, e)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZonesConfig {
    /// Segment the horizons into zones; alpha windows ignore zones when off.
    pub enabled: bool,
    /// Smallest slope change accepted as a zone break (the sensitivity).
    pub min_slope_change: f64,
    pub crossover_points: usize,
    pub min_segment_points: usize,
    pub zone_c_alpha_tol: f64,
    pub zone_c_q_tol: f64,
}

impl Default for ZonesConfig {
    fn default() -> Self {
        let z = qcone_core::regimes::ZoneConfig::default();
        Self {
            enabled: true,
            min_slope_change: z.min_slope_change,
            crossover_points: z.crossover_points,
            min_segment_points: z.min_segment_points,
            zone_c_alpha_tol: z.zone_c_alpha_tol,
            zone_c_q_tol: z.zone_c_q_tol,
        }
    }
}

impl ZonesConfig {
    pub fn to_core(&self) -> qcone_core::regimes::ZoneConfig {
        qcone_core::regimes::ZoneConfig {
            min_slope_change: self.min_slope_change,
            crossover_points: self.crossover_points,
            min_segment_points: self.min_segment_points,
            zone_c_alpha_tol: self.zone_c_alpha_tol,
            zone_c_q_tol: self.zone_c_q_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrendKind {
    Parabola,
    Hyperbola,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrendConfig {
    pub kind: TrendKind,
    /// Forecast anchor; the last observation when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchor: Option<String>,
    /// Interval of the collapse-slope fit; `fit_end` defaults to the anchor.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_start: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_end: Option<String>,
    /// Collapse slope in price per step; fitted when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    /// Steps after the anchor at which the parabola is flat.
    pub recovery_time: f64,
    pub recovery_ratio: f64,
    /// Steps after the anchor at which the hyperbola's asymptotes cross;
    /// `recovery_time` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intersection_time: Option<f64>,
    /// Hyperbola smoothing in price units; 2% of the anchor level when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<f64>,
}

impl Default for TrendConfig {
    fn default() -> Self {
        Self {
            kind: TrendKind::Parabola,
            anchor: None,
            fit_start: None,
            fit_end: None,
            slope: None,
            recovery_time: 60.0,
            recovery_ratio: 0.5,
            intersection_time: None,
            smoothing: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastConfig {
    /// Forecast horizon in steps.
    pub horizon: usize,
    pub levels: Vec<f64>,
    pub price_points: usize,
    /// Steps between rows of the probability grid; about 200 rows when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_stride: Option<usize>,
    pub span_level: f64,
    pub paths: usize,
    /// Exceedance level of the central interval in the path summary.
    pub summary_level: f64,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            horizon: 60,
            levels: vec![0.15, 0.5, 0.85],
            price_points: 201,
            grid_stride: None,
            span_level: 0.01,
            paths: 1000,
            summary_level: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    /// Exceedance level of the scored band: observations count as inside when
    /// the two-sided exceedance probability of their deviation is at least
    /// this value, i.e. inside the band holding `1 - level` of the mass.
    pub level: f64,
    /// Separate file of realized observations (same layout as the input);
    /// the input rows after the anchor are scored when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realized: Option<PathBuf>,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self { level: 0.15, realized: None }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub input: Option<PathBuf>,
}

impl RunConfig {
    /// Reads `path` (relative data paths resolve against its directory) or
    /// starts from the defaults, then applies `overrides`.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::config(format!("cannot read config {}: {e}", p.display())))?;
                let mut cfg = Self::from_toml(&text)?;
                let base = p.parent().unwrap_or(Path::new(""));
                cfg.resolve_paths(base);
                cfg
            }
            None => Self::default(),
        };
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &overrides.out {
            cfg.out = out.clone();
        }
        if let Some(input) = &overrides.input {
            cfg.data.input = input.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.data.input);
        join(&mut self.out);
        if let Some(r) = &mut self.score.realized {
            join(r);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |m: String| Err(CliError::config(m));
        if self.data.timestamp_column.is_empty() || self.data.value_column.is_empty() {
            return fail("timestamp and value column names must be non-empty".into());
        }
        if self.data.timestamp_column == self.data.value_column {
            return fail("timestamp and value columns must differ".into());
        }
        if !self.data.delimiter.is_ascii() {
            return fail(format!("delimiter must be an ASCII character, got {:?}", self.data.delimiter));
        }
        if let Some(r) = self.data.resolution_secs {
            if r <= 0 {
                return fail(format!("resolution_secs must be positive, got {r}"));
            }
        }
        if let Some(h) = &self.estimate.horizons {
            if h.is_empty() || h[0] == 0 || h.windows(2).any(|w| w[1] <= w[0]) {
                return fail("horizons must be positive and strictly ascending".into());
            }
        }
        qcone_core::estimate::FitMethod::parse(&self.estimate.method).map_err(|e| CliError::from_core(Stage::Config, e))?;
        for &l in self.forecast.levels.iter().chain([&self.score.level, &self.forecast.span_level, &self.forecast.summary_level]) {
            if !(l > 0.0 && l < 1.0) {
                return fail(format!("probability levels must lie in (0, 1), got {l}"));
            }
        }
        if self.forecast.levels.is_empty() {
            return fail("at least one cone level is required".into());
        }
        if self.forecast.horizon == 0 {
            return fail("forecast horizon must be at least one step".into());
        }
        if self.forecast.grid_stride == Some(0) {
            return fail("grid_stride must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let text = "seed = 7\n[trend]\nkind = \"hyperbola\"\nsmoothing = 12.5\n";
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.trend.kind, TrendKind::Hyperbola);
        assert_eq!(cfg.trend.smoothing, Some(12.5));
        assert_eq!(cfg.forecast, ForecastConfig::default());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::from_toml("sed = 1").is_err());
        let mut cfg = RunConfig::default();
        cfg.forecast.levels = vec![0.2, 1.0];
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.estimate.horizons = Some(vec![1, 5, 3]);
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.estimate.method = "mle".into();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 3\nout = \"res\"\n[data]\ninput = \"x.csv\"\n").unwrap();
        let cfg = RunConfig::load(Some(&path), &Overrides::default()).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.out, dir.path().join("res"));
        assert_eq!(cfg.data.input, dir.path().join("x.csv"));
        assert_eq!(cfg.decompose.window, 250);
        let flags = Overrides { seed: Some(9), out: Some("elsewhere".into()), input: None };
        let cfg = RunConfig::load(Some(&path), &flags).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.out, PathBuf::from("elsewhere"));
    }
}
