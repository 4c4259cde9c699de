//! Synthetic input: a series file plus a configuration that runs the full
//! pipeline on it.

use std::path::Path;

use qcone_core::synthetic::{generate_scenario, Scenario, ScenarioSpec};
use serde::Serialize;

use crate::config::{RunConfig, TrendKind};
use crate::error::{CliError, Stage, StageExt};
use crate::ingest::{format_timestamp, TimestampFormat};
use crate::tables::to_csv_bytes;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SynthKind {
    Minute,
    Daily,
}

impl SynthKind {
    pub fn spec(self) -> ScenarioSpec {
        match self {
            SynthKind::Minute => ScenarioSpec::minute(),
            SynthKind::Daily => ScenarioSpec::daily(),
        }
    }
}

#[derive(Serialize)]
struct SeriesRow {
    timestamp: String,
    close: f64,
}

/// Configuration that estimates on the history, fits the slope over the
/// collapse and scores the cone against the rest of the file.
pub fn scenario_config(sc: &Scenario) -> RunConfig {
    let mut cfg = RunConfig { out: "results".into(), ..RunConfig::default() };
    cfg.data.input = "series.csv".into();
    cfg.data.timestamp_format = TimestampFormat::Iso;
    cfg.data.resolution_secs = Some(sc.spec.resolution_secs);
    cfg.decompose.end = Some(format_timestamp(sc.history_end));
    cfg.decompose.window = sc.spec.window;
    cfg.estimate.horizons = Some(sc.horizons.clone());
    cfg.trend.kind = TrendKind::Parabola;
    cfg.trend.anchor = Some(format_timestamp(sc.anchor));
    cfg.trend.fit_start = Some(format_timestamp(sc.fit_start));
    cfg.trend.fit_end = Some(format_timestamp(sc.fit_end));
    cfg.trend.recovery_time = sc.spec.forecast_steps() as f64;
    cfg.forecast.horizon = sc.spec.forecast_steps();
    cfg
}

/// Writes `series.csv` and `config.toml` into `out`.
pub fn write_scenario(kind: SynthKind, seed: u64, out: &Path) -> Result<Scenario, CliError> {
    let sc = generate_scenario(&kind.spec(), seed).stage(Stage::Synth)?;
    let rows: Vec<SeriesRow> = sc
        .series
        .timestamps()
        .iter()
        .zip(sc.series.values())
        .map(|(&t, &v)| SeriesRow { timestamp: format_timestamp(t), close: v })
        .collect();
    let io = |e: std::io::Error| CliError::io(Stage::Synth, format!("cannot write to {}: {e}", out.display()));
    std::fs::create_dir_all(out).map_err(io)?;
    std::fs::write(out.join("series.csv"), to_csv_bytes(&rows)?).map_err(io)?;
    std::fs::write(out.join("config.toml"), scenario_config(&sc).to_toml()).map_err(io)?;
    Ok(sc)
}
