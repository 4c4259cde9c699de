//! Stage orchestration: ingest, decompose, fit, zones, trend, forecast, score.

use std::collections::BTreeMap;
use std::path::Path;

use qcone_core::decompose::{detrend, Decomposition, IndexSeries};
use qcone_core::estimate::{
    empirical_distributions, fit_horizons, BinRule, FitMethod, FitOptions, FitQuality, ParameterCurves, QFit,
};
use qcone_core::regimes::{detect_zones_in_curves, ZoneLabel, ZoneSegmentation};
use qcone_core::trend_forecast::{
    accuracy, fit_collapse_slope, forecast_cone, simulate_paths, AccuracyReport, ConeOptions, ForecastCone, PathEnsemble,
    TrendModel,
};

use crate::config::{RunConfig, TrendKind};
use crate::error::{CliError, Stage, StageExt};
use crate::ingest::{format_timestamp, parse_timestamp, read_rows, series_from_rows};
use crate::tables::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    IngestCheck,
    Decompose,
    Fit,
    Zones,
    Trend,
    Forecast,
    Score,
    All,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::IngestCheck => "ingest-check",
            Command::Decompose => "decompose",
            Command::Fit => "fit",
            Command::Zones => "zones",
            Command::Trend => "trend",
            Command::Forecast => "forecast",
            Command::Score => "score",
            Command::All => "all",
        }
    }
}

fn log(msg: impl AsRef<str>) {
    eprintln!("{}", msg.as_ref());
}

/// Everything computed by a run.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub series: Option<IndexSeries>,
    pub decomposition: Option<Decomposition>,
    pub fits: Vec<QFit>,
    pub curves: Option<ParameterCurves>,
    pub zones: Option<ZoneSegmentation>,
    pub trend: Option<TrendModel>,
    pub cone: Option<ForecastCone>,
    pub paths: Option<PathEnsemble>,
    pub accuracy: Option<AccuracyReport>,
    pub results: BTreeMap<String, ResultValue>,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    series: IndexSeries,
    anchor: i64,
    results: BTreeMap<String, ResultValue>,
}

fn timestamp_setting(cfg: &RunConfig, name: &str, value: &str) -> Result<i64, CliError> {
    parse_timestamp(value, &cfg.data.timestamp_format).map_err(|m| CliError::config(format!("{name}: {m}")))
}

fn position(series: &IndexSeries, name: &str, t: i64) -> Result<usize, CliError> {
    series
        .position(t)
        .map_err(|_| CliError::config(format!("{name} {} is not an observation of the input", format_timestamp(t))))
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a RunConfig, series: IndexSeries) -> Result<Self, CliError> {
        let anchor = match &cfg.trend.anchor {
            Some(a) => timestamp_setting(cfg, "trend.anchor", a)?,
            None => *series.timestamps().last().expect("non-empty series"),
        };
        position(&series, "trend.anchor", anchor)?;
        Ok(Self { cfg, series, anchor, results: BTreeMap::new() })
    }

    fn note(&mut self, key: &str, value: ResultValue) {
        self.results.insert(key.to_string(), value);
    }

    fn decompose(&mut self) -> Result<Decomposition, CliError> {
        let d = &self.cfg.decompose;
        let start = match &d.t0 {
            Some(t) => timestamp_setting(self.cfg, "decompose.t0", t)?,
            None => self.series.timestamps()[0],
        };
        let end = match &d.end {
            Some(t) => timestamp_setting(self.cfg, "decompose.end", t)?,
            None => self.anchor,
        };
        let (i0, i1) = (position(&self.series, "decompose.t0", start)?, position(&self.series, "decompose.end", end)?);
        if i1 <= i0 {
            return Err(CliError::config("decompose.end must come after decompose.t0"));
        }
        let history = self.series.slice(i0..i1 + 1).stage(Stage::Decompose)?;
        let dec = detrend(&history, start, d.window).stage(Stage::Decompose)?;
        log(format!(
            "decompose: {} observations from {} to {}, window {} steps",
            history.len(),
            format_timestamp(start),
            format_timestamp(end),
            d.window
        ));
        Ok(dec)
    }

    fn fit(&mut self, dec: &Decomposition) -> Result<Vec<QFit>, CliError> {
        let e = &self.cfg.estimate;
        let method = FitMethod::parse(&e.method).stage(Stage::Config)?;
        let horizons = e.horizon_list()?;
        let dists = empirical_distributions(&dec.fluctuation, &horizons, BinRule::default(), e.min_samples).stage(Stage::Fit)?;
        let fits = fit_horizons(&dists, method, &FitOptions::default()).stage(Stage::Fit)?;
        let poor = fits.iter().filter(|f| f.quality == FitQuality::Poor).count();
        log(format!("fit: {} horizons with {method} ({poor} flagged poor)", fits.len()));
        self.note("method", ResultValue::Text(method.as_str().into()));
        self.note("poor_fits", ResultValue::Number(poor as f64));
        Ok(fits)
    }

    fn curves(&mut self, fits: &[QFit], zones: Option<&ZoneSegmentation>) -> Result<ParameterCurves, CliError> {
        let mut curves = ParameterCurves::from_fits(fits, self.cfg.estimate.alpha_window, zones).stage(Stage::Fit)?;
        if let Some(z) = zones {
            curves.assign_zones(z);
        }
        let e = &self.cfg.estimate;
        if let Some(c) = curves.convergence_check(e.convergence_q_tol, e.convergence_alpha_tol) {
            self.note("largest_horizon_q", ResultValue::Number(c.q));
            self.note("largest_horizon_alpha", ResultValue::Number(c.alpha));
            self.note("q_converged", ResultValue::Flag(c.q_converged));
            self.note("alpha_converged", ResultValue::Flag(c.alpha_converged));
        }
        self.note("max_q_jump", ResultValue::Number(curves.max_q_jump()));
        Ok(curves)
    }

    /// Segmentation on provisional curves, then the final curves with alpha
    /// windows kept inside zones.
    fn zones(&mut self, fits: &[QFit]) -> Result<(Option<ZoneSegmentation>, ParameterCurves), CliError> {
        let z = &self.cfg.zones;
        if !z.enabled {
            return Ok((None, self.curves(fits, None)?));
        }
        let provisional = ParameterCurves::from_fits(fits, self.cfg.estimate.alpha_window, None);
        let seg = match &provisional {
            Ok(c) => detect_zones_in_curves(c, &z.to_core()),
            Err(_) => {
                // alpha is not needed for the breaks themselves
                let h: Vec<f64> = fits.iter().map(|f| f.horizon).collect();
                let b: Vec<f64> = fits.iter().map(|f| f.beta).collect();
                qcone_core::regimes::detect_zones(&h, &b, &z.to_core())
            }
        }
        .stage(Stage::Zones)?;
        let curves = self.curves(fits, Some(&seg))?;
        let seg = ZoneSegmentation { zone_c_check: qcone_core::regimes::check_zone_c(&seg, &curves, &z.to_core()), ..seg };
        log(format!(
            "zones: breaks at {} and {}, slopes {:.3} / {:.3} / {:.3}",
            seg.boundaries[0], seg.boundaries[1], seg.slopes[0], seg.slopes[1], seg.slopes[2]
        ));
        self.note("zone_break_1", ResultValue::Number(seg.boundaries[0]));
        self.note("zone_break_2", ResultValue::Number(seg.boundaries[1]));
        if let Some(c) = &seg.zone_c_check {
            self.note("zone_c_passes", ResultValue::Flag(c.passes));
        }
        Ok((Some(seg), curves))
    }

    fn trend(&mut self) -> Result<TrendModel, CliError> {
        let t = &self.cfg.trend;
        let k = position(&self.series, "trend.anchor", self.anchor)?;
        let level = self.series.values()[k];
        let slope = match t.slope {
            Some(s) => s,
            None => {
                let start = t
                    .fit_start
                    .as_deref()
                    .ok_or_else(|| CliError::config("trend.fit_start is required when trend.slope is not given"))?;
                let start = timestamp_setting(self.cfg, "trend.fit_start", start)?;
                let end = match &t.fit_end {
                    Some(e) => timestamp_setting(self.cfg, "trend.fit_end", e)?,
                    None => self.anchor,
                };
                fit_collapse_slope(&self.series, start, end).stage(Stage::Trend)?
            }
        };
        let model = match t.kind {
            TrendKind::Parabola => TrendModel::parabola(self.anchor, level, slope, t.recovery_time),
            TrendKind::Hyperbola => TrendModel::hyperbola(
                self.anchor,
                level,
                slope,
                t.recovery_ratio,
                t.intersection_time.unwrap_or(t.recovery_time),
                t.smoothing.unwrap_or(0.02 * level.abs()),
            ),
        }
        .stage(Stage::Trend)?;
        log(format!("trend: {} from {level} at {} with slope {slope} per step", model.kind_name(), format_timestamp(self.anchor)));
        self.note("trend_slope", ResultValue::Number(slope));
        self.note("anchor", ResultValue::Text(format_timestamp(self.anchor)));
        Ok(model)
    }

    fn forecast(&mut self, trend: &TrendModel, curves: &ParameterCurves) -> Result<(ForecastCone, PathEnsemble), CliError> {
        let f = &self.cfg.forecast;
        let opts = ConeOptions {
            horizon: f.horizon,
            levels: f.levels.clone(),
            price_points: f.price_points,
            grid_stride: f.grid_stride.unwrap_or(f.horizon.div_ceil(200)),
            span_level: f.span_level,
        };
        let cone = forecast_cone(trend, curves, &opts).stage(Stage::Forecast)?;
        let paths = simulate_paths(&cone, f.paths, self.cfg.seed).stage(Stage::Forecast)?;
        let coverage = paths.coverage(&cone, self.cfg.score.level).stage(Stage::Forecast)?;
        log(format!("forecast: {} steps, {} paths, path coverage {coverage:.4} at level {}", f.horizon, f.paths, self.cfg.score.level));
        self.note("path_coverage", ResultValue::Number(coverage));
        Ok((cone, paths))
    }

    fn realized(&self) -> Result<IndexSeries, CliError> {
        let Some(path) = &self.cfg.score.realized else {
            return Ok(self.series.clone());
        };
        let k = position(&self.series, "trend.anchor", self.anchor)?;
        let mut rows = read_rows(path, &self.cfg.data)?;
        rows.retain(|r| r.timestamp > self.anchor);
        let mut all = vec![crate::ingest::Row { line: 0, timestamp: self.anchor, value: self.series.values()[k] }];
        all.extend(rows);
        series_from_rows(&all, Some(self.series.resolution_secs()))
    }

    fn score(&mut self, cone: &ForecastCone) -> Result<AccuracyReport, CliError> {
        let realized = self.realized()?;
        let level = self.cfg.score.level;
        let report = accuracy(cone, &realized, level).stage(Stage::Score)?;
        log(format!(
            "score: accuracy {:.4} over {} observations at exceedance level {level}",
            report.fraction,
            report.points.len()
        ));
        self.note("accuracy", ResultValue::Number(report.fraction));
        self.note("accuracy_level", ResultValue::Number(level));
        self.note("scored_observations", ResultValue::Number(report.points.len() as f64));
        Ok(report)
    }
}

fn decomposition_rows(d: &Decomposition) -> Vec<DecompositionRow> {
    (0..d.timestamps.len())
        .map(|k| DecompositionRow {
            timestamp: format_timestamp(d.timestamps[k]),
            index: d.base_level + d.returns[k],
            price_return: d.returns[k],
            trend: d.trend[k],
            fluctuation: d.fluctuation[k],
        })
        .collect()
}

fn curve_rows(c: &ParameterCurves, fits: &[QFit]) -> Vec<CurveRow> {
    c.points
        .iter()
        .map(|p| {
            let fit = fits.iter().find(|f| f.horizon == p.horizon);
            CurveRow {
                horizon: p.horizon,
                q: p.q,
                q_se: p.q_se,
                beta: p.beta,
                beta_se: p.beta_se,
                alpha: p.alpha,
                alpha_se: p.alpha_se,
                diffusion: p.diffusion,
                zone: p.zone.map(|z| z.as_str().to_string()),
                misfit: fit.map_or(f64::NAN, |f| f.misfit),
                quality: fit.map_or("unknown", |f| if f.quality == FitQuality::Good { "good" } else { "poor" }).into(),
            }
        })
        .collect()
}

fn zone_rows(z: &ZoneSegmentation) -> Vec<ZoneRow> {
    let first = z.horizons[0];
    let last = *z.horizons.last().expect("non-empty");
    let alphas = z.zone_alphas();
    let bounds = [(first, z.boundaries[0]), (z.boundaries[0], z.boundaries[1]), (z.boundaries[1], last)];
    let mut rows: Vec<ZoneRow> = [ZoneLabel::A, ZoneLabel::B, ZoneLabel::C]
        .iter()
        .enumerate()
        .map(|(k, l)| ZoneRow {
            label: l.as_str().into(),
            start: bounds[k].0,
            end: bounds[k].1,
            slope: Some(z.slopes[k]),
            alpha: Some(alphas[k]),
        })
        .collect();
    rows.extend(z.crossovers.iter().map(|&(a, b)| ZoneRow {
        label: ZoneLabel::Crossover.as_str().into(),
        start: a,
        end: b,
        slope: None,
        alpha: None,
    }));
    rows
}

fn trend_rows(t: &TrendModel, horizon: usize) -> Vec<TrendRow> {
    (0..=horizon)
        .map(|k| TrendRow { step: k, value: t.value(k as f64), derivative: t.derivative(k as f64) })
        .collect()
}

fn cone_tables(cone: &ForecastCone) -> (Vec<LawRow>, Vec<GridRow>, Vec<ContourRow>) {
    let laws = cone
        .laws
        .iter()
        .enumerate()
        .map(|(k, l)| LawRow { step: k, trend: cone.trend[k], q: l.map(|l| l.q), beta: l.map(|l| l.beta) })
        .collect();
    let np = cone.price_grid.len();
    let grid = cone
        .grid_times
        .iter()
        .enumerate()
        .flat_map(|(r, &t)| {
            cone.price_grid
                .iter()
                .enumerate()
                .map(move |(c, &p)| (t, p, r * np + c))
        })
        .map(|(t, p, i)| GridRow { step: t, price: p, probability: cone.probabilities[i] })
        .collect();
    let contours = cone
        .contours()
        .into_iter()
        .flat_map(|c| {
            c.points
                .into_iter()
                .map(move |(t, lo, hi)| ContourRow { level: c.level, step: t as usize, lower: lo, upper: hi })
        })
        .collect();
    (laws, grid, contours)
}

fn path_rows(paths: &PathEnsemble, level: f64) -> Vec<PathSummaryRow> {
    paths
        .summary(level)
        .into_iter()
        .map(|s| PathSummaryRow { step: s.step, mean: s.mean, median: s.median, lower: s.lower, upper: s.upper })
        .collect()
}

fn accuracy_rows(r: &AccuracyReport) -> Vec<AccuracyRow> {
    r.points
        .iter()
        .map(|p| AccuracyRow {
            timestamp: format_timestamp(p.timestamp),
            step: p.step,
            value: p.value,
            lower: p.lower,
            upper: p.upper,
            inside: p.inside,
        })
        .collect()
}

fn load_input(cfg: &RunConfig) -> Result<(IndexSeries, String), CliError> {
    let path: &Path = &cfg.data.input;
    if path.as_os_str().is_empty() {
        return Err(CliError::config("no input file given (data.input or --input)"));
    }
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::new(Stage::Ingest, crate::error::ErrorKind::Config, format!("cannot read input {}: {e}", path.display())))?;
    let rows = read_rows(path, &cfg.data)?;
    let series = series_from_rows(&rows, cfg.data.resolution_secs)?;
    Ok((series, sha256_hex(&bytes)))
}

/// Runs `command`, writing its outputs and a manifest into `cfg.out`.
/// Nothing is left in the output directory when a stage fails.
pub fn run(command: Command, cfg: &RunConfig) -> Result<RunOutput, CliError> {
    cfg.validate()?;
    let (series, input_sha) = load_input(cfg)?;
    log(format!(
        "ingest: {} observations from {} to {}, resolution {} s",
        series.len(),
        format_timestamp(series.timestamps()[0]),
        format_timestamp(*series.timestamps().last().expect("non-empty")),
        series.resolution_secs()
    ));
    let mut out = RunOutput::default();
    if command == Command::IngestCheck {
        out.series = Some(series);
        return Ok(out);
    }

    let mut runner = Runner::new(cfg, series)?;
    let mut staging = Staging::new(&cfg.out)?;
    let needs_estimation = matches!(command, Command::Decompose | Command::Fit | Command::Zones | Command::Forecast | Command::Score | Command::All);
    let needs_curves = matches!(command, Command::Fit | Command::Zones | Command::Forecast | Command::Score | Command::All);
    let needs_cone = matches!(command, Command::Forecast | Command::Score | Command::All);
    let writes = |c: Command| command == c || command == Command::All;

    if needs_estimation {
        let dec = runner.decompose()?;
        if writes(Command::Decompose) {
            staging.write_table("decomposition.csv", &decomposition_rows(&dec))?;
        }
        if needs_curves {
            let fits = runner.fit(&dec)?;
            let (zones, curves) = if command == Command::Fit {
                (None, runner.curves(&fits, None)?)
            } else {
                runner.zones(&fits)?
            };
            if writes(Command::Fit) || writes(Command::Zones) {
                staging.write_table("curves.csv", &curve_rows(&curves, &fits))?;
            }
            if let (true, Some(z)) = (writes(Command::Zones), &zones) {
                staging.write_table("zones.csv", &zone_rows(z))?;
            }
            out.fits = fits;
            out.zones = zones;
            out.curves = Some(curves);
        }
        out.decomposition = Some(dec);
    }
    if needs_cone || command == Command::Trend {
        let trend = runner.trend()?;
        if writes(Command::Trend) {
            staging.write_table("trend.csv", &trend_rows(&trend, cfg.forecast.horizon))?;
        }
        if needs_cone {
            let curves = out.curves.as_ref().expect("curves computed");
            let (cone, paths) = runner.forecast(&trend, curves)?;
            if writes(Command::Forecast) {
                let (laws, grid, contours) = cone_tables(&cone);
                staging.write_table("cone_laws.csv", &laws)?;
                staging.write_table("cone_grid.csv", &grid)?;
                staging.write_table("contours.csv", &contours)?;
                staging.write_table("paths_summary.csv", &path_rows(&paths, cfg.forecast.summary_level))?;
            }
            if matches!(command, Command::Score | Command::All) {
                let report = runner.score(&cone)?;
                staging.write_table("accuracy.csv", &accuracy_rows(&report))?;
                out.accuracy = Some(report);
            }
            out.cone = Some(cone);
            out.paths = Some(paths);
        }
        out.trend = Some(trend);
    }

    let manifest = Manifest {
        tool: "qcone".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.as_str().into(),
        input_sha256: input_sha,
        outputs: staging.hashes().clone(),
        results: runner.results.clone(),
        config: toml::from_str(&cfg.to_toml()).expect("config is a table"),
    };
    staging.write_bytes("manifest.toml", manifest.to_toml().as_bytes())?;
    out.files = staging.commit()?;
    out.results = runner.results;
    out.series = Some(runner.series);
    log(format!("wrote {} files to {}", out.files.len(), cfg.out.display()));
    Ok(out)
}
