//! Deterministic synthetic data with known structure.
//!
//! Two generators:
//!
//! - [`noisy_power_law`]: a piecewise power-law `beta(t)` with multiplicative
//!   noise, for checking zone detection.
//! - [`generate_scenario`]: an index series with a history segment, a linear
//!   collapse and a realized segment after the forecast anchor. The history is
//!   a cumulative sum of q-Gaussian steps plus two integrated
//!   Ornstein-Uhlenbeck components on a linear drift. The realized segment is
//!   the parabolic response trend plus lag-k increments of the history's own
//!   detrended fluctuation, one random start per lag, so its deviations from
//!   the trend follow exactly the per-lag empirical law the pipeline fits.
//!
//! A single path carries only about `n/k` independent lag-k increments, so an
//! independent replicate would differ from the history at long lags by far
//! more than the estimation error; drawing from the history itself isolates
//! the accuracy of the fitted cone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decompose::{detrend, IndexSeries};
use crate::error::{Error, Result};
use crate::estimate::log_spaced_horizons;
use crate::qstats::QGaussianSampler;
use crate::trend_forecast::{fit_collapse_slope, TrendModel};

const DAY: i64 = 86_400;

/// `beta(t)` continuous and piecewise power-law in `t` with two breaks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewisePowerLaw {
    /// `beta(1)`.
    pub amplitude: f64,
    /// Log-log slopes of the three segments.
    pub slopes: [f64; 3],
    /// Break positions, increasing.
    pub breaks: [f64; 2],
}

impl PiecewisePowerLaw {
    /// Minute-resolution law with breaks at 38 minutes and 28 trading days
    /// (390 minutes each) and slopes -1.23, -1.10, -1.06.
    pub fn minute_zones() -> Self {
        Self { amplitude: 0.009, slopes: [-1.23, -1.10, -1.06], breaks: [38.0, 28.0 * 390.0] }
    }

    pub fn beta(&self, t: f64) -> f64 {
        let [m1, m2, m3] = self.slopes;
        let [b1, b2] = self.breaks;
        let l = t.ln();
        let mut y = self.amplitude.ln() + m1 * l.min(b1.ln());
        if t > b1 {
            y += m2 * (l.min(b2.ln()) - b1.ln());
        }
        if t > b2 {
            y += m3 * (l - b2.ln());
        }
        y.exp()
    }
}

/// Samples `law` on a log grid over `[t_min, t_max]` with `points_per_decade`
/// points per decade and multiplies each value by `1 + noise * N(0, 1)`.
pub fn noisy_power_law(
    law: &PiecewisePowerLaw,
    t_min: f64,
    t_max: f64,
    points_per_decade: usize,
    noise: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(t_min > 0.0 && t_max > t_min) || points_per_decade == 0 || !(0.0..0.3).contains(&noise) {
        return Err(Error::config("invalid power-law grid"));
    }
    let n = ((t_max / t_min).log10() * points_per_decade as f64).round() as usize + 1;
    let normal = standard_normal();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t: Vec<f64> = (0..n)
        .map(|k| t_min * (t_max / t_min).powf(k as f64 / (n - 1) as f64))
        .collect();
    let beta = t.iter().map(|&t| law.beta(t) * (1.0 + noise * normal.draw(&mut rng))).collect();
    Ok((t, beta))
}

fn standard_normal() -> QGaussianSampler {
    QGaussianSampler::new(1.0, 0.5).expect("valid")
}

/// Layout and dynamics of a synthetic index scenario. Times are in steps of
/// `resolution_secs`; a trading day holds `steps_per_day` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub resolution_secs: i64,
    pub steps_per_day: usize,
    /// Days since the epoch of the first trading day (must be a weekday).
    pub first_day: i64,
    /// Seconds after midnight UTC of the first step of each day.
    pub day_open_secs: i64,
    pub history_days: usize,
    pub collapse_days: usize,
    pub forecast_days: usize,
    pub base_level: f64,
    /// Total drift over the history.
    pub drift: f64,
    /// Collapse slope in price per step.
    pub collapse_slope: f64,
    pub step_q: f64,
    pub step_beta: f64,
    /// `(relaxation time in steps, stationary std)` of the integrated OU terms.
    pub fast_ou: (f64, f64),
    pub slow_ou: (f64, f64),
    /// Moving-average window in steps.
    pub window: usize,
    /// Largest analysed lag; at least the forecast horizon.
    pub horizon_max: usize,
    pub horizon_count: usize,
}

impl ScenarioSpec {
    /// 569 trading days of minute data: 504 days of history, a 5-day collapse
    /// and 60 days after the anchor.
    pub fn minute() -> Self {
        Self {
            resolution_secs: 60,
            steps_per_day: 390,
            first_day: 17_903, // 2019-01-07
            day_open_secs: 14 * 3600 + 1800,
            history_days: 504,
            collapse_days: 5,
            forecast_days: 60,
            base_level: 10_000.0,
            drift: 800.0,
            collapse_slope: -0.05,
            step_q: 1.5,
            step_beta: 1.0,
            fast_ou: (20.0, 0.25),
            slow_ou: (3900.0, 0.01),
            window: 252 * 390,
            horizon_max: 60 * 390,
            horizon_count: 40,
        }
    }

    /// About 24 years of daily closes.
    pub fn daily() -> Self {
        Self {
            resolution_secs: DAY,
            steps_per_day: 1,
            first_day: 9_496, // 1996-01-01
            day_open_secs: 0,
            history_days: 6_000,
            collapse_days: 20,
            forecast_days: 60,
            base_level: 5_000.0,
            drift: 1_500.0,
            collapse_slope: -8.0,
            step_q: 1.4,
            step_beta: 0.02,
            fast_ou: (5.0, 2.0),
            slow_ou: (120.0, 0.5),
            window: 1_500,
            horizon_max: 120,
            horizon_count: 24,
        }
    }

    pub fn history_steps(&self) -> usize {
        self.history_days * self.steps_per_day
    }

    pub fn collapse_steps(&self) -> usize {
        self.collapse_days * self.steps_per_day
    }

    pub fn forecast_steps(&self) -> usize {
        self.forecast_days * self.steps_per_day
    }

    fn total_steps(&self) -> usize {
        self.history_steps() + self.collapse_steps() + self.forecast_steps()
    }

    /// Timestamp of step `k` on the trading calendar (weekdays only).
    pub fn timestamp(&self, k: usize) -> i64 {
        let day = (k / self.steps_per_day) as i64;
        let within = (k % self.steps_per_day) as i64;
        let (weeks, rest) = (day / 5, day % 5);
        let offset = (self.first_day + 3).rem_euclid(7); // 0 = Monday
        let mut date = self.first_day + 7 * weeks + rest;
        if offset + rest >= 5 {
            date += 2;
        }
        date * DAY + self.day_open_secs + within * self.resolution_secs
    }

    fn validate(&self) -> Result<()> {
        if (self.first_day + 3).rem_euclid(7) >= 5 {
            return Err(Error::config("scenario must start on a weekday"));
        }
        if self.steps_per_day == 0 || self.collapse_steps() < 2 || self.forecast_steps() == 0 {
            return Err(Error::config("scenario segments must be non-empty"));
        }
        if self.horizon_max < self.forecast_steps() {
            return Err(Error::config("analysed lags must cover the forecast horizon"));
        }
        if self.history_steps() <= self.window + self.horizon_max {
            return Err(Error::config("history must exceed the trend window plus the forecast horizon"));
        }
        if self.steps_per_day as i64 * self.resolution_secs > DAY {
            return Err(Error::config("a trading day cannot exceed 24 hours"));
        }
        Ok(())
    }
}

/// Generated index series with the settings needed to analyse it.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub series: IndexSeries,
    /// Last timestamp of the history used for estimation.
    pub history_end: i64,
    /// Collapse interval used to fit the trend slope.
    pub fit_start: i64,
    pub fit_end: i64,
    /// Forecast anchor (the end of the collapse).
    pub anchor: i64,
    /// Parabolic response trend, with its zero-slope point at the end of the
    /// forecast horizon.
    pub trend: TrendModel,
    pub horizons: Vec<usize>,
}

/// Cumulative sum of a stationary AR(1) discretization of an OU process.
fn integrated_ou(rng: &mut ChaCha8Rng, n: usize, tau: f64, sigma: f64) -> Vec<f64> {
    let normal = standard_normal();
    let a = (-1.0 / tau).exp();
    let kick = sigma * (1.0 - a * a).sqrt();
    let mut v = sigma * normal.draw(rng);
    let mut acc = 0.0;
    (0..n)
        .map(|_| {
            v = a * v + kick * normal.draw(rng);
            acc += v;
            acc
        })
        .collect()
}

fn stochastic_path(spec: &ScenarioSpec, seed: u64, stream: u64, n: usize) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let steps = QGaussianSampler::new(spec.step_q, spec.step_beta)?;
    let mut acc = 0.0;
    let walk: Vec<f64> = (0..n)
        .map(|_| {
            acc += steps.draw(&mut rng);
            acc
        })
        .collect();
    let fast = integrated_ou(&mut rng, n, spec.fast_ou.0, spec.fast_ou.1);
    let slow = integrated_ou(&mut rng, n, spec.slow_ou.0, spec.slow_ou.1);
    Ok((0..n).map(|k| walk[k] + fast[k] + slow[k]).collect())
}

/// Builds the scenario described by `spec` from `seed`.
pub fn generate_scenario(spec: &ScenarioSpec, seed: u64) -> Result<Scenario> {
    spec.validate()?;
    let n_hist = spec.history_steps();
    let n_coll = spec.collapse_steps();
    let horizon = spec.forecast_steps();
    let n_obs = n_hist + n_coll;

    let noise = stochastic_path(spec, seed, 0, n_obs)?;
    let mut values = Vec::with_capacity(spec.total_steps());
    for (k, x) in noise.iter().enumerate() {
        let slow = spec.drift * k.min(n_hist - 1) as f64 / n_hist as f64;
        let ramp = spec.collapse_slope * k.saturating_sub(n_hist - 1) as f64;
        values.push(spec.base_level + slow + ramp + x);
    }
    let timestamps: Vec<i64> = (0..spec.total_steps()).map(|k| spec.timestamp(k)).collect();
    let fit_start = timestamps[n_hist];
    let anchor = timestamps[n_obs - 1];
    let observed = IndexSeries::new(timestamps[..n_obs].to_vec(), values.clone(), spec.resolution_secs)?;
    let slope = fit_collapse_slope(&observed, fit_start, anchor)?;
    let trend = TrendModel::parabola(anchor, values[n_obs - 1], slope, horizon as f64)?;

    let history = observed.slice(0..n_hist)?;
    let fluct = detrend(&history, timestamps[0], spec.window)?.fluctuation;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    for k in 1..=horizon {
        let start = rng.random_range(0..n_hist - k);
        values.push(trend.value(k as f64) + fluct[start + k] - fluct[start]);
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::config(format!("scenario produced a non-positive index value {v}")));
    }
    let series = IndexSeries::new(timestamps, values, spec.resolution_secs)?;
    Ok(Scenario {
        spec: spec.clone(),
        series,
        history_end: spec.timestamp(n_hist - 1),
        fit_start,
        fit_end: anchor,
        anchor,
        trend,
        horizons: log_spaced_horizons(1, spec.horizon_max, spec.horizon_count)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_is_continuous_with_given_slopes() {
        let law = PiecewisePowerLaw::minute_zones();
        for &b in &law.breaks {
            let (lo, hi) = (law.beta(b * (1.0 - 1e-9)), law.beta(b * (1.0 + 1e-9)));
            assert!((lo / hi - 1.0).abs() < 1e-8);
        }
        let slope = |a: f64, b: f64| (law.beta(b) / law.beta(a)).ln() / (b / a).ln();
        assert!((slope(2.0, 10.0) + 1.23).abs() < 1e-12);
        assert!((slope(100.0, 1000.0) + 1.10).abs() < 1e-12);
        assert!((slope(20_000.0, 90_000.0) + 1.06).abs() < 1e-12);
        assert!((law.beta(1.0) - 0.009).abs() < 1e-15);
    }

    #[test]
    fn noisy_grid_density_and_noise() {
        let law = PiecewisePowerLaw::minute_zones();
        let (t, b) = noisy_power_law(&law, 1.0, 1e4, 100, 0.05, 3).unwrap();
        assert_eq!(t.len(), 401);
        let rel: Vec<f64> = t.iter().zip(&b).map(|(t, b)| b / law.beta(*t) - 1.0).collect();
        let sd = (rel.iter().map(|r| r * r).sum::<f64>() / rel.len() as f64).sqrt();
        assert!((sd - 0.05).abs() < 0.01, "{sd}");
    }

    #[test]
    fn trading_calendar_skips_weekends() {
        let spec = ScenarioSpec::daily();
        let weekday = |ts: i64| (ts.div_euclid(DAY) + 3).rem_euclid(7);
        let ts: Vec<i64> = (0..30).map(|k| spec.timestamp(k)).collect();
        assert!(ts.iter().all(|&t| weekday(t) < 5));
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(ts[5] - ts[4], 3 * DAY);
        let m = ScenarioSpec::minute();
        assert_eq!(m.timestamp(389) + 60, m.timestamp(0) + 389 * 60 + 60);
        assert_eq!(m.timestamp(390), m.timestamp(0) + DAY);
        assert_eq!(m.timestamp(0) % DAY, 14 * 3600 + 1800);
    }

    #[test]
    fn daily_scenario_layout() {
        let spec = ScenarioSpec::daily();
        let s = generate_scenario(&spec, 5).unwrap();
        assert_eq!(s.series.len(), 6_080);
        assert_eq!(s.series.position(s.anchor).unwrap(), 6_019);
        assert_eq!(s.trend.value(0.0), s.series.values()[6_019]);
        assert!((s.trend.slope / spec.collapse_slope - 1.0).abs() < 0.5);
        assert_eq!((s.horizons[0], *s.horizons.last().unwrap()), (1, 120));
        let again = generate_scenario(&spec, 5).unwrap();
        assert_eq!(s.series, again.series);
        assert_ne!(s.series, generate_scenario(&spec, 6).unwrap().series);
    }
}
