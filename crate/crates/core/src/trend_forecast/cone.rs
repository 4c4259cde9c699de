//! Forecast cone: two-sided exceedance probabilities around a trend and
//! scoring of realized prices against it.

use rayon::prelude::*;

use super::trend::TrendModel;
use crate::decompose::IndexSeries;
use crate::error::{Error, Result};
use crate::estimate::ParameterCurves;
use crate::qstats::QGaussian;

/// Layout of the cone grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeOptions {
    /// Forecast horizon in steps.
    pub horizon: usize,
    /// Probability levels of the contour lines, each in `(0, 1)`.
    pub levels: Vec<f64>,
    /// Number of price grid points.
    pub price_points: usize,
    /// Spacing (in steps) of the rows of the probability grid.
    pub grid_stride: usize,
    /// The price grid spans the band of this level at the horizon.
    pub span_level: f64,
}

impl Default for ConeOptions {
    fn default() -> Self {
        Self { horizon: 60, levels: vec![0.15, 0.5, 0.85], price_points: 201, grid_stride: 1, span_level: 0.01 }
    }
}

/// Distribution of the fluctuation at each forecast step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLaw {
    pub q: f64,
    pub beta: f64,
}

/// One contour of the cone.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub level: f64,
    /// `(t, lower, upper)` for every step.
    pub points: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastCone {
    pub t0: i64,
    /// Trend value at every step `0..=horizon`.
    pub trend: Vec<f64>,
    /// Fluctuation law at every step (`None` at `t = 0`).
    pub laws: Vec<Option<StepLaw>>,
    pub levels: Vec<f64>,
    /// `half_widths[l][t]`: half-width of the band with exceedance `levels[l]`.
    pub half_widths: Vec<Vec<f64>>,
    /// Times (steps) of the probability grid rows.
    pub grid_times: Vec<usize>,
    pub price_grid: Vec<f64>,
    /// Row-major `grid_times x price_grid` exceedance probabilities.
    pub probabilities: Vec<f64>,
}

impl ForecastCone {
    pub fn horizon(&self) -> usize {
        self.trend.len() - 1
    }

    /// Exceedance probability `P(|X - trend| > |price - trend(t)|)` at step `t`.
    pub fn probability(&self, t: usize, price: f64) -> Result<f64> {
        let law = match self.laws.get(t) {
            Some(Some(l)) => *l,
            Some(None) => return Ok(if price == self.trend[0] { 1.0 } else { 0.0 }),
            None => return Err(Error::config(format!("step {t} is beyond the cone horizon {}", self.horizon()))),
        };
        QGaussian::new(law.q, law.beta)?.exceedance((price - self.trend[t]).abs())
    }

    pub fn contours(&self) -> Vec<Contour> {
        self.levels
            .iter()
            .zip(&self.half_widths)
            .map(|(&level, w)| Contour {
                level,
                points: w
                    .iter()
                    .zip(&self.trend)
                    .enumerate()
                    .map(|(t, (w, c))| (t as f64, c - w, c + w))
                    .collect(),
            })
            .collect()
    }

    fn level_index(&self, level: f64) -> Option<usize> {
        self.levels.iter().position(|&l| (l - level).abs() < 1e-12)
    }

    /// Half-width of the band at `level` for every step, computed on demand
    /// when `level` is not one of the contour levels.
    pub fn band(&self, level: f64) -> Result<Vec<f64>> {
        if let Some(k) = self.level_index(level) {
            return Ok(self.half_widths[k].clone());
        }
        band_half_widths(&self.laws, level)
    }
}

fn band_half_widths(laws: &[Option<StepLaw>], level: f64) -> Result<Vec<f64>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::config(format!("probability levels must lie in (0, 1), got {level}")));
    }
    laws.par_iter()
        .map(|law| match law {
            None => Ok(0.0),
            Some(l) => QGaussian::new(l.q, l.beta)?.half_width(level),
        })
        .collect()
}

/// Fluctuation laws for steps `0..=horizon` from the parameter table.
pub fn step_laws(curves: &ParameterCurves, horizon: usize) -> Result<Vec<Option<StepLaw>>> {
    let mut laws = vec![None];
    for t in 1..=horizon {
        let p = curves.lookup(t as f64).map_err(|e| match e {
            Error::Config(m) => Error::config(format!("parameter curves do not cover forecast step {t}: {m}")),
            other => other,
        })?;
        laws.push(Some(StepLaw { q: p.q, beta: p.beta_at(t as f64)? }));
    }
    Ok(laws)
}

/// Cone of exceedance probabilities around `trend` for steps `0..=horizon`.
pub fn forecast_cone(trend: &TrendModel, curves: &ParameterCurves, opts: &ConeOptions) -> Result<ForecastCone> {
    if opts.horizon == 0 {
        return Err(Error::config("forecast horizon must be at least one step"));
    }
    if opts.levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) || !(opts.span_level > 0.0 && opts.span_level < 1.0) {
        return Err(Error::config("probability levels must lie in (0, 1)"));
    }
    if opts.price_points < 2 || opts.grid_stride == 0 {
        return Err(Error::config("the cone grid needs at least 2 price points and a positive stride"));
    }
    let laws = step_laws(curves, opts.horizon)?;
    let trend_values: Vec<f64> = (0..=opts.horizon).map(|t| trend.value(t as f64)).collect();
    let half_widths = opts.levels.iter().map(|&l| band_half_widths(&laws, l)).collect::<Result<Vec<_>>>()?;

    let span = band_half_widths(&laws, opts.span_level)?.into_iter().fold(0.0, f64::max);
    let lo = trend_values.iter().fold(f64::INFINITY, |m, v| m.min(*v)) - span;
    let hi = trend_values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)) + span;
    let price_grid: Vec<f64> = (0..opts.price_points)
        .map(|k| lo + (hi - lo) * k as f64 / (opts.price_points - 1) as f64)
        .collect();
    let mut grid_times: Vec<usize> = (0..=opts.horizon).step_by(opts.grid_stride).collect();
    if *grid_times.last().expect("non-empty") != opts.horizon {
        grid_times.push(opts.horizon);
    }
    let rows = grid_times
        .par_iter()
        .map(|&t| -> Result<Vec<f64>> {
            match laws[t] {
                None => Ok(price_grid.iter().map(|&p| if p == trend_values[0] { 1.0 } else { 0.0 }).collect()),
                Some(l) => {
                    let d = QGaussian::new(l.q, l.beta)?;
                    price_grid.iter().map(|&p| d.exceedance((p - trend_values[t]).abs())).collect()
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForecastCone {
        t0: trend.t0,
        trend: trend_values,
        laws,
        levels: opts.levels.clone(),
        half_widths,
        grid_times,
        price_grid,
        probabilities: rows.concat(),
    })
}

/// Inside/outside flag of one realized observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPoint {
    pub timestamp: i64,
    pub step: usize,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub level: f64,
    pub fraction: f64,
    pub points: Vec<ScoredPoint>,
}

/// Fraction of realized observations after the anchor that fall inside the
/// band where the exceedance probability is at least `level`.
///
/// Observations are matched to forecast steps on the trading clock: the
/// k-th observation after the anchor timestamp is step k. The anchor itself
/// (step 0, where the band has zero width) is not scored.
pub fn accuracy(cone: &ForecastCone, realized: &IndexSeries, level: f64) -> Result<AccuracyReport> {
    let start = realized
        .position(cone.t0)
        .map_err(|_| Error::config(format!("realized series does not contain the forecast anchor {}", cone.t0)))?;
    let last = (realized.len() - 1 - start).min(cone.horizon());
    if last == 0 {
        return Err(Error::config("realized series has no observations after the forecast anchor"));
    }
    let widths = cone.band(level)?;
    let points: Vec<ScoredPoint> = (1..=last)
        .map(|k| {
            let value = realized.values()[start + k];
            let (lower, upper) = (cone.trend[k] - widths[k], cone.trend[k] + widths[k]);
            ScoredPoint {
                timestamp: realized.timestamps()[start + k],
                step: k,
                value,
                lower,
                upper,
                inside: value >= lower && value <= upper,
            }
        })
        .collect();
    let fraction = points.iter().filter(|p| p.inside).count() as f64 / points.len() as f64;
    Ok(AccuracyReport { level, fraction, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{FitMethod, FitQuality, QFit};

    fn power_law_curves(q: f64, alpha: f64, d: f64, max_h: f64) -> ParameterCurves {
        let mut hs = vec![1.0];
        while *hs.last().unwrap() < max_h {
            let next = (hs.last().unwrap() * 1.5_f64).min(max_h);
            hs.push(next);
        }
        let fits: Vec<QFit> = hs
            .iter()
            .map(|&h| QFit {
                method: FitMethod::CdfLeastSquares,
                horizon: h,
                q,
                beta: (d * h).powf(-2.0 / alpha),
                q_se: 0.0,
                beta_se: 0.0,
                residual_rms: 0.0,
                misfit: 0.0,
                quality: FitQuality::Good,
                iterations: 0,
            })
            .collect();
        ParameterCurves::from_fits(&fits, 3, None).unwrap()
    }

    fn cone(q: f64, alpha: f64, levels: Vec<f64>) -> ForecastCone {
        let curves = power_law_curves(q, alpha, 2.0, 100.0);
        let trend = TrendModel::parabola(1_000, 100.0, -0.5, 50.0).unwrap();
        let opts = ConeOptions { horizon: 100, levels, price_points: 51, grid_stride: 10, span_level: 0.01 };
        forecast_cone(&trend, &curves, &opts).unwrap()
    }

    #[test]
    fn trend_line_has_probability_one() {
        let c = cone(1.4, 1.6, vec![0.15, 0.5]);
        for t in 0..=100 {
            assert_eq!(c.probability(t, c.trend[t]).unwrap(), 1.0);
        }
        assert!(c.probabilities.iter().all(|p| (0.0..=1.0).contains(p)));
        assert_eq!(c.grid_times.len(), 11);
        assert_eq!(c.probabilities.len(), 11 * 51);
    }

    #[test]
    fn half_width_scales_as_power_law() {
        let alpha = 1.6;
        let c = cone(1.4, alpha, vec![0.3]);
        let x: Vec<f64> = (1..=100).map(|t| (t as f64).ln()).collect();
        let y: Vec<f64> = c.half_widths[0][1..].iter().map(|w| w.ln()).collect();
        let (_, slope, _) = crate::estimate::ols(&x, &y);
        assert!((slope * alpha - 1.0).abs() < 0.01, "{slope}");
    }

    #[test]
    fn gaussian_one_sigma_band() {
        // q = 1, alpha = 2: beta = 1/(D t), variance 1/(2 beta) = D t / 2
        let c = cone(1.0, 2.0, vec![0.317_310_507_862_914_1]);
        for t in [1usize, 10, 100] {
            let sigma = (2.0 * t as f64 / 2.0).sqrt();
            assert!((c.half_widths[0][t] / sigma - 1.0).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn nesting_and_growth() {
        let c = cone(1.5, 1.7, vec![0.1, 0.3, 0.6, 0.9]);
        for t in 0..=100 {
            for l in 1..4 {
                assert!(c.half_widths[l][t] <= c.half_widths[l - 1][t]);
            }
        }
        for w in &c.half_widths {
            assert!(w.windows(2).all(|p| p[1] >= p[0]));
        }
    }

    #[test]
    fn uncovered_lag_is_a_config_error() {
        let curves = power_law_curves(1.3, 1.8, 1.0, 20.0);
        let trend = TrendModel::parabola(0, 10.0, -0.1, 5.0).unwrap();
        let opts = ConeOptions { horizon: 30, ..Default::default() };
        assert!(matches!(forecast_cone(&trend, &curves, &opts), Err(Error::Config(m)) if m.contains("21")));
    }

    #[test]
    fn accuracy_extremes() {
        let c = cone(1.4, 1.6, vec![0.15]);
        let ts: Vec<i64> = (0..=100).map(|k| 1_000 + 60 * k).collect();
        let on_trend = IndexSeries::new(ts.clone(), c.trend.clone(), 60).unwrap();
        assert_eq!(accuracy(&c, &on_trend, 0.15).unwrap().fraction, 1.0);
        assert_eq!(accuracy(&c, &on_trend, 0.99).unwrap().fraction, 1.0);
        let far: Vec<f64> = c.trend.iter().map(|v| v + 1e4).collect();
        let far = IndexSeries::new(ts, far, 60).unwrap();
        let r = accuracy(&c, &far, 0.15).unwrap();
        assert_eq!(r.fraction, 0.0);
        assert_eq!(r.points.len(), 100);
        let elsewhere = IndexSeries::new(vec![5, 6], vec![1.0, 2.0], 1).unwrap();
        assert!(matches!(accuracy(&c, &elsewhere, 0.15), Err(Error::Config(_))));
    }
}
