//! Deterministic response trends anchored at the start of the forecast.
//!
//! Time `t` counts steps of the series resolution after the anchor.

use crate::decompose::IndexSeries;
use crate::error::{Error, Result};
use crate::estimate::ols;

/// Least-squares slope of the index against the trading-step position over
/// `[fit_start, fit_end]` (inclusive timestamps), in price per step.
pub fn fit_collapse_slope(series: &IndexSeries, fit_start: i64, fit_end: i64) -> Result<f64> {
    let range = series.range(fit_start, fit_end);
    if range.len() < 2 {
        return Err(Error::config(format!(
            "slope fit interval [{fit_start}, {fit_end}] holds {} observations, at least 2 required",
            range.len()
        )));
    }
    let x: Vec<f64> = range.clone().map(|k| k as f64).collect();
    let (_, slope, _) = ols(&x, &series.values()[range]);
    Ok(slope)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrendShape {
    /// `I0 + s t + c t^2` with `c = -s/(2 T)`, flat at the recovery time `T`.
    Parabola { recovery_time: f64 },
    /// Smoothed maximum of the collapse line and a recovery line of slope
    /// `ratio |s|` crossing it at `intersection_time`.
    Hyperbola { recovery_ratio: f64, intersection_time: f64, smoothing: f64 },
}

/// Response trend `I(t)` for `t >= 0` steps after the anchor timestamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendModel {
    pub shape: TrendShape,
    /// Anchor timestamp (seconds since the epoch).
    pub t0: i64,
    pub level: f64,
    pub slope: f64,
    offset: f64,
    /// Amplitude of the transient `kick * t * exp(-t/T)` that pins the
    /// hyperbola's initial slope to `slope`.
    kick: f64,
}

impl TrendModel {
    /// Parabola through `level` at `t = 0` with initial slope `slope` and zero
    /// slope at `recovery_time`.
    pub fn parabola(t0: i64, level: f64, slope: f64, recovery_time: f64) -> Result<Self> {
        if !(recovery_time > 0.0 && recovery_time.is_finite()) {
            return Err(Error::config(format!("recovery time must be positive, got {recovery_time}")));
        }
        check_finite(level, slope)?;
        Ok(Self { shape: TrendShape::Parabola { recovery_time }, t0, level, slope, offset: 0.0, kick: 0.0 })
    }

    /// Smooth V-shaped trend with asymptotes `L1 = level + slope t` and
    /// `L2 = L1(T) + ratio |slope| (t - T)`:
    /// `(L1 + L2)/2 + sqrt(((L1 - L2)/2)^2 + smoothing^2) + offset + k t e^{-t/T}`,
    /// with `offset` making the trend pass through `level` at `t = 0` and the
    /// transient `k` making its initial slope equal `slope`. The transient
    /// keeps the trend convex as long as `smoothing` is small next to the
    /// asymptote gap at `t = 0`.
    pub fn hyperbola(
        t0: i64,
        level: f64,
        slope: f64,
        recovery_ratio: f64,
        intersection_time: f64,
        smoothing: f64,
    ) -> Result<Self> {
        check_finite(level, slope)?;
        if !(slope < 0.0) {
            return Err(Error::config(format!("the collapse slope must be negative, got {slope}")));
        }
        if !(recovery_ratio > 0.0 && recovery_ratio <= 1.0) {
            return Err(Error::config(format!("recovery ratio must lie in (0, 1], got {recovery_ratio}")));
        }
        if !(intersection_time > 0.0 && intersection_time.is_finite()) {
            return Err(Error::config(format!("intersection time must be positive, got {intersection_time}")));
        }
        if !(smoothing > 0.0 && smoothing.is_finite()) {
            return Err(Error::config(format!("smoothing must be positive, got {smoothing}")));
        }
        let mut m = Self {
            shape: TrendShape::Hyperbola { recovery_ratio, intersection_time, smoothing },
            t0,
            level,
            slope,
            offset: 0.0,
            kick: 0.0,
        };
        let d0 = m.half_gap(0.0);
        m.offset = d0 - d0.hypot(smoothing);
        m.kick = slope - m.derivative(0.0);
        Ok(m)
    }

    /// `(L1 - L2)/2` for the hyperbola.
    fn half_gap(&self, t: f64) -> f64 {
        match self.shape {
            TrendShape::Hyperbola { recovery_ratio, intersection_time, .. } => {
                let rise = recovery_ratio * self.slope.abs();
                0.5 * (self.slope - rise) * (t - intersection_time)
            }
            TrendShape::Parabola { .. } => 0.0,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self.shape {
            TrendShape::Parabola { recovery_time } => {
                let c = -self.slope / (2.0 * recovery_time);
                self.level + t * (self.slope + c * t)
            }
            TrendShape::Hyperbola { smoothing, intersection_time, .. } => {
                let l1 = self.level + self.slope * t;
                let d = self.half_gap(t);
                // (L1 + L2)/2 = L1 - d
                l1 - d + d.hypot(smoothing) + self.offset + self.kick * t * (-t / intersection_time).exp()
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self.shape {
            TrendShape::Parabola { recovery_time } => self.slope * (1.0 - t / recovery_time),
            TrendShape::Hyperbola { recovery_ratio, smoothing, intersection_time } => {
                let rise = recovery_ratio * self.slope.abs();
                let dd = 0.5 * (self.slope - rise);
                let d = self.half_gap(t);
                let transient = self.kick * (-t / intersection_time).exp() * (1.0 - t / intersection_time);
                0.5 * (self.slope + rise) + dd * d / d.hypot(smoothing) + transient
            }
        }
    }

    /// Piecewise-linear limit of the hyperbola (`max(L1, L2)`), or the trend
    /// itself for a parabola.
    pub fn asymptotic_value(&self, t: f64) -> f64 {
        match self.shape {
            TrendShape::Hyperbola { .. } => {
                let l1 = self.level + self.slope * t;
                l1 - self.half_gap(t) + self.half_gap(t).abs()
            }
            TrendShape::Parabola { .. } => self.value(t),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.shape {
            TrendShape::Parabola { .. } => "parabola",
            TrendShape::Hyperbola { .. } => "hyperbola",
        }
    }
}

fn check_finite(level: f64, slope: f64) -> Result<()> {
    if !(level.is_finite() && slope.is_finite()) {
        return Err(Error::config(format!("trend level and slope must be finite (level={level}, slope={slope})")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric_derivative(m: &TrendModel, t: f64) -> f64 {
        let h = 1e-4 * (1.0 + t.abs());
        (m.value(t + h) - m.value(t - h)) / (2.0 * h)
    }

    #[test]
    fn parabola_example() {
        let m = TrendModel::parabola(0, 2237.0, -10.0, 60.0).unwrap();
        assert_eq!(m.value(0.0), 2237.0);
        assert!((m.value(60.0) - 1937.0).abs() < 1e-9);
        assert_eq!(m.derivative(0.0), -10.0);
        assert_eq!(m.derivative(60.0), 0.0);
        assert!((numeric_derivative(&m, 0.0) + 10.0).abs() < 1e-9);
        assert!(numeric_derivative(&m, 60.0).abs() < 1e-9);
        let flat = TrendModel::parabola(0, 100.0, 0.0, 5.0).unwrap();
        assert!((0..20).all(|t| flat.value(t as f64) == 100.0));
        assert!(TrendModel::parabola(0, 100.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn hyperbola_constraints() {
        let m = TrendModel::hyperbola(0, 2237.0, -10.0, 0.5, 60.0, 0.02 * 2237.0).unwrap();
        assert_eq!(m.value(0.0), 2237.0);
        assert!((m.derivative(0.0) + 10.0).abs() < 1e-12);
        assert!((numeric_derivative(&m, 0.0) + 10.0).abs() < 1e-9);
        let far = 100.0 * 60.0;
        assert!((m.derivative(far) / 5.0 - 1.0).abs() < 1e-6);
        assert!((numeric_derivative(&m, far) / 5.0 - 1.0).abs() < 1e-6);
        // convex
        for k in 1..200 {
            let t = k as f64;
            assert!(m.value(t + 1.0) - 2.0 * m.value(t) + m.value(t - 1.0) > 0.0);
        }
        assert!((m.derivative(1.0) - numeric_derivative(&m, 1.0)).abs() < 1e-7);
    }

    #[test]
    fn hyperbola_approaches_corner_as_smoothing_vanishes() {
        for &h in &[1.0, 0.1, 0.01] {
            let m = TrendModel::hyperbola(0, 1000.0, -4.0, 0.5, 30.0, h).unwrap();
            let worst = (0..=120).map(|t| (m.value(t as f64) - m.asymptotic_value(t as f64)).abs()).fold(0.0, f64::max);
            assert!(worst <= 2.0 * h + 1e-9, "h={h}: {worst}");
        }
    }

    #[test]
    fn hyperbola_rejects_bad_parameters() {
        assert!(TrendModel::hyperbola(0, 100.0, 1.0, 0.5, 10.0, 1.0).is_err());
        assert!(TrendModel::hyperbola(0, 100.0, -1.0, 1.5, 10.0, 1.0).is_err());
        assert!(TrendModel::hyperbola(0, 100.0, -1.0, 0.5, 0.0, 1.0).is_err());
        assert!(TrendModel::hyperbola(0, 100.0, -1.0, 0.5, 10.0, 0.0).is_err());
    }

    #[test]
    fn collapse_slope() {
        let ts: Vec<i64> = (0..20).map(|i| 86_400 * i).collect();
        let vals: Vec<f64> = (0..20).map(|i| 500.0 - 3.5 * i as f64).collect();
        let s = IndexSeries::new(ts.clone(), vals, 86_400).unwrap();
        assert!((fit_collapse_slope(&s, ts[2], ts[15]).unwrap() + 3.5).abs() < 1e-12);
        let two = IndexSeries::new(vec![0, 60], vec![10.0, 13.0], 60).unwrap();
        assert!((fit_collapse_slope(&two, 0, 60).unwrap() - 3.0).abs() < 1e-15);
        assert!(matches!(fit_collapse_slope(&s, ts[19] + 1, ts[19] + 100), Err(Error::Config(_))));
    }
}
