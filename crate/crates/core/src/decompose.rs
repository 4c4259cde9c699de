//! Price returns, centered moving-window trend and the detrended fluctuation.
//!
//! Time is measured on the trading clock: lags and window lengths count
//! observations of the series, so market closures (overnight, weekends) are
//! skipped rather than interpolated.

use crate::error::{Error, Result};

/// Timestamped index levels at a declared resolution.
///
/// Timestamps are seconds since the Unix epoch and strictly increasing; gaps
/// larger than the resolution mark market closures.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSeries {
    timestamps: Vec<i64>,
    values: Vec<f64>,
    resolution_secs: i64,
}

impl IndexSeries {
    pub fn new(timestamps: Vec<i64>, values: Vec<f64>, resolution_secs: i64) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::domain(format!(
                "{} timestamps but {} values",
                timestamps.len(),
                values.len()
            )));
        }
        if timestamps.is_empty() {
            return Err(Error::domain("index series is empty"));
        }
        if resolution_secs <= 0 {
            return Err(Error::domain(format!("resolution must be positive, got {resolution_secs} s")));
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::domain(format!(
                "timestamps must be strictly increasing (position {}: {} after {})",
                i + 1,
                timestamps[i + 1],
                timestamps[i]
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::domain(format!("index value at position {i} must be finite and positive, got {}", values[i])));
        }
        Ok(Self { timestamps, values, resolution_secs })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn resolution_secs(&self) -> i64 {
        self.resolution_secs
    }

    /// Position of an exact timestamp.
    pub fn position(&self, t: i64) -> Result<usize> {
        self.timestamps
            .binary_search(&t)
            .map_err(|_| Error::Lookup(format!("timestamp {t} is not in the series")))
    }

    /// Positions `[start, end]` of observations with `from <= timestamp <= to`.
    pub fn range(&self, from: i64, to: i64) -> std::ops::Range<usize> {
        let lo = self.timestamps.partition_point(|&t| t < from);
        let hi = self.timestamps.partition_point(|&t| t <= to);
        lo..hi.max(lo)
    }

    /// Sub-series of the positions in `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        Self::new(
            self.timestamps[range.clone()].to_vec(),
            self.values[range].to_vec(),
            self.resolution_secs,
        )
    }

    /// Number of steps of the series resolution that fit in a gap-free stretch
    /// of `secs` seconds, at least one.
    pub fn steps_for(&self, secs: i64) -> usize {
        ((secs + self.resolution_secs / 2) / self.resolution_secs).max(1) as usize
    }
}

/// Timestamped real values (returns, trends, fluctuations).
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub timestamps: Vec<i64>,
    pub values: Vec<f64>,
}

impl Series {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `X(t) = I(t0 + t) - I(t0)` for every observation at or after `t0`.
pub fn price_return(series: &IndexSeries, t0: i64) -> Result<Series> {
    let start = series.position(t0)?;
    let base = series.values[start];
    Ok(Series {
        timestamps: series.timestamps[start..].to_vec(),
        values: series.values[start..].iter().map(|v| v - base).collect(),
    })
}

/// Centered moving average over `window` observations.
///
/// Each point averages the `2 * (window / 2) + 1` observations centered on it.
/// Near the ends the half-width shrinks to the distance from the edge so the
/// window stays symmetric (the endpoints themselves are left unsmoothed).
pub fn moving_average(values: &[f64], window: usize) -> Result<Vec<f64>> {
    if window < 2 {
        return Err(Error::config(format!("trend window must span at least 2 steps, got {window}")));
    }
    if values.len() <= window {
        return Err(Error::config(format!(
            "series of {} points is not longer than the trend window of {window} steps",
            values.len()
        )));
    }
    let n = values.len();
    let half = window / 2;
    // prefix sums of offsets from the first value limit cancellation
    let origin = values[0];
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in values {
        acc += v - origin;
        prefix.push(acc);
    }
    Ok((0..n)
        .map(|i| {
            let k = half.min(i).min(n - 1 - i);
            let sum = prefix[i + k + 1] - prefix[i - k];
            origin + sum / (2 * k + 1) as f64
        })
        .collect())
}

/// Moving-window trend of the index levels.
pub fn moving_trend(series: &IndexSeries, window: usize) -> Result<Series> {
    Ok(Series {
        timestamps: series.timestamps.clone(),
        values: moving_average(&series.values, window)?,
    })
}

/// Price return split into a smooth trend and a stationary fluctuation.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub timestamps: Vec<i64>,
    /// `I(t0)`, to map return-space quantities back to index levels.
    pub base_level: f64,
    pub returns: Vec<f64>,
    pub trend: Vec<f64>,
    pub fluctuation: Vec<f64>,
    pub window: usize,
}

impl Decomposition {
    /// Trend in index units, `I(t0) + trend`.
    pub fn index_trend(&self) -> Vec<f64> {
        self.trend.iter().map(|v| self.base_level + v).collect()
    }

    /// Largest `|trend + fluctuation - return|` relative to the largest `|return|`.
    pub fn reconstruction_error(&self) -> f64 {
        let scale = self.returns.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        self.returns
            .iter()
            .zip(self.trend.iter().zip(&self.fluctuation))
            .map(|(x, (tr, f))| (tr + f - x).abs())
            .fold(0.0, f64::max)
            / scale
    }
}

/// Price return from `t0`, its moving-window trend and the fluctuation
/// `x = X - trend`.
pub fn detrend(series: &IndexSeries, t0: i64, window: usize) -> Result<Decomposition> {
    let start = series.position(t0)?;
    let ret = price_return(series, t0)?;
    let trend = moving_average(&ret.values, window)?;
    let fluctuation = ret.values.iter().zip(&trend).map(|(x, m)| x - m).collect();
    Ok(Decomposition {
        timestamps: ret.timestamps,
        base_level: series.values[start],
        returns: ret.values,
        trend,
        fluctuation,
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: &[f64]) -> IndexSeries {
        let ts = (0..values.len() as i64).map(|i| 1_600_000_000 + 60 * i).collect();
        IndexSeries::new(ts, values.to_vec(), 60).unwrap()
    }

    #[test]
    fn price_return_examples() {
        let s = series(&[100.0, 103.0, 99.0]);
        let r = price_return(&s, s.timestamps()[0]).unwrap();
        assert_eq!(r.values, vec![0.0, 3.0, -1.0]);
        let r = price_return(&s, s.timestamps()[1]).unwrap();
        assert_eq!(r.values, vec![0.0, -4.0]);
        assert!(matches!(price_return(&s, 5), Err(Error::Lookup(_))));
        let c = series(&[7.0; 10]);
        assert!(price_return(&c, c.timestamps()[3]).unwrap().values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn moving_average_examples() {
        let m = moving_average(&[1.0, 2.0, 3.0, 4.0, 5.0], 3).unwrap();
        assert_eq!(&m[1..4], &[2.0, 3.0, 4.0]);
        assert_eq!(m[0], 1.0);
        assert!(moving_average(&[5.0; 20], 6).unwrap().iter().all(|v| (*v - 5.0).abs() < 1e-15));
        let line: Vec<f64> = (0..50).map(|i| 3.0 + 0.5 * i as f64).collect();
        let m = moving_average(&line, 10).unwrap();
        for (a, b) in m.iter().zip(&line) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn window_checks() {
        assert!(matches!(moving_average(&[1.0, 2.0, 3.0], 1), Err(Error::Config(_))));
        assert!(matches!(moving_average(&[1.0, 2.0, 3.0], 3), Err(Error::Config(_))));
    }

    #[test]
    fn series_validation() {
        assert!(IndexSeries::new(vec![1, 1], vec![1.0, 2.0], 1).is_err());
        assert!(IndexSeries::new(vec![2, 1], vec![1.0, 2.0], 1).is_err());
        assert!(IndexSeries::new(vec![1, 2], vec![1.0, -2.0], 1).is_err());
        assert!(IndexSeries::new(vec![1, 2], vec![1.0, f64::NAN], 1).is_err());
        assert!(IndexSeries::new(vec![1], vec![1.0, 2.0], 1).is_err());
        assert!(IndexSeries::new(vec![], vec![], 1).is_err());
    }

    #[test]
    fn pure_trend_has_no_fluctuation() {
        let s = series(&(0..100).map(|i| 50.0 + 0.25 * i as f64).collect::<Vec<_>>());
        let d = detrend(&s, s.timestamps()[0], 20).unwrap();
        assert!(d.fluctuation.iter().all(|v| v.abs() < 1e-12));
        assert!(d.reconstruction_error() < 1e-15);
    }

    #[test]
    fn shift_equivariance() {
        let v: Vec<f64> = (0..300).map(|i| 100.0 + (i as f64 * 0.1).sin() * 5.0 + 0.01 * i as f64).collect();
        let shifted: Vec<f64> = v.iter().map(|x| x + 37.0).collect();
        let a = detrend(&series(&v), 1_600_000_000, 30).unwrap();
        let b = detrend(&series(&shifted), 1_600_000_000, 30).unwrap();
        for i in 0..v.len() {
            assert!((a.fluctuation[i] - b.fluctuation[i]).abs() <= 1e-12 * a.returns[i].abs().max(1.0));
            assert!((a.index_trend()[i] + 37.0 - b.index_trend()[i]).abs() <= 1e-12 * b.index_trend()[i]);
        }
    }

    #[test]
    fn range_and_steps() {
        let s = series(&[1.0; 10]);
        let t = s.timestamps().to_vec();
        assert_eq!(s.range(t[2], t[5]), 2..6);
        assert_eq!(s.range(t[2] + 1, t[5] - 1), 3..5);
        assert_eq!(s.range(0, 1), 0..0);
        assert_eq!(s.steps_for(3600), 60);
        assert_eq!(s.steps_for(1), 1);
    }
}
