//! Lagged increments of the fluctuation series, their histograms and
//! empirical CDFs.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Histogram with densities normalized to integrate to one over its range.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub densities: Vec<f64>,
    /// Fraction of all samples that fell inside the histogram range.
    pub coverage: f64,
}

impl Histogram {
    /// Bins `sorted` values falling in `[lo, hi]` into `bins` equal-width bins.
    fn from_sorted(sorted: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0u64; bins];
        for &v in sorted {
            if v < lo || v > hi {
                continue;
            }
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        let inside: u64 = counts.iter().sum();
        let norm = if inside > 0 { 1.0 / (inside as f64 * width) } else { 0.0 };
        let densities = counts.iter().map(|&c| c as f64 * norm).collect();
        let coverage = inside as f64 / sorted.len() as f64;
        Self { edges, counts, densities, coverage }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }

    pub fn range(&self) -> (f64, f64) {
        (self.edges[0], self.edges[self.edges.len() - 1])
    }

    pub fn integral(&self) -> f64 {
        self.edges.windows(2).zip(&self.densities).map(|(w, d)| (w[1] - w[0]) * d).sum()
    }

    pub fn occupied_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// How histogram bins are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinRule {
    /// Freedman–Diaconis width `2 IQR n^{-1/3}` over the range between the
    /// `clip` and `1 - clip` quantiles.
    FreedmanDiaconis { clip: f64 },
    /// Fixed number of bins over the same clipped range.
    Count { bins: usize, clip: f64 },
}

impl Default for BinRule {
    fn default() -> Self {
        BinRule::FreedmanDiaconis { clip: 0.001 }
    }
}

const MAX_BINS: usize = 20_000;

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = (pos.floor() as usize).min(n - 2);
    let frac = pos - i as f64;
    sorted[i] + frac * (sorted[i + 1] - sorted[i])
}

/// Freedman–Diaconis histogram of `sorted` between the `clip` quantiles.
pub(crate) fn fd_histogram(sorted: &[f64], clip: f64) -> Histogram {
    let n = sorted.len();
    let (lo, hi) = (quantile(sorted, clip), quantile(sorted, 1.0 - clip));
    if !(hi > lo) {
        return degenerate_histogram(sorted[n / 2]);
    }
    let iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    let bins = if iqr > 0.0 {
        let width = 2.0 * iqr * (n as f64).powf(-1.0 / 3.0);
        ((hi - lo) / width).ceil() as usize
    } else {
        (n as f64).sqrt().ceil() as usize
    };
    Histogram::from_sorted(sorted, lo, hi, bins.clamp(1, MAX_BINS))
}

fn degenerate_histogram(at: f64) -> Histogram {
    Histogram { edges: vec![at - 0.5, at + 0.5], counts: vec![1], densities: vec![1.0], coverage: 1.0 }
}

/// Increments of the fluctuation at one lag.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    /// Lag in steps of the series resolution.
    pub horizon: f64,
    /// Sorted sample values; the empirical CDF at `sorted[k]` is `(k + 1)/n`.
    pub sorted: Vec<f64>,
    pub histogram: Histogram,
}

impl EmpiricalDistribution {
    pub fn from_samples(horizon: f64, mut samples: Vec<f64>, rule: BinRule) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::domain(format!("horizon must be positive, got {horizon}")));
        }
        if samples.is_empty() {
            return Err(Error::estimation(Some(horizon), "no samples"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::estimation(Some(horizon), "non-finite sample value"));
        }
        samples.sort_by(f64::total_cmp);
        let histogram = match rule {
            BinRule::FreedmanDiaconis { clip } => fd_histogram(&samples, clip),
            BinRule::Count { bins, clip } => {
                let (lo, hi) = (quantile(&samples, clip), quantile(&samples, 1.0 - clip));
                if hi > lo {
                    Histogram::from_sorted(&samples, lo, hi, bins.max(1))
                } else {
                    degenerate_histogram(lo)
                }
            }
        };
        Ok(Self { horizon, sorted: samples, histogram })
    }

    /// Distribution given directly by a histogram (no raw samples).
    pub fn from_histogram(horizon: f64, edges: Vec<f64>, densities: Vec<f64>) -> Result<Self> {
        if edges.len() != densities.len() + 1 || densities.is_empty() {
            return Err(Error::domain("histogram needs one more edge than densities"));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) || densities.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::domain("histogram edges must increase and densities be non-negative"));
        }
        let total: f64 = edges.windows(2).zip(&densities).map(|(w, d)| (w[1] - w[0]) * d).sum();
        if !(total > 0.0) {
            return Err(Error::domain("histogram has zero mass"));
        }
        let densities: Vec<f64> = densities.iter().map(|d| d / total).collect();
        let counts = densities.iter().map(|&d| u64::from(d > 0.0)).collect();
        Ok(Self { horizon, sorted: Vec::new(), histogram: Histogram { edges, counts, densities, coverage: 1.0 } })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Empirical CDF `#{x_i <= x}/n`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// `(x_k, p_k)` pairs at up to `points` evenly spaced ranks, with the
    /// plotting position `p_k = (k + 1/2)/n`.
    pub fn cdf_points(&self, points: usize) -> Vec<(f64, f64)> {
        let n = self.sorted.len();
        let m = points.min(n).max(1);
        (0..m)
            .map(|j| {
                let k = ((j as f64 + 0.5) * n as f64 / m as f64) as usize;
                let k = k.min(n - 1);
                (self.sorted[k], (k as f64 + 0.5) / n as f64)
            })
            .collect()
    }

    pub fn mean_square(&self) -> f64 {
        self.sorted.iter().map(|v| v * v).sum::<f64>() / self.sorted.len() as f64
    }

    pub fn iqr(&self) -> f64 {
        quantile(&self.sorted, 0.75) - quantile(&self.sorted, 0.25)
    }
}

/// Increments `x(tau + h) - x(tau)` at every lag `h` in `horizons`.
///
/// Lags with fewer than `min_samples` increments are rejected.
pub fn empirical_distributions(
    fluct: &[f64],
    horizons: &[usize],
    rule: BinRule,
    min_samples: usize,
) -> Result<Vec<EmpiricalDistribution>> {
    horizons
        .par_iter()
        .map(|&h| {
            if h == 0 {
                return Err(Error::config("horizons must be at least one step"));
            }
            let available = fluct.len().saturating_sub(h);
            if available < min_samples.max(1) {
                return Err(Error::estimation(
                    Some(h as f64),
                    format!("{available} samples available, at least {min_samples} required"),
                ));
            }
            let samples = fluct.windows(h + 1).map(|w| w[h] - w[0]).collect();
            EmpiricalDistribution::from_samples(h as f64, samples, rule)
        })
        .collect()
}

/// About `count` horizons log-spaced over `[min, max]`, rounded to whole
/// steps and deduplicated; both ends are always included.
pub fn log_spaced_horizons(min: usize, max: usize, count: usize) -> Result<Vec<usize>> {
    if min == 0 || max < min || count < 2 {
        return Err(Error::config(format!(
            "log-spaced horizons need 1 <= min <= max and count >= 2 (min={min}, max={max}, count={count})"
        )));
    }
    let (a, b) = ((min as f64).ln(), (max as f64).ln());
    let mut h: Vec<usize> = (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp().round() as usize)
        .map(|v| v.clamp(min, max))
        .collect();
    h.dedup();
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstats::sample_q_gaussian;

    #[test]
    fn log_horizons() {
        let h = log_spaced_horizons(1, 23_400, 40).unwrap();
        assert_eq!((h[0], *h.last().unwrap()), (1, 23_400));
        assert!(h.windows(2).all(|w| w[1] > w[0]));
        assert!(h.len() > 30);
        assert_eq!(log_spaced_horizons(5, 5, 3).unwrap(), vec![5]);
        assert!(log_spaced_horizons(0, 5, 3).is_err());
    }

    #[test]
    fn counting_and_degenerate() {
        let x: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let d = empirical_distributions(&x, &[1, 5], BinRule::default(), 10).unwrap();
        assert_eq!(d[0].len(), 999);
        assert_eq!(d[1].len(), 995);
        let c = empirical_distributions(&[3.0; 600], &[2], BinRule::default(), 500).unwrap();
        assert!(c[0].sorted.iter().all(|v| *v == 0.0));
        assert!((c[0].histogram.integral() - 1.0).abs() < 1e-15);
        assert!(matches!(
            empirical_distributions(&[0.0; 100], &[2], BinRule::default(), 500),
            Err(Error::Estimation { horizon: Some(h), .. }) if h == 2.0
        ));
    }

    #[test]
    fn random_walk_variance_scales_with_lag() {
        let steps = sample_q_gaussian(1.0, 0.5, 100_001, 5).unwrap(); // unit variance
        let mut walk = vec![0.0];
        for s in steps {
            walk.push(walk.last().unwrap() + s);
        }
        let d = empirical_distributions(&walk, &[1, 10], BinRule::default(), 500).unwrap();
        for e in &d {
            assert!((e.mean_square() / e.horizon - 1.0).abs() < 0.05, "{}", e.mean_square());
        }
    }

    #[test]
    fn histogram_normalization_and_ecdf() {
        let s = sample_q_gaussian(1.5, 1.0, 10_000, 1).unwrap();
        let d = EmpiricalDistribution::from_samples(1.0, s, BinRule::default()).unwrap();
        assert!((d.histogram.integral() - 1.0).abs() < 1e-12);
        assert!((d.histogram.coverage - 0.998).abs() < 1e-3);
        assert!(d.histogram.bins() > 10);
        assert_eq!(d.ecdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(d.ecdf(f64::INFINITY), 1.0);
        let pts = d.cdf_points(100);
        assert_eq!(pts.len(), 100);
        assert!(pts.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 > w[0].1));
    }

    #[test]
    fn quantile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile(&v, 0.5), 1.5);
        assert_eq!(quantile(&v, 0.0), 0.0);
        assert_eq!(quantile(&v, 1.0), 3.0);
    }
}
