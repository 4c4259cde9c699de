//! Monte-Carlo price paths drawn from the cone's per-step laws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::cone::ForecastCone;
use crate::error::{Error, Result};
use crate::qstats::QGaussianSampler;

/// Simulated prices, `paths[p][t]` for steps `0..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub seed: u64,
    pub paths: Vec<Vec<f64>>,
}

/// Per-step summary of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSummary {
    pub step: usize,
    pub mean: f64,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Draws `n` paths. Each step is an independent draw from that step's
/// marginal, so the ensemble reproduces the cone pointwise; it says nothing
/// about the joint law across steps. Path `p` uses stream `p` of the seeded
/// generator, so results do not depend on thread scheduling.
pub fn simulate_paths(cone: &ForecastCone, n: usize, seed: u64) -> Result<PathEnsemble> {
    if n == 0 {
        return Err(Error::config("number of simulated paths must be positive"));
    }
    let samplers: Vec<Option<QGaussianSampler>> = cone
        .laws
        .iter()
        .map(|l| l.map(|l| QGaussianSampler::new(l.q, l.beta)).transpose())
        .collect::<Result<_>>()?;
    let paths = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            samplers
                .iter()
                .zip(&cone.trend)
                .map(|(s, c)| match s {
                    Some(s) => c + s.draw(&mut rng),
                    None => *c,
                })
                .collect()
        })
        .collect();
    Ok(PathEnsemble { seed, paths })
}

impl PathEnsemble {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Prices of all paths at step `t`.
    pub fn at_step(&self, t: usize) -> Vec<f64> {
        self.paths.iter().map(|p| p[t]).collect()
    }

    /// Mean, median and the central `1 - level` interval at every step.
    pub fn summary(&self, level: f64) -> Vec<StepSummary> {
        let steps = self.paths.first().map_or(0, Vec::len);
        (0..steps)
            .map(|t| {
                let mut v = self.at_step(t);
                v.sort_by(f64::total_cmp);
                StepSummary {
                    step: t,
                    mean: v.iter().sum::<f64>() / v.len() as f64,
                    median: crate::estimate::quantile(&v, 0.5),
                    lower: crate::estimate::quantile(&v, level / 2.0),
                    upper: crate::estimate::quantile(&v, 1.0 - level / 2.0),
                }
            })
            .collect()
    }

    /// Fraction of simulated points (steps `>= 1`) inside the cone band at
    /// `level`; close to `1 - level` for a consistent cone.
    pub fn coverage(&self, cone: &ForecastCone, level: f64) -> Result<f64> {
        let widths = cone.band(level)?;
        let mut inside = 0usize;
        let mut total = 0usize;
        for p in &self.paths {
            for t in 1..p.len().min(widths.len()) {
                total += 1;
                if (p[t] - cone.trend[t]).abs() <= widths[t] {
                    inside += 1;
                }
            }
        }
        if total == 0 {
            return Err(Error::config("ensemble has no steps after the anchor"));
        }
        Ok(inside as f64 / total as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstats::QGaussian;
    use crate::trend_forecast::{StepLaw, TrendModel};

    fn cone() -> ForecastCone {
        let trend = TrendModel::parabola(0, 50.0, -0.2, 30.0).unwrap();
        let laws: Vec<Option<StepLaw>> = (0..=30)
            .map(|t| (t > 0).then(|| StepLaw { q: 1.4, beta: (t as f64).powf(-1.2) }))
            .collect();
        ForecastCone {
            t0: 0,
            trend: (0..=30).map(|t| trend.value(t as f64)).collect(),
            half_widths: vec![],
            levels: vec![],
            laws,
            grid_times: vec![],
            price_grid: vec![],
            probabilities: vec![],
        }
    }

    #[test]
    fn deterministic_and_anchored() {
        let c = cone();
        let a = simulate_paths(&c, 50, 9).unwrap();
        let b = simulate_paths(&c, 50, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.paths.iter().all(|p| p[0] == 50.0 && p.len() == 31));
        assert_ne!(a.paths[0], a.paths[1]);
        assert_ne!(a, simulate_paths(&c, 50, 10).unwrap());
        assert!(simulate_paths(&c, 0, 1).is_err());
    }

    #[test]
    fn marginals_follow_the_step_law() {
        let c = cone();
        let e = simulate_paths(&c, 20_000, 77).unwrap();
        let t = 20;
        let law = c.laws[t].unwrap();
        let d = QGaussian::new(law.q, law.beta).unwrap();
        let mut x: Vec<f64> = e.at_step(t).iter().map(|p| p - c.trend[t]).collect();
        x.sort_by(f64::total_cmp);
        let n = x.len() as f64;
        let ks = x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let f = d.cdf(v).unwrap();
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.02, "{ks}");
        let cov = e.coverage(&c, 0.3).unwrap();
        assert!((cov - 0.7).abs() < 0.01, "{cov}");
        let s = e.summary(0.1);
        assert!(s[t].lower < s[t].median && s[t].median < s[t].upper);
    }
}
