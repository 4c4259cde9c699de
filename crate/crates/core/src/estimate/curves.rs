//! Per-horizon parameter tables and the scaling-exponent extraction.

use rayon::prelude::*;

use super::empirical::EmpiricalDistribution;
use super::fit::{fit, FitMethod, FitOptions, QFit};
use crate::error::{Error, Result};
use crate::qstats::QParams;
use crate::regimes::{ZoneLabel, ZoneSegmentation};

/// Local power-law fit `ln beta = c + m ln t` and the implied `alpha = -2/m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaEstimate {
    pub alpha: f64,
    pub alpha_se: f64,
    pub slope: f64,
    pub intercept: f64,
}

/// Ordinary least squares of `y` on `x`: `(intercept, slope, slope standard error)`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let se = if x.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (intercept, slope, se)
}

/// `alpha` at every horizon from a log-log regression of `beta` over a
/// moving window of `window` horizons.
///
/// `segment_starts` lists the first position of each zone (sorted, starting
/// with 0); windows are shifted so that they never straddle a zone boundary.
/// A zone's windows may include the first horizon of the next zone, the knot
/// shared by both lines of a continuous break fit.
pub fn extract_alpha(
    horizons: &[f64],
    betas: &[f64],
    window: usize,
    segment_starts: &[usize],
) -> Result<Vec<AlphaEstimate>> {
    let n = horizons.len();
    if betas.len() != n {
        return Err(Error::config("horizon and beta columns differ in length"));
    }
    if window < 3 {
        return Err(Error::config(format!("alpha window must hold at least 3 horizons, got {window}")));
    }
    if horizons.iter().zip(betas).any(|(t, b)| !(*t > 0.0 && *b > 0.0)) {
        return Err(Error::domain("horizons and betas must be positive"));
    }
    if horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("horizons must be strictly increasing"));
    }
    let mut starts: Vec<usize> = segment_starts.iter().copied().filter(|&s| s < n).collect();
    if starts.first() != Some(&0) {
        starts.insert(0, 0);
    }
    let x: Vec<f64> = horizons.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = betas.iter().map(|b| b.ln()).collect();
    (0..n)
        .map(|i| {
            let seg = starts.partition_point(|&s| s <= i) - 1;
            let (lo, hi) = (starts[seg], starts.get(seg + 1).map_or(n, |&s| s + 1));
            let len = hi - lo;
            if len < 3 {
                return Err(Error::estimation(
                    Some(horizons[i]),
                    format!("zone holds {len} horizons, at least 3 are needed for alpha"),
                ));
            }
            let w = window.min(len);
            let start = i.saturating_sub(w / 2).clamp(lo, hi - w);
            let (c, m, se) = ols(&x[start..start + w], &y[start..start + w]);
            if !(m < 0.0) {
                return Err(Error::estimation(
                    Some(horizons[i]),
                    format!("beta does not decay with the horizon (log-log slope {m})"),
                ));
            }
            Ok(AlphaEstimate { alpha: -2.0 / m, alpha_se: 2.0 * se / (m * m), slope: m, intercept: c })
        })
        .collect()
}

/// Diffusion coefficient `D = beta^{-alpha/2}/t`, the inverse of
/// `beta = (D t)^{-2/alpha}`.
pub fn extract_d(beta: f64, alpha: f64, t: f64) -> Result<f64> {
    if !(beta > 0.0 && alpha > 0.0 && t > 0.0) {
        return Err(Error::domain(format!("extract_d needs positive arguments (beta={beta}, alpha={alpha}, t={t})")));
    }
    Ok((-0.5 * alpha * beta.ln()).exp() / t)
}

/// Parameters at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub horizon: f64,
    pub q: f64,
    pub q_se: f64,
    pub beta: f64,
    pub beta_se: f64,
    pub alpha: f64,
    pub alpha_se: f64,
    pub diffusion: f64,
    pub zone: Option<ZoneLabel>,
}

/// Outcome of the large-horizon convergence check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceCheck {
    pub horizon: f64,
    pub q: f64,
    pub alpha: f64,
    pub q_converged: bool,
    pub alpha_converged: bool,
}

/// Per-horizon table of `(q, beta, alpha, D)`, sorted by horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterCurves {
    pub method: FitMethod,
    pub points: Vec<CurvePoint>,
}

impl ParameterCurves {
    /// Builds the table from per-horizon fits, estimating `alpha` over a moving
    /// window that respects `segmentation` when given.
    pub fn from_fits(fits: &[QFit], alpha_window: usize, segmentation: Option<&ZoneSegmentation>) -> Result<Self> {
        if fits.is_empty() {
            return Err(Error::config("no fits to tabulate"));
        }
        let method = fits[0].method;
        let mut fits: Vec<&QFit> = fits.iter().collect();
        fits.sort_by(|a, b| a.horizon.total_cmp(&b.horizon));
        let h: Vec<f64> = fits.iter().map(|f| f.horizon).collect();
        let b: Vec<f64> = fits.iter().map(|f| f.beta).collect();
        let starts = match segmentation {
            Some(seg) => seg
                .segment_starts()
                .iter()
                .map(|&k| h.partition_point(|&t| t < seg.horizons[k]))
                .collect(),
            None => vec![0],
        };
        let alphas = extract_alpha(&h, &b, alpha_window, &starts)?;
        let points = fits
            .iter()
            .zip(&alphas)
            .map(|(f, a)| {
                Ok(CurvePoint {
                    horizon: f.horizon,
                    q: f.q,
                    q_se: f.q_se,
                    beta: f.beta,
                    beta_se: f.beta_se,
                    alpha: a.alpha,
                    alpha_se: a.alpha_se,
                    diffusion: extract_d(f.beta, a.alpha, f.horizon)?,
                    zone: segmentation.map(|s| label_at(s, f.horizon)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { method, points })
    }

    pub fn horizons(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.horizon).collect()
    }

    pub fn betas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.beta).collect()
    }

    /// Tags every point with its zone label.
    pub fn assign_zones(&mut self, seg: &ZoneSegmentation) {
        for p in &mut self.points {
            p.zone = Some(label_at(seg, p.horizon));
        }
    }

    /// `(q, alpha, D)` at lag `t`, interpolated linearly in `ln t` (with
    /// `ln D` interpolated) between tabulated horizons.
    pub fn lookup(&self, t: f64) -> Result<QParams> {
        let first = self.points.first().ok_or_else(|| Error::config("parameter table is empty"))?;
        let last = self.points.last().expect("non-empty");
        if !(t >= first.horizon && t <= last.horizon) {
            return Err(Error::config(format!(
                "lag {t} lies outside the tabulated horizons [{}, {}]",
                first.horizon, last.horizon
            )));
        }
        let k = self.points.partition_point(|p| p.horizon < t);
        let p1 = &self.points[k];
        if p1.horizon == t || k == 0 {
            return QParams::new(p1.q, p1.alpha, p1.diffusion);
        }
        let p0 = &self.points[k - 1];
        let w = (t.ln() - p0.horizon.ln()) / (p1.horizon.ln() - p0.horizon.ln());
        let lerp = |a: f64, b: f64| a + w * (b - a);
        QParams::new(
            lerp(p0.q, p1.q),
            lerp(p0.alpha, p1.alpha),
            lerp(p0.diffusion.ln(), p1.diffusion.ln()).exp(),
        )
    }

    /// Checks whether the largest horizon has reached `q = 1` and `alpha = 2`
    /// within the given tolerances.
    pub fn convergence_check(&self, q_tol: f64, alpha_tol: f64) -> Option<ConvergenceCheck> {
        let p = self.points.last()?;
        Some(ConvergenceCheck {
            horizon: p.horizon,
            q: p.q,
            alpha: p.alpha,
            q_converged: (p.q - 1.0).abs() <= q_tol,
            alpha_converged: (p.alpha - 2.0).abs() <= alpha_tol,
        })
    }

    /// Largest jump of `q` between adjacent horizons.
    pub fn max_q_jump(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1].q - w[0].q).abs()).fold(0.0, f64::max)
    }
}

fn label_at(seg: &ZoneSegmentation, t: f64) -> ZoneLabel {
    let k = seg.horizons.partition_point(|&h| h < t);
    match seg.horizons.get(k) {
        Some(&h) if h == t => seg.labels[k],
        _ => seg.zone_of(t),
    }
}

/// Fits every distribution with `method`, in parallel, returned in horizon
/// order.
pub fn fit_horizons(dists: &[EmpiricalDistribution], method: FitMethod, opts: &FitOptions) -> Result<Vec<QFit>> {
    let mut fits = dists.par_iter().map(|d| fit(d, method, opts)).collect::<Result<Vec<_>>>()?;
    fits.sort_by(|a, b| a.horizon.total_cmp(&b.horizon));
    Ok(fits)
}
