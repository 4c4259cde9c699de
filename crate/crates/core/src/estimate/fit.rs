//! Estimators of `(q, beta)` from one empirical distribution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::empirical::{fd_histogram, EmpiricalDistribution, Histogram};
use super::optimize::NelderMead;
use crate::error::{Error, Result};
use crate::qstats::{solve_moment_system, QErf, QGaussian};

const FIVE_THIRDS: f64 = 5.0 / 3.0;

/// Estimation technique.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitMethod {
    /// Least squares between histogram densities and the model density.
    PdfLeastSquares,
    /// Closed-form solve of the ordinary and escort second moments.
    QMoments,
    /// Least squares between the empirical and model CDF.
    CdfLeastSquares,
}

impl FitMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            FitMethod::PdfLeastSquares => "pdf-ls",
            FitMethod::QMoments => "q-moments",
            FitMethod::CdfLeastSquares => "cdf-ls",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pdf-ls" => Ok(FitMethod::PdfLeastSquares),
            "q-moments" => Ok(FitMethod::QMoments),
            "cdf-ls" => Ok(FitMethod::CdfLeastSquares),
            other => Err(Error::config(format!("unknown fitting method {other:?} (expected pdf-ls, q-moments or cdf-ls)"))),
        }
    }
}

impl std::fmt::Display for FitMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitQuality {
    Good,
    /// Residuals too large for the model to describe the data.
    Poor,
}

/// Estimated `(q, beta)` at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct QFit {
    pub method: FitMethod,
    pub horizon: f64,
    pub q: f64,
    pub beta: f64,
    pub q_se: f64,
    pub beta_se: f64,
    /// Root-mean-square residual of the fitted quantity.
    pub residual_rms: f64,
    /// Scale-free misfit: RMS residual over RMS data for pdf-ls, largest CDF
    /// deviation for cdf-ls, relative moment mismatch for q-moments.
    pub misfit: f64,
    pub quality: FitQuality,
    pub iterations: usize,
}

/// Tuning of the estimators.
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Starting values of `q` for the multi-start search.
    pub starts: Vec<f64>,
    pub q_min: f64,
    pub q_max: f64,
    /// Number of empirical CDF points used by cdf-ls.
    pub cdf_points: usize,
    pub min_occupied_bins: usize,
    pub min_cdf_samples: usize,
    pub pdf_poor_misfit: f64,
    pub cdf_poor_misfit: f64,
    /// Lower/upper quantile bounding the histogram used for escort moments.
    pub escort_clip: f64,
    /// Bootstrap replicates for the q-moments standard errors.
    pub bootstrap: usize,
    pub optimizer: NelderMead,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: vec![1.1, 1.4, 1.7, 2.0],
            q_min: 1.0,
            q_max: 2.95,
            cdf_points: 1000,
            min_occupied_bins: 10,
            min_cdf_samples: 100,
            pdf_poor_misfit: 0.1,
            cdf_poor_misfit: 0.03,
            escort_clip: 5e-5,
            bootstrap: 16,
            optimizer: NelderMead::default(),
        }
    }
}

/// Fits with the selected method.
pub fn fit(dist: &EmpiricalDistribution, method: FitMethod, opts: &FitOptions) -> Result<QFit> {
    match method {
        FitMethod::PdfLeastSquares => fit_pdf_least_squares(dist, opts),
        FitMethod::QMoments => fit_q_moments(dist, opts),
        FitMethod::CdfLeastSquares => fit_cdf_least_squares(dist, opts),
    }
}

/// `beta` placing the quartiles of a q-Gaussian at `+-iqr/2`.
fn beta_from_iqr(q: f64, iqr: f64) -> Result<f64> {
    let s = QErf::new(q)?.erfc_inv(0.5)?;
    Ok((2.0 * s / iqr).powi(2))
}

/// Interquartile range read off a monotone `(x, F)` table.
fn iqr_from_table(points: &[(f64, f64)]) -> Option<f64> {
    let at = |p: f64| -> Option<f64> {
        let k = points.partition_point(|&(_, f)| f < p);
        if k == 0 || k >= points.len() {
            return None;
        }
        let ((x0, f0), (x1, f1)) = (points[k - 1], points[k]);
        Some(if f1 > f0 { x0 + (p - f0) / (f1 - f0) * (x1 - x0) } else { x1 })
    };
    let iqr = at(0.75)? - at(0.25)?;
    (iqr > 0.0).then_some(iqr)
}

fn histogram_table(h: &Histogram) -> Vec<(f64, f64)> {
    let mut acc = 0.0;
    let mut table = vec![(h.edges[0], 0.0)];
    for (w, d) in h.edges.windows(2).zip(&h.densities) {
        acc += (w[1] - w[0]) * d;
        table.push((w[1], acc));
    }
    table
}

struct LsOutcome {
    q: f64,
    beta: f64,
    residuals: Vec<f64>,
    jacobian_se: (f64, f64),
    iterations: usize,
}

/// Multi-start least squares over `(q, ln beta)` with `q` held in the bounds.
fn least_squares<R>(residuals: R, iqr: f64, horizon: f64, opts: &FitOptions) -> Result<LsOutcome>
where
    R: Fn(f64, f64, &mut Vec<f64>) -> Result<()>,
{
    let clamp = |q: f64| q.clamp(opts.q_min, opts.q_max);
    let objective = |theta: &[f64]| -> f64 {
        let q = clamp(theta[0]);
        let penalty = (theta[0] - q).powi(2);
        let mut r = Vec::new();
        match residuals(q, theta[1].exp(), &mut r) {
            Ok(()) => r.iter().map(|v| v * v).sum::<f64>() + penalty,
            Err(_) => f64::INFINITY,
        }
    };
    let mut best: Option<(f64, Vec<f64>, usize, bool)> = None;
    let mut iterations = 0;
    for &q0 in &opts.starts {
        let q0 = clamp(q0);
        let b0 = beta_from_iqr(q0, iqr)?;
        let m = opts.optimizer.minimize(objective, &[q0, b0.ln()], &[0.1, 0.3]);
        iterations += m.iterations;
        if best.as_ref().map_or(true, |b| m.value < b.0) {
            best = Some((m.value, m.x, m.iterations, m.converged));
        }
    }
    let (value, x, _, _) = best.expect("at least one start");
    // restart from the best vertex to guard against simplex collapse
    let polished = opts.optimizer.minimize(objective, &x, &[0.02, 0.05]);
    iterations += polished.iterations;
    let (value, x, converged) = if polished.value <= value {
        (polished.value, polished.x, polished.converged)
    } else {
        (value, x, true)
    };
    if !value.is_finite() || !converged {
        return Err(Error::estimation(
            Some(horizon),
            format!(
                "least-squares search did not converge (objective {value:e}, q = {}, ln beta = {}, {iterations} iterations)",
                x[0], x[1]
            ),
        ));
    }
    let q = clamp(x[0]);
    let ln_beta = x[1];
    let mut r0 = Vec::new();
    residuals(q, ln_beta.exp(), &mut r0)?;
    let jacobian_se = jacobian_standard_errors(&residuals, q, ln_beta, &r0, opts)?;
    Ok(LsOutcome { q, beta: ln_beta.exp(), residuals: r0, jacobian_se, iterations })
}

/// Asymptotic standard errors of `(q, ln beta)` from `s^2 (J^T J)^{-1}`.
fn jacobian_standard_errors<R>(residuals: &R, q: f64, ln_beta: f64, r0: &[f64], opts: &FitOptions) -> Result<(f64, f64)>
where
    R: Fn(f64, f64, &mut Vec<f64>) -> Result<()>,
{
    let h = 1e-5;
    let column = |dq: f64, db: f64| -> Result<Vec<f64>> {
        // one-sided at the bounds
        let (qa, qb) = if dq == 0.0 {
            (q, q)
        } else if q - dq < opts.q_min {
            (q, q + dq)
        } else if q + dq > opts.q_max {
            (q - dq, q)
        } else {
            (q - dq, q + dq)
        };
        let (ba, bb) = (ln_beta - db, ln_beta + db);
        let mut ra = Vec::new();
        let mut rb = Vec::new();
        residuals(qa, ba.exp(), &mut ra)?;
        residuals(qb, bb.exp(), &mut rb)?;
        let span = if dq == 0.0 { 2.0 * db } else { qb - qa };
        Ok(ra.iter().zip(&rb).map(|(a, b)| (b - a) / span).collect())
    };
    let jq = column(h, 0.0)?;
    let jb = column(0.0, h)?;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for (x, y) in jq.iter().zip(&jb) {
        a += x * x;
        b += x * y;
        c += y * y;
    }
    let det = a * c - b * b;
    let dof = r0.len().saturating_sub(2).max(1) as f64;
    let s2 = r0.iter().map(|v| v * v).sum::<f64>() / dof;
    if !(det > 0.0) {
        return Ok((f64::NAN, f64::NAN));
    }
    Ok(((s2 * c / det).sqrt(), (s2 * a / det).sqrt()))
}

fn rms(r: &[f64]) -> f64 {
    (r.iter().map(|v| v * v).sum::<f64>() / r.len().max(1) as f64).sqrt()
}

/// Least-squares fit of the model density to a histogram.
///
/// Histogram densities are rescaled by the fraction of samples inside the
/// histogram range, so clipped tails do not inflate the fitted peak.
pub fn fit_pdf_to_histogram(hist: &Histogram, horizon: f64, opts: &FitOptions) -> Result<QFit> {
    if hist.occupied_bins() < opts.min_occupied_bins {
        return Err(Error::estimation(
            Some(horizon),
            format!("histogram has {} occupied bins, at least {} required", hist.occupied_bins(), opts.min_occupied_bins),
        ));
    }
    let iqr = iqr_from_table(&histogram_table(hist))
        .ok_or_else(|| Error::estimation(Some(horizon), "histogram has no spread"))?;
    let centers: Vec<f64> = hist.centers().collect();
    let targets: Vec<f64> = hist.densities.iter().map(|d| d * hist.coverage).collect();
    let residuals = |q: f64, beta: f64, out: &mut Vec<f64>| -> Result<()> {
        let d = QGaussian::new(q, beta)?;
        out.clear();
        out.extend(centers.iter().zip(&targets).map(|(&c, &y)| d.pdf(c) - y));
        Ok(())
    };
    let o = least_squares(residuals, iqr, horizon, opts)?;
    let data_rms = rms(&targets);
    let misfit = rms(&o.residuals) / data_rms;
    Ok(QFit {
        method: FitMethod::PdfLeastSquares,
        horizon,
        q: o.q,
        beta: o.beta,
        q_se: o.jacobian_se.0,
        beta_se: o.beta * o.jacobian_se.1,
        residual_rms: rms(&o.residuals),
        misfit,
        quality: if misfit > opts.pdf_poor_misfit { FitQuality::Poor } else { FitQuality::Good },
        iterations: o.iterations,
    })
}

pub fn fit_pdf_least_squares(dist: &EmpiricalDistribution, opts: &FitOptions) -> Result<QFit> {
    fit_pdf_to_histogram(&dist.histogram, dist.horizon, opts)
}

/// Least-squares fit of `0.5 + erf_q(x sqrt(beta))/2` to `(x, F)` points.
pub fn fit_cdf_to_points(points: &[(f64, f64)], horizon: f64, opts: &FitOptions) -> Result<QFit> {
    if points.len() < 10 {
        return Err(Error::estimation(Some(horizon), format!("{} CDF points are too few", points.len())));
    }
    let iqr = iqr_from_table(points).ok_or_else(|| Error::estimation(Some(horizon), "CDF has no spread"))?;
    let residuals = |q: f64, beta: f64, out: &mut Vec<f64>| -> Result<()> {
        let d = QGaussian::new(q, beta)?;
        out.clear();
        for &(x, p) in points {
            out.push(d.cdf(x)? - p);
        }
        Ok(())
    };
    let o = least_squares(residuals, iqr, horizon, opts)?;
    let misfit = o.residuals.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    Ok(QFit {
        method: FitMethod::CdfLeastSquares,
        horizon,
        q: o.q,
        beta: o.beta,
        q_se: o.jacobian_se.0,
        beta_se: o.beta * o.jacobian_se.1,
        residual_rms: rms(&o.residuals),
        misfit,
        quality: if misfit > opts.cdf_poor_misfit { FitQuality::Poor } else { FitQuality::Good },
        iterations: o.iterations,
    })
}

pub fn fit_cdf_least_squares(dist: &EmpiricalDistribution, opts: &FitOptions) -> Result<QFit> {
    if dist.len() < opts.min_cdf_samples {
        return Err(Error::estimation(
            Some(dist.horizon),
            format!("{} samples, at least {} required for the CDF fit", dist.len(), opts.min_cdf_samples),
        ));
    }
    fit_cdf_to_points(&dist.cdf_points(opts.cdf_points), dist.horizon, opts)
}

/// Escort second moment `sum x^2 p^q / sum p^q` of a histogram density.
fn escort_second_moment(hist: &Histogram, q: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((c, d), w) in hist.centers().zip(&hist.densities).zip(hist.edges.windows(2)) {
        if *d > 0.0 {
            let pq = d.powf(q) * (w[1] - w[0]);
            num += c * c * pq;
            den += pq;
        }
    }
    num / den
}

/// Fixed point of `q -> solve(m2, escort(q))`, started at 1.4 because
/// `q = 1` is always a (spurious) fixed point.
fn moment_fixed_point(sorted: &[f64], opts: &FitOptions, horizon: f64) -> Result<(f64, f64, f64)> {
    let m2 = sorted.iter().map(|v| v * v).sum::<f64>() / sorted.len() as f64;
    let hist = fd_histogram(sorted, opts.escort_clip);
    if hist.occupied_bins() < opts.min_occupied_bins {
        return Err(Error::estimation(Some(horizon), "too few occupied bins for the escort moment"));
    }
    let mut q = 1.4;
    for _ in 0..500 {
        let (next, _) = solve_moment_system(m2, escort_second_moment(&hist, q))?;
        if (next - q).abs() < 1e-10 {
            q = next;
            let m2q = escort_second_moment(&hist, q);
            let (_, beta) = solve_moment_system(m2, m2q)?;
            return Ok((q, beta, m2));
        }
        q = next;
    }
    Err(Error::estimation(Some(horizon), format!("escort fixed-point iteration did not settle (last q = {q})")))
}

/// q-moments estimator: ordinary second moment from the samples, escort
/// second moment from a histogram plug-in density, iterated to a fixed point.
///
/// Estimates within 0.02 of `q = 5/3` are reported as divergent since a finite
/// sample cannot distinguish them from infinite-variance data.
pub fn fit_q_moments(dist: &EmpiricalDistribution, opts: &FitOptions) -> Result<QFit> {
    if dist.len() < opts.min_cdf_samples {
        return Err(Error::estimation(Some(dist.horizon), format!("{} samples are too few for moments", dist.len())));
    }
    let (q, beta, m2) = moment_fixed_point(&dist.sorted, opts, dist.horizon)?;
    if q >= FIVE_THIRDS - 0.02 {
        return Err(Error::DivergentMoment {
            q,
            hint: format!("horizon {}: use the cdf-ls method", dist.horizon),
        });
    }
    // bootstrap standard errors with a horizon-derived seed
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ dist.horizon.to_bits());
    let n = dist.len();
    let mut qs = Vec::new();
    let mut betas = Vec::new();
    let mut resample = vec![0.0; n];
    for _ in 0..opts.bootstrap {
        for v in resample.iter_mut() {
            *v = dist.sorted[rng.random_range(0..n)];
        }
        resample.sort_unstable_by(f64::total_cmp);
        if let Ok((qb, bb, _)) = moment_fixed_point(&resample, opts, dist.horizon) {
            qs.push(qb);
            betas.push(bb);
        }
    }
    let sd = |v: &[f64]| -> f64 {
        if v.len() < 2 {
            return f64::NAN;
        }
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    let implied = crate::qstats::variance_from_beta(q, beta).unwrap_or(f64::NAN);
    let misfit = (implied / m2 - 1.0).abs();
    Ok(QFit {
        method: FitMethod::QMoments,
        horizon: dist.horizon,
        q,
        beta,
        q_se: sd(&qs),
        beta_se: sd(&betas),
        residual_rms: (implied - m2).abs(),
        misfit,
        quality: FitQuality::Good,
        iterations: 0,
    })
}
