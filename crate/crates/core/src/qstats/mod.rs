//! q-statistics: the q-Gaussian family, its CDF and tails, moments, sampling
//! and the diffusion-equation residual check.

mod hypergeometric;
mod moments;
mod pde;
mod sampling;
mod special;

pub use hypergeometric::{hyp2f1_series, q_erf, q_erfc, QErf};
pub use moments::{
    numeric_normalization, numeric_power_moment, numeric_q_variance, numeric_variance,
    q_variance_from_beta, solve_moment_system, variance_from_beta,
};
pub use pde::{pde_coefficient, pde_residual, PdeResidual};
pub use sampling::{sample_q_gaussian, QGaussianSampler};
pub use special::{normalization_cq, q_exponential, q_logarithm, Q_LIMIT_TOL};

pub(crate) use special::is_gaussian_limit;

use crate::error::{Error, Result};

/// Parameters of the self-similar q-Gaussian family
/// `p(x, t) = (Dt)^{-1/alpha} g_q(x/(Dt)^{1/alpha})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParams {
    pub q: f64,
    pub alpha: f64,
    pub diffusion: f64,
    /// Temporal exponent; when set, `alpha = (3 - q)/xi`.
    pub xi: Option<f64>,
}

impl QParams {
    pub fn new(q: f64, alpha: f64, diffusion: f64) -> Result<Self> {
        special::check_q_range(q)?;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
        }
        if !(diffusion > 0.0 && diffusion.is_finite()) {
            return Err(Error::domain(format!("diffusion coefficient must be positive, got {diffusion}")));
        }
        Ok(Self { q, alpha, diffusion, xi: None })
    }

    /// Parameters with `alpha = (3 - q)/xi`.
    pub fn from_xi(q: f64, xi: f64, diffusion: f64) -> Result<Self> {
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(Error::domain(format!("xi must be positive, got {xi}")));
        }
        let mut p = Self::new(q, (3.0 - q) / xi, diffusion)?;
        p.xi = Some(xi);
        Ok(p)
    }

    /// Attaches `xi`, checking it against the stored `alpha`.
    pub fn with_xi(mut self, xi: f64) -> Result<Self> {
        let implied = (3.0 - self.q) / xi;
        if !((implied - self.alpha).abs() <= 1e-12 * self.alpha) {
            return Err(Error::domain(format!(
                "xi = {xi} implies alpha = {implied}, inconsistent with alpha = {}",
                self.alpha
            )));
        }
        self.xi = Some(xi);
        Ok(self)
    }

    /// `beta = (Dt)^{-2/alpha}`.
    pub fn beta_at(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::domain(format!("time lag must be positive, got {t}")));
        }
        Ok((-2.0 / self.alpha * (self.diffusion * t).ln()).exp())
    }

    /// Width `(Dt)^{1/alpha} = 1/sqrt(beta)`.
    pub fn width_at(&self, t: f64) -> Result<f64> {
        Ok(1.0 / self.beta_at(t)?.sqrt())
    }

    pub fn distribution_at(&self, t: f64) -> Result<QGaussian> {
        QGaussian::new(self.q, self.beta_at(t)?)
    }
}

/// q-Gaussian distribution with density `sqrt(beta) g_q(sqrt(beta) x)`.
#[derive(Debug, Clone, Copy)]
pub struct QGaussian {
    q: f64,
    beta: f64,
    sqrt_beta: f64,
    erf: QErf,
    ln_peak: f64,
}

impl QGaussian {
    pub fn new(q: f64, beta: f64) -> Result<Self> {
        let erf = QErf::new(q)?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::domain(format!("beta must be positive and finite, got {beta}")));
        }
        let ln_peak = 0.5 * beta.ln() - special::ln_cq_unchecked(q);
        Ok(Self { q, beta, sqrt_beta: beta.sqrt(), erf, ln_peak })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let y = self.beta * x * x;
        if is_gaussian_limit(self.q) {
            (self.ln_peak - y).exp()
        } else {
            (self.ln_peak - ((self.q - 1.0) * y).ln_1p() / (self.q - 1.0)).exp()
        }
    }

    /// `F(x) = 1/2 + erf_q(sqrt(beta) x)/2`, evaluated through the complement
    /// for negative `x` to keep the lower tail accurate.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let s = self.sqrt_beta * x;
        if s >= 0.0 {
            Ok(0.5 + 0.5 * self.erf.erf(s)?)
        } else {
            Ok(0.5 * self.erf.erfc(-s)?)
        }
    }

    /// Two-sided tail probability `P(|X| > x) = 1 - erf_q(sqrt(beta) x)`.
    pub fn exceedance(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::domain(format!("exceedance threshold must be non-negative, got {x}")));
        }
        self.erf.erfc(self.sqrt_beta * x)
    }

    /// Threshold `x` at which the two-sided tail probability equals `level`.
    pub fn half_width(&self, level: f64) -> Result<f64> {
        Ok(self.erf.erfc_inv(level)? / self.sqrt_beta)
    }

    pub fn sampler(&self) -> QGaussianSampler {
        QGaussianSampler::new(self.q, self.beta).expect("validated parameters")
    }
}

/// q-Gaussian density `sqrt(beta) g_q(sqrt(beta) x)`.
pub fn q_gaussian_pdf(x: f64, q: f64, beta: f64) -> Result<f64> {
    Ok(QGaussian::new(q, beta)?.pdf(x))
}

/// Self-similar density at lag `t`.
pub fn scaled_pdf(x: f64, t: f64, params: &QParams) -> Result<f64> {
    Ok(params.distribution_at(t)?.pdf(x))
}

/// `F(x, t) = 1/2 + erf_q(x sqrt(beta(t)))/2`.
pub fn cdf(x: f64, t: f64, params: &QParams) -> Result<f64> {
    params.distribution_at(t)?.cdf(x)
}

/// `P(|X - mean| > x)` at lag `t`.
pub fn exceedance(x: f64, t: f64, params: &QParams) -> Result<f64> {
    params.distribution_at(t)?.exceedance(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pdf_examples() {
        assert!((q_gaussian_pdf(0.0, 2.0, 1.0).unwrap() - 1.0 / PI).abs() < 1e-12);
        assert!((q_gaussian_pdf(0.0, 1.0, 1.0).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!((q_gaussian_pdf(1.0, 2.0, 1.0).unwrap() - 0.5 / PI).abs() < 1e-12);
        assert!(q_gaussian_pdf(0.0, 1.5, 0.0).is_err());
        assert!(q_gaussian_pdf(0.0, 1.5, -1.0).is_err());
    }

    #[test]
    fn scaled_examples() {
        let p = QParams::new(1.0, 2.0, 1.0).unwrap();
        assert!((scaled_pdf(0.0, 1.0, &p).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!((p.beta_at(16.0).unwrap() - 0.0625).abs() < 1e-15);
        let p = QParams::new(1.7, 1.3, 1.0).unwrap();
        for &x in &[-2.0, 0.0, 0.3, 5.0] {
            assert_eq!(scaled_pdf(x, 1.0, &p).unwrap(), q_gaussian_pdf(x, 1.7, 1.0).unwrap());
        }
        assert!(scaled_pdf(0.0, 0.0, &p).is_err());
    }

    #[test]
    fn cdf_and_exceedance_examples() {
        let p = QParams::new(2.0, 2.0, 1.0).unwrap(); // beta = 1 at t = 1
        assert_eq!(cdf(0.0, 1.0, &p).unwrap(), 0.5);
        assert!((cdf(1.0, 1.0, &p).unwrap() - 0.75).abs() < 1e-12);
        assert!((cdf(-1.0, 1.0, &p).unwrap() - 0.25).abs() < 1e-12);
        assert!((cdf(1e12, 1.0, &p).unwrap() - 1.0).abs() < 1e-11);
        assert_eq!(exceedance(0.0, 1.0, &p).unwrap(), 1.0);
        assert!((exceedance(1.0, 1.0, &p).unwrap() - 0.5).abs() < 1e-12);
        assert!(exceedance(-1.0, 1.0, &p).is_err());
        let g = QParams::new(1.0, 2.0, 1.0).unwrap();
        assert!((exceedance(1.0, 1.0, &g).unwrap() - 0.157_299_207_050_285_1).abs() < 1e-12);
    }

    #[test]
    fn half_width_inverts_exceedance() {
        let d = QGaussian::new(1.5, 0.3).unwrap();
        for &level in &[0.9, 0.5, 0.15, 1e-3] {
            let w = d.half_width(level).unwrap();
            assert!((d.exceedance(w).unwrap() - level).abs() < 1e-12 * level.max(1e-3) * 10.0);
        }
    }

    #[test]
    fn xi_consistency() {
        let p = QParams::from_xi(1.5, 1.0, 2.0).unwrap();
        assert!((p.alpha - 1.5).abs() < 1e-15);
        assert!(QParams::new(1.5, 1.5, 2.0).unwrap().with_xi(1.0).is_ok());
        assert!(QParams::new(1.5, 1.4, 2.0).unwrap().with_xi(1.0).is_err());
    }
}
