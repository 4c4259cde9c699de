//! Generalized Box–Muller sampling of q-Gaussian variates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::special::{check_q_range, q_log_unchecked};
use crate::error::{Error, Result};

/// Draws q-Gaussian variates with density `sqrt(beta) g_q(sqrt(beta) x)`.
///
/// With `q' = (1 + q)/(3 - q)`, the variate `sqrt(-2 ln_{q'} U1) cos(2 pi U2)`
/// is q-Gaussian with inverse width `1/(3 - q)`; it is rescaled to the target
/// `beta`. Only the cosine branch is used since the sine partner is not
/// independent of it when `q != 1`.
#[derive(Debug, Clone, Copy)]
pub struct QGaussianSampler {
    q_prime: f64,
    scale: f64,
}

impl QGaussianSampler {
    pub fn new(q: f64, beta: f64) -> Result<Self> {
        check_q_range(q)?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::domain(format!("beta must be positive and finite, got {beta}")));
        }
        Ok(Self {
            q_prime: (1.0 + q) / (3.0 - q),
            scale: 1.0 / ((3.0 - q) * beta).sqrt(),
        })
    }

    /// One draw from `rng`.
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u1 = 1.0 - rng.random::<f64>(); // (0, 1]
        let u2 = rng.random::<f64>();
        let radius = (-2.0 * q_log_unchecked(u1, self.q_prime)).sqrt();
        self.scale * radius * (std::f64::consts::TAU * u2).cos()
    }
}

/// `n` independent q-Gaussian draws from a generator seeded with `seed`.
pub fn sample_q_gaussian(q: f64, beta: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::domain("sample size must be at least 1"));
    }
    let sampler = QGaussianSampler::new(q, beta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| sampler.draw(&mut rng)).collect())
}
