//! Trend/fluctuation analysis of index series with q-Gaussian anomalous diffusion.
//!
//! The crate is organised as a pipeline of independent stages:
//!
//! - [`qstats`]: q-exponential, q-Gaussian density and CDF, the q-error function,
//!   exceedance probabilities, moment identities, sampling and a finite-difference
//!   check of the self-similar solution of the nonlinear diffusion equation.
//! - [`decompose`]: price returns, centered moving-window trend and the stationary
//!   fluctuation series.
//! - [`estimate`]: lagged empirical distributions and three estimators of
//!   `(q, beta)` (density least squares, q-moments, CDF least squares), plus
//!   extraction of the scaling exponent `alpha(t)` and diffusion coefficient `D(t)`.
//! - [`regimes`]: segmentation of the horizon axis into three diffusion zones.
//! - [`trend_forecast`]: constrained response trends, forecast cones, Monte Carlo
//!   paths and accuracy scoring.
//!
//! [`synthetic`] generates deterministic test data with known structure.

pub mod decompose;
pub mod error;
pub mod estimate;
pub mod quadrature;
pub mod qstats;
pub mod regimes;
pub mod synthetic;
pub mod trend_forecast;

pub use error::{Error, Result};
