//! Lagged empirical distributions of the fluctuation, `(q, beta)` estimators
//! and the time-dependent parameter curves.

mod curves;
mod empirical;
mod fit;
mod optimize;

pub use curves::{
    extract_alpha, extract_d, fit_horizons, ols, AlphaEstimate, ConvergenceCheck, CurvePoint, ParameterCurves,
};
pub use empirical::{empirical_distributions, log_spaced_horizons, quantile, BinRule, EmpiricalDistribution, Histogram};
pub use fit::{
    fit, fit_cdf_least_squares, fit_cdf_to_points, fit_pdf_least_squares, fit_pdf_to_histogram, fit_q_moments,
    FitMethod, FitOptions, FitQuality, QFit,
};
pub use optimize::{Minimum, NelderMead};

