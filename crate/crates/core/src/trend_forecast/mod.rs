//! Response trends, forecast cones around them and their scoring.

mod cone;
mod simulate;
mod trend;

pub use cone::{
    accuracy, forecast_cone, step_laws, AccuracyReport, ConeOptions, Contour, ForecastCone, ScoredPoint, StepLaw,
};
pub use simulate::{simulate_paths, PathEnsemble, StepSummary};
pub use trend::{fit_collapse_slope, TrendModel, TrendShape};
