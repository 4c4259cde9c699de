use thiserror::Error;

/// Errors raised by the analysis library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested ordinary moment does not exist for this entropic index.
    #[error("divergent moment: ordinary second moment is infinite for q = {q} (requires q < 5/3); {hint}")]
    DivergentMoment { q: f64, hint: String },

    /// A numerical routine failed to converge.
    #[error("numeric error: {message} ({diagnostics})")]
    Numeric { message: String, diagnostics: String },

    /// Invalid configuration, grid, window or model parameter.
    #[error("configuration error: {0}")]
    Config(String),

    /// A timestamp or key was not found.
    #[error("lookup error: {0}")]
    Lookup(String),

    /// Parameter estimation failed or is not identifiable from the data.
    #[error("estimation error{}: {message}", horizon.map(|h| format!(" at horizon {h}")).unwrap_or_default())]
    Estimation { horizon: Option<f64>, message: String },

    /// Diffusion-zone segmentation did not find the expected change points.
    #[error("segmentation error: {message}; candidate change points: {candidates:?}")]
    Segmentation { message: String, candidates: Vec<f64> },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn estimation(horizon: Option<f64>, msg: impl Into<String>) -> Self {
        Error::Estimation { horizon, message: msg.into() }
    }

    pub(crate) fn numeric(msg: impl Into<String>, diagnostics: impl Into<String>) -> Self {
        Error::Numeric { message: msg.into(), diagnostics: diagnostics.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
