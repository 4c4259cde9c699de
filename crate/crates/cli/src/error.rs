use std::fmt;

use qcone_core::Error as CoreError;

/// Pipeline stage an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingest,
    Decompose,
    Fit,
    Zones,
    Trend,
    Forecast,
    Score,
    Output,
    Synth,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Decompose => "decompose",
            Stage::Fit => "fit",
            Stage::Zones => "zones",
            Stage::Trend => "trend",
            Stage::Forecast => "forecast",
            Stage::Score => "score",
            Stage::Output => "output",
            Stage::Synth => "synth",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numeric => 4,
            ErrorKind::Io => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub stage: Stage,
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn new(stage: Stage, kind: ErrorKind, message: impl Into<String>) -> Self {
        Self { stage, kind, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Stage::Config, ErrorKind::Config, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(Stage::Ingest, ErrorKind::Data, message)
    }

    pub fn io(stage: Stage, message: impl Into<String>) -> Self {
        Self::new(stage, ErrorKind::Io, message)
    }

    /// Classifies a library error: bad settings are configuration errors,
    /// everything raised by the numerics is a numeric/estimation error.
    pub fn from_core(stage: Stage, e: CoreError) -> Self {
        let kind = match e {
            CoreError::Config(_) | CoreError::Lookup(_) => ErrorKind::Config,
            CoreError::Domain(_)
            | CoreError::DivergentMoment { .. }
            | CoreError::Numeric { .. }
            | CoreError::Estimation { .. }
            | CoreError::Segmentation { .. } => ErrorKind::Numeric,
        };
        Self::new(stage, kind, e.to_string())
    }

    pub fn at(mut self, stage: Stage) -> Self {
        self.stage = stage;
        self
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage.as_str(), self.message)
    }
}

impl std::error::Error for CliError {}

/// Tags library results with a stage.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T, CliError>;
}

impl<T> StageExt<T> for qcone_core::Result<T> {
    fn stage(self, stage: Stage) -> Result<T, CliError> {
        self.map_err(|e| CliError::from_core(stage, e))
    }
}
