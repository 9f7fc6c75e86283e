use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("degenerate pose: {0}")]
    DegeneratePose(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("window bounds: {0}")]
    WindowBounds(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("metric error: {0}")]
    Metric(String),
    #[error("measurement contract violated: {0}")]
    MeasurementContract(String),
    #[error("training diverged at epoch {epoch} (lr = {lr:e}): loss is not finite")]
    Divergence { epoch: usize, lr: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Serde(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
