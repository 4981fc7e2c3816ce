use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid span in sentence `{sent_id}`: {message}")]
    InvalidSpan { sent_id: String, message: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("attention over an empty neighbourhood")]
    EmptyNeighbourhood,

    #[error("cannot fit {k} clusters to {points} points")]
    TooFewPoints { points: usize, k: usize },

    #[error("silhouette needs at least two non-empty clusters")]
    SingleCluster,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("generation backend failed: {0}")]
    Backend(#[from] BackendError),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Failures of the external generation service, one variant per failure mode.
#[derive(Debug, Error)]
pub enum BackendError {
    #[error("request to {url} timed out")]
    Timeout { url: String },

    #[error("could not connect to {url}: {message}")]
    Connect { url: String, message: String },

    #[error("service returned HTTP {status}: {message}")]
    Status { status: u16, message: String },

    #[error("response has no string `output` field")]
    MissingOutput,

    #[error("request failed: {0}")]
    Other(String),
}
