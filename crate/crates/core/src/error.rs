use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("integration error at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    #[error("trajectory {index} leaked {leak:.3e} population into the top Fock level; enlarge n_fock")]
    TruncationLeak { index: usize, leak: f64 },

    #[error("RC amplitude diverged at t = {time} on node {node} (|beta| = {magnitude:.3e})")]
    Divergence {
        time: f64,
        node: usize,
        magnitude: f64,
    },

    #[error("training failed at iteration {iteration}: {reason}")]
    Training { iteration: usize, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("dataset has no trajectories with label {0}")]
    MissingClass(u8),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("output directory {0} is not empty (use --force)")]
    OutputExists(PathBuf),

    #[error("file format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable code, reported by the CLI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "E_DOMAIN",
            Error::UnsupportedModel(_) => "E_UNSUPPORTED_MODEL",
            Error::Integration { .. } => "E_INTEGRATION",
            Error::TruncationLeak { .. } => "E_TRUNCATION",
            Error::Divergence { .. } => "E_DIVERGENCE",
            Error::Training { .. } => "E_TRAINING",
            Error::Dimension(_) => "E_DIMENSION",
            Error::MissingClass(_) => "E_MISSING_CLASS",
            Error::Config(_) => "E_CONFIG",
            Error::OutputExists(_) => "E_OUTPUT_EXISTS",
            Error::Format { .. } => "E_FORMAT",
            Error::Io { .. } => "E_IO",
            Error::Json(_) => "E_JSON",
            Error::Csv(_) => "E_CSV",
        }
    }

    /// Process exit status for the CLI. Each error kind maps to its own value.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) => 10,
            Error::UnsupportedModel(_) => 11,
            Error::Integration { .. } => 12,
            Error::TruncationLeak { .. } => 13,
            Error::Divergence { .. } => 14,
            Error::Training { .. } => 15,
            Error::Dimension(_) => 16,
            Error::MissingClass(_) => 17,
            Error::Config(_) => 18,
            Error::OutputExists(_) => 19,
            Error::Format { .. } => 20,
            Error::Io { .. } => 21,
            Error::Json(_) => 22,
            Error::Csv(_) => 23,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
