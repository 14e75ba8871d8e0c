use std::io;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("weights diverged in layer {layer}")]
    Divergence { layer: usize },

    #[error("genome length {actual} does not match layout length {expected}")]
    GenomeLength { expected: usize, actual: usize },

    #[error("expected {expected} fitness reports, got {actual}")]
    MissingReports { expected: usize, actual: usize },

    #[error("invalid ES parameters: {0}")]
    EsParams(String),

    #[error("environment step called after episode end")]
    EpisodeDone,

    #[error("track generation failed for seed {seed} after {attempts} attempts")]
    TrackGeneration { seed: u64, attempts: usize },

    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("bad file format: {0}")]
    Format(String),

    #[error("topology hash mismatch: file has {found:016x}, expected {expected:016x}")]
    TopologyHash { expected: u64, found: u64 },

    #[error("unsupported {what} version {found} (this build reads {supported})")]
    Version {
        what: &'static str,
        found: u32,
        supported: u32,
    },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
