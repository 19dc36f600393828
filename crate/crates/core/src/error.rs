use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or configuration. Carries every violation found.
    #[error("configuration error: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("numerical blow-up at t = {t} (step {step}): {detail}")]
    BlowUp { t: f64, step: usize, detail: String },

    #[error("time {0} is not a sample time of the trajectory")]
    OffGrid(f64),

    #[error("trajectory is missing required data: {0}")]
    MissingData(&'static str),

    #[error("rate fit: {0}")]
    Fit(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(vec![msg.into()])
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BlowUp { .. } => 2,
            Error::Context { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}
