use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported magic number {0:?}, expected P5 or P6")]
    UnsupportedMagic(String),

    #[error("malformed pixmap header: {0}")]
    MalformedHeader(String),

    #[error("unsupported maxval {0}, only 255 is accepted")]
    UnsupportedMaxval(u32),

    #[error("truncated pixel payload: expected {expected} bytes, got {actual}")]
    TruncatedPayload { expected: usize, actual: usize },

    #[error("annotation line {line}: {message}")]
    Annotation { line: usize, message: String },

    #[error("config line {line}: {message}")]
    ConfigLine { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty histogram")]
    EmptyHistogram,

    #[error("{}: {inner}", path.display())]
    Path { path: PathBuf, inner: Box<Error> },

    #[error("stage {stage}: {inner}")]
    Stage {
        stage: &'static str,
        inner: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn at_path(self, path: impl Into<PathBuf>) -> Self {
        Error::Path {
            path: path.into(),
            inner: Box::new(self),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            inner: Box::new(self),
        }
    }

    /// Strips any path or stage context and returns the innermost error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Path { inner, .. } | Error::Stage { inner, .. } => inner.root(),
            other => other,
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self.root(), Error::Io(_))
    }

    pub fn is_config(&self) -> bool {
        matches!(self.root(), Error::Config(_) | Error::ConfigLine { .. })
    }
}
