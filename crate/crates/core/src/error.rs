use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("no frames matched in {0}")]
    EmptySequence(PathBuf),

    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("no signal: spectra carry no usable energy")]
    NoSignal,

    #[error("history window needs at least 2 frames, got {0}")]
    InsufficientHistory(usize),

    #[error("sequence has {frames} frames but eta = {eta} needs at least {}", eta + 1)]
    InsufficientFrames { frames: usize, eta: usize },

    #[error("nothing to evaluate")]
    EmptyEvaluation,

    #[error("measurement error: {0}")]
    Measurement(String),

    #[error("invalid scene: {0}")]
    SpecValidation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("frame {frame}: {source}")]
    AtFrame {
        frame: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn at_frame(self, frame: usize) -> Self {
        match self {
            e @ Error::AtFrame { .. } => e,
            e => Error::AtFrame {
                frame,
                source: Box::new(e),
            },
        }
    }

    /// The error with any frame context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtFrame { source, .. } => source.root(),
            e => e,
        }
    }
}
