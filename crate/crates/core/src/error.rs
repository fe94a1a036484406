use std::path::PathBuf;

use thiserror::Error;

use crate::domain::Domain;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    /// A structurally valid JSON file whose content does not match the schema.
    #[error("{location}: {message}")]
    Format { location: String, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("dialogue {dialogue}: unknown domain `{domain}`")]
    UnknownDomain { dialogue: String, domain: String },

    #[error("unknown placeholder `{token}` for style {style}")]
    UnknownPlaceholder { token: String, style: String },

    #[error("unknown slot `{slot}` for domain {domain}")]
    UnknownSlot { domain: Domain, slot: String },

    #[error("{hypotheses} hypotheses but {references} references")]
    LengthMismatch { hypotheses: usize, references: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("{location}: {source}")]
    Context {
        location: String,
        #[source]
        source: Box<Error>,
    },

    #[error("reports are not comparable, differing fields: {}", .0.join(", "))]
    ConfigMismatch(Vec<String>),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, err: &serde_json::Error) -> Self {
        Error::Parse {
            path: path.into(),
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }

    pub(crate) fn format(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            location: location.into(),
            message: message.into(),
        }
    }

    /// Prefixes the error with where it happened, e.g. a dialogue and turn.
    pub fn at(self, location: impl Into<String>) -> Self {
        Error::Context {
            location: location.into(),
            source: Box::new(self),
        }
    }

    /// True for failures caused by the filesystem rather than by content.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::Context { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
