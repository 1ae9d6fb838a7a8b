use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus contains no sentences")]
    EmptyCorpus,

    #[error("need {budget} candidates but only {available} are available")]
    InsufficientCandidates { budget: usize, available: usize },

    #[error("invalid genre ratio: {0}")]
    InvalidRatio(String),

    #[error("noise injection needs at least 2 sentence pairs, got {0}")]
    TooFewPairs(usize),

    #[error("training data has only one label class ({0})")]
    DegenerateLabels(u8),

    #[error("entity lexicon is empty")]
    EmptyEntityLexicon,

    #[error("invalid span {start}..{end} in sentence of length {len}")]
    InvalidSpan {
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("invalid token range {start}..{end} for sequence of length {len}")]
    InvalidRange {
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("situation frame type `{0}` has no labeled documents")]
    EmptyClass(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad configuration or malformed input,
    /// as opposed to failures while running a stage.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Config { .. } | Error::Parse { .. } | Error::InvalidArgument(_) => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}
