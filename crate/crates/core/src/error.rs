use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {reason}")]
    Ingest { path: PathBuf, reason: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{0}")]
    Undefined(String),

    #[error("stage `{stage}` failed ({context}): {source}")]
    Stage {
        stage: &'static str,
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str, context: impl Into<String>) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                context: context.into(),
                source: Box::new(e),
            },
        }
    }
}
