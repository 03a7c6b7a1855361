use thiserror::Error;

use crate::rigor::RigorError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Rigor(#[from] RigorError),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("certification failed in {stage}: {detail}")]
    Certification { stage: &'static str, detail: String },
    #[error("heuristic failure: {0}")]
    HeuristicFailure(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn certification(stage: &'static str, detail: impl Into<String>) -> Self {
        Error::Certification {
            stage,
            detail: detail.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
