use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// A malformed input line. `line` is 1-based.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Invalid(String),

    #[error("missing embeddings for id={id} (side={side}, level={level})")]
    MissingEmbeddings {
        id: u64,
        side: &'static str,
        level: &'static str,
    },

    #[error("missing intermediate artifact {0}")]
    MissingArtifact(PathBuf),

    #[error("stale intermediate artifact {path}: {reason}")]
    StaleArtifact { path: PathBuf, reason: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("tag index {index} out of range for {size} tags")]
    TagOutOfRange { index: usize, size: usize },

    #[error("no entities")]
    NoEntities,

    #[error("fraction {0} outside (0, 1]")]
    Fraction(f64),

    /// An error raised while running a named pipeline stage.
    #[error("stage={stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// Process exit code: 2 for missing or unreadable inputs, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::Io { .. } | Error::MissingEmbeddings { .. } | Error::MissingArtifact(_) => 2,
            _ => 1,
        }
    }
}
