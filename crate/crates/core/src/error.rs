use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("malformed XML: {0}")]
    Xml(String),

    #[error("duplicate accession `{0}`")]
    DuplicateAccession(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("shape mismatch: expected dimension {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("`{term}` has no concept in the {dimension} route")]
    LookupMiss { term: String, dimension: String },

    #[error("zero-norm vector has no direction")]
    ZeroVector,

    #[error("accession `{0}` is not present in the ranking")]
    Integrity(String),

    #[error("evaluation set is empty")]
    EmptyReport,

    #[error("training diverged at step {step}: loss is {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("unsupported format: {0}")]
    Format(String),

    #[error("truncated or corrupt file: {0}")]
    Corrupt(String),

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
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
