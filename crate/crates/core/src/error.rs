use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty parameter space")]
    EmptySpace,

    #[error("duplicate parameter `{0}`")]
    DuplicateParameter(String),

    #[error("missing parameter `{0}`")]
    MissingParameter(String),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("value `{value}` out of range for parameter `{name}`")]
    OutOfRange { name: String, value: String },

    #[error("configurations belong to different parameter spaces")]
    SpaceMismatch,

    #[error("parameter `{0}` has a single admissible value and cannot be mutated")]
    SingleValuedDomain(String),

    #[error("every candidate parameter is excluded")]
    AllExcluded,

    #[error("invalid building: {0}")]
    InvalidBuilding(String),

    #[error("invalid passenger {index}: {msg}")]
    InvalidPassenger { index: usize, msg: String },

    #[error("test case `{id}`: {source}")]
    TestCase {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid oracle specification: {0}")]
    InvalidOracle(String),

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("point {0} lies below the reference point")]
    BelowReference(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
