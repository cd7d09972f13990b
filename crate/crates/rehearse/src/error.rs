use std::path::PathBuf;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_PROPERTY: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("data: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("property check failed: {0}")]
    Property(String),

    #[error(transparent)]
    Core(#[from] rehearse_core::Error),

    #[error("malformed csv {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => EXIT_USAGE,
            HarnessError::Data(_) | HarnessError::Csv { .. } => EXIT_DATA,
            HarnessError::Property(_) => EXIT_PROPERTY,
            HarnessError::Core(rehearse_core::Error::Parse { .. }) => EXIT_DATA,
            HarnessError::Core(rehearse_core::Error::InvalidArgument(_)) => EXIT_USAGE,
            HarnessError::Core(_) | HarnessError::Io { .. } | HarnessError::Json(_) => EXIT_IO,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
