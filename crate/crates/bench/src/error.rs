use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("cannot parse {file}: {message}")]
    Parse { file: String, message: String },

    /// A config value rejected before any run; `path` is the dotted key.
    #[error("{path}: {source}")]
    Invalid {
        path: String,
        #[source]
        source: zomd::Error,
    },

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("run failed: {0}")]
    Run(#[from] zomd::Error),

    #[error("statistics: {0}")]
    Stats(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl BenchError {
    pub fn config(path: &str, message: impl Into<String>) -> Self {
        Self::Config {
            path: path.to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for configuration problems, 3 for failures
    /// during or after a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } | Self::Invalid { .. } | Self::Config { .. } => 2,
            Self::Run(_) | Self::Stats(_) | Self::Io { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;

/// Attaches a config path to a library error.
pub(crate) fn at(path: &'static str) -> impl Fn(zomd::Error) -> BenchError {
    move |source| BenchError::Invalid {
        path: path.to_string(),
        source,
    }
}
