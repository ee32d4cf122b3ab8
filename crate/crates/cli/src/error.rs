use std::path::{Path, PathBuf};

/// Exit code for runtime and numeric failures.
pub const EXIT_RUNTIME: i32 = 1;
/// Exit code for usage and data errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] noge_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    /// A file exists but is not in the expected format.
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_owned(),
            source,
        }
    }

    pub fn format(path: &Path, message: impl Into<String>) -> Self {
        CliError::Format {
            path: path.to_owned(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_usage() => EXIT_USAGE,
            CliError::Core(_) => EXIT_RUNTIME,
            CliError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => EXIT_USAGE,
            CliError::Io { .. } => EXIT_RUNTIME,
            CliError::Usage(_) | CliError::Format { .. } => EXIT_USAGE,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
