use thiserror::Error;

/// Process exit status. The numeric values are a stable contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    /// An analysis or acceptance check ran and failed.
    CheckFailed = 1,
    Unconverged = 2,
    Config = 3,
    Numerical = 4,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("trace CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Solver(#[from] psdid::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("not converged: {0}")]
    Unconverged(String),

    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) | CliError::Json { .. } | CliError::Csv(_) | CliError::Io { .. } => ExitCode::Config,
            CliError::Solver(e) => match e {
                psdid::Error::InvalidSpec(_) | psdid::Error::MatrixMarket { .. } | psdid::Error::Io(_) => {
                    ExitCode::Config
                }
                _ => ExitCode::Numerical,
            },
            CliError::Unconverged(_) => ExitCode::Unconverged,
            CliError::CheckFailed(_) => ExitCode::CheckFailed,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
