use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid configuration: `{field}` {reason}")]
    Config { field: &'static str, reason: String },
    #[error("{0}")]
    Run(#[from] ssls_core::Error),
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl CliError {
    pub fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Self::Config {
            field,
            reason: reason.into(),
        }
    }

    /// Process exit code: 2 for bad input, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } | Self::Config { .. } => 2,
            Self::Io { .. } | Self::Run(_) | Self::Csv { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
