use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: line {line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] eitsdp_core::Error),
}

impl AppError {
    /// Process exit code: 2 for infeasible data or missing definiteness,
    /// 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Core(eitsdp_core::Error::NoDefiniteness { .. })
            | AppError::Core(eitsdp_core::Error::InfeasibleStart { .. }) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }
}
