use std::io;
use std::path::PathBuf;

use crate::norms::EocReport;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("invalid value for `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{path}:{line}: {message}")]
    Syntax {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Solver(#[from] esdg_core::Error),

    #[error("convergence study aborted after {} resolution(s): {source}", report.resolutions.len())]
    PartialConvergence {
        report: EocReport,
        #[source]
        source: Box<AppError>,
    },
}

impl AppError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for invalid input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } | Self::Syntax { .. } => 1,
            Self::Solver(esdg_core::Error::Config(_) | esdg_core::Error::Parameter(_)) => 1,
            _ => 2,
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
