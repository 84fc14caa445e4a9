use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] hartree_core::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON encoding failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Core(hartree_core::Error::NotConverged { .. }) => "not_converged",
            Self::Core(hartree_core::Error::BlowupSuspected { .. }) => "blowup_suspected",
            Self::Core(_) => "numerics",
            Self::Io { .. } => "io",
            Self::Json(_) => "json",
            Self::Usage(_) => "usage",
        }
    }

    pub fn report(&self) -> ErrorReport {
        let (line, column, key) = match self {
            Self::Config(c) => (c.line, c.column, c.key.clone()),
            _ => (None, None, None),
        };
        ErrorReport {
            error: ErrorBody {
                kind: self.kind(),
                message: match self {
                    Self::Config(c) => c.message.clone(),
                    other => other.to_string(),
                },
                line,
                column,
                key,
            },
        }
    }
}

#[derive(Serialize)]
pub struct ErrorReport {
    pub error: ErrorBody,
}

#[derive(Serialize)]
pub struct ErrorBody {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
}
