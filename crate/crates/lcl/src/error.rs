use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{context}: {message}")]
    Format { context: String, message: String },
    #[error("unknown model `{0}` (expected a file, dichotomy, two_block or FAMILY:t)")]
    UnknownModel(String),
    #[error(transparent)]
    Mps(#[from] lcl_core::mps::MpsError),
    #[error(transparent)]
    Logic(#[from] lcl_core::logic::LogicError),
    #[error(transparent)]
    Bench(#[from] lcl_core::bench::BenchError),
    #[error(transparent)]
    Spectral(#[from] lcl_core::spectral::SpectralError),
    #[error(transparent)]
    Check(#[from] lcl_core::checker::CheckError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn format(context: impl Into<String>, message: impl Into<String>) -> Error {
        Error::Format {
            context: context.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
