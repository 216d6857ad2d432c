use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An exponential moment was requested outside its finiteness window.
    #[error("divergent moment: E[exp(tW)] is infinite for t = {t} (window is ({lo}, {hi}))")]
    DivergentMoment { t: f64, lo: f64, hi: f64 },

    /// An iterative numerical routine failed to reach its tolerance.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A likelihood contribution was not finite or a censored probability was not positive.
    #[error("non-finite likelihood contribution at point {index} ({u1}, {u2}) in region {region} for {params}")]
    Likelihood {
        index: usize,
        u1: f64,
        u2: f64,
        region: String,
        params: String,
    },

    /// Input data could not be ingested.
    #[error("ingestion error: {0}")]
    Ingestion(String),

    /// A CSV cell could not be parsed.
    #[error("{path}: row {row}, column '{column}': cannot parse '{value}'")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
