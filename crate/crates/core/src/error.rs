use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigenvector growth overflowed at t = {t}")]
    Overflow { t: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Input violates an operation precondition (window too short, etc).
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Spectral amplitude requested at a point where a'(λ) vanishes.
    #[error("degenerate eigenvalue at {re}+{im}j: |a'(λ)| = {deriv_abs:.3e}")]
    DegenerateEigenvalue { re: f64, im: f64, deriv_abs: f64 },

    #[error("windowing error: wrap-around energy fraction {fraction:.3e} exceeds {limit:.1e}")]
    Windowing { fraction: f64, limit: f64 },

    #[error("frame error: {0}")]
    Frame(String),

    #[error("search refused: {0}")]
    SearchRefused(String),

    /// Configuration problem; `path` is the dotted field path inside the file.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag, used in the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Overflow { .. } => "overflow",
            Error::Numeric(_) => "numeric",
            Error::Precondition(_) => "precondition",
            Error::DegenerateEigenvalue { .. } => "degenerate_eigenvalue",
            Error::Windowing { .. } => "windowing",
            Error::Frame(_) => "frame",
            Error::SearchRefused(_) => "search_refused",
            Error::Config { .. } => "config",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}
