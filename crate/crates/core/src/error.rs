use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown component function id {0}")]
    UnknownComponent(u32),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate component {component_id} (instance {instance_id}, d={dim}): all sampled precisions below 1e-8")]
    DegenerateComponent {
        component_id: u32,
        instance_id: u32,
        dim: usize,
    },
    #[error("sample too small: {got} points, need at least {need}")]
    SampleSize { got: usize, need: usize },
    #[error("feature pruning left no features")]
    EmptyPruning,
    #[error("capacity error: need {need} candidates, only {available} available")]
    Capacity { need: usize, available: usize },
    #[error("instance pool error: {0}")]
    Pool(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("stale artifact {path}: expected config hash {expected}, found {found}")]
    Stale {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error("portfolio of {0} algorithms is too large for powerset enumeration (max 12)")]
    PortfolioTooLarge(usize),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse error classes, used by the command line front end for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Capacity,
    Staleness,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Capacity { .. } | Error::PortfolioTooLarge(_) => ErrorKind::Capacity,
            Error::Stale { .. } => ErrorKind::Staleness,
            Error::Io { .. } => ErrorKind::Io,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
