//! Error type of the experiment runner.

use std::fmt;
use std::path::PathBuf;
use thiserror::Error;

/// One configuration problem with its key path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn list(v: &[Violation]) -> String {
    v.iter().map(|x| format!("  {x}")).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration ({} problem(s)):\n{}", .0.len(), list(.0))]
    Config(Vec<Violation>),

    #[error(transparent)]
    Core(#[from] radelastic::Error),

    #[error("i/o failure at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json encoding failed: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unknown verification suite {0:?} (expected nullform, sobolev, kss, multiplier, energy or all)")]
    UnknownSuite(String),

    #[error("a convergence study needs at least 3 levels, got {0}")]
    TooFewLevels(usize),

    #[error("{0}")]
    Experiment(String),

    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    /// Configuration violations, empty for other errors.
    pub fn violations(&self) -> &[Violation] {
        match self {
            Self::Config(v) => v,
            _ => &[],
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
