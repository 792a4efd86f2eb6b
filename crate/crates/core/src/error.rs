use thiserror::Error;

/// Errors produced by the library.
///
/// The CLI maps [`Error::Config`] and [`Error::Io`] to exit code 2 and every
/// other variant to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("invalid gauge: {0}")]
    InvalidGauge(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty set: {0}")]
    EmptySet(String),

    #[error("unbounded envelope: {0}")]
    Unbounded(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("degenerate nodes: {0}")]
    Degenerate(String),

    #[error("root finder did not converge: {0}")]
    RootFinder(String),

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Io(_) | Error::Csv(_) | Error::Parse(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
