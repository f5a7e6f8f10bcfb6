use thiserror::Error;

/// Errors produced by the tcdkit library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model or configuration value violates an invariant.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical routine failed to converge or bracket its target.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The API was used out of order (e.g. stepping a stopped detector).
    #[error("usage error: {0}")]
    Usage(String),

    /// The requested combination is not handled by this operation.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Every Monte-Carlo run alarmed before the change onset, so the
    /// conditional missed-detection probability is undefined.
    #[error("undefined conditional probability: {alarmed_early} of {runs} runs alarmed before onset v = {onset}")]
    UndefinedConditional {
        runs: u64,
        alarmed_early: u64,
        onset: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
