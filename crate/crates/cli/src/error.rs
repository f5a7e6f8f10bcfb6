use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] tcdkit::Error),
}

impl CliError {
    /// 2 for configuration and input problems, 3 for everything that fails
    /// while computing.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Input(_) => 2,
            Self::Core(tcdkit::Error::Config(_)) => 2,
            Self::Io { .. } | Self::Core(_) => 3,
        }
    }
}
