//! Configuration, caching and subcommand drivers behind the `rotlab` binary.

pub mod cache;
pub mod commands;
pub mod config;
pub mod output;

pub use cache::{Cache, Lookup, CACHE_ENV};
pub use config::{Command, ConfigErrors, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigErrors),
    #[error("{0}")]
    Setup(String),
    #[error(transparent)]
    Compute(#[from] rotlab::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Setup(_) => 2,
            _ => 1,
        }
    }
}
