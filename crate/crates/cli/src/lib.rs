//! Benchmark driver and command-line front end for the `fracdiff` solvers.

pub mod bench;
pub mod commands;
pub mod config;
pub mod rates;
pub mod records;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fracdiff::Error),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;
