use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_CONVERGENCE: u8 = 3;
pub const EXIT_UNSTABLE: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{0}")]
    Input(String),

    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("{0} model(s) did not converge")]
    Convergence(usize),

    #[error("{0} scenario(s) skipped as unstable")]
    Unstable(usize),

    #[error(transparent)]
    Core(#[from] gasqueue::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use gasqueue::Error as E;
        match self {
            CliError::Config { .. } | CliError::Input(_) | CliError::Read { .. } => EXIT_INPUT,
            CliError::Convergence(_) => EXIT_CONVERGENCE,
            CliError::Unstable(_) | CliError::Core(E::Unstable { .. }) => EXIT_UNSTABLE,
            CliError::Core(E::Domain(_) | E::Parse(_) | E::Csv(_)) => EXIT_INPUT,
            CliError::Write { .. } | CliError::Core(_) => EXIT_INTERNAL,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
