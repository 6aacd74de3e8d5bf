use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Simulation(#[from] urbanepi_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    pub fn csv(path: &Path, source: csv::Error) -> Self {
        Self::Csv { path: path.to_path_buf(), source }
    }

    /// Process exit code: 2 is left to argument parsing.
    pub fn exit_code(&self) -> i32 {
        use urbanepi_core::Error as E;
        match self {
            CliError::Config(_) => 3,
            CliError::Input(_) | CliError::Csv { .. } => 4,
            CliError::Io { .. } => 5,
            CliError::Simulation(E::Config(_) | E::NoTilesRetained { .. } | E::InfeasibleDegree { .. }) => 3,
            CliError::Simulation(E::Input(_)) => 4,
            CliError::Simulation(E::RejectionLimit { .. }) => 6,
            CliError::Simulation(E::Invariant(_)) => 7,
        }
    }

    pub fn category(&self) -> &'static str {
        match self.exit_code() {
            3 => "configuration",
            4 => "input",
            5 => "io",
            6 => "sampling",
            _ => "internal",
        }
    }
}
