//! Configuration, orchestration and artifact emission for `bosetunnel`.

pub mod config;
pub mod output;
pub mod run;
pub mod sweep;

use std::path::PathBuf;

use bosetunnel::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("cannot read or write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Stable category name printed with every failure.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Core(Error::Config(_) | Error::Usage(_) | Error::Domain(_)) => "config",
            CliError::Core(Error::Instability { .. }) => "instability",
            CliError::Core(Error::Convergence { .. }) => "convergence",
            CliError::Core(Error::Data(_) | Error::Integrity(_)) => "data",
            CliError::Io { .. } => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 2,
            "instability" => 3,
            "convergence" => 4,
            "data" => 5,
            _ => 6,
        }
    }
}
