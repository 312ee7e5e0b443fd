//! Command-line front end of the cfmimo simulator: configuration handling,
//! campaign output files, the oracle report and path-loss fitting.

pub mod commands;
pub mod config;
pub mod oracle;

use std::path::{Path, PathBuf};

pub use commands::{cmd_fit, cmd_oracle, cmd_run, cmd_synth_dataset, RunReport, SynthOptions};
pub use config::{CliConfig, Profile};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "CFMIMO_WORKERS";

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const RUNTIME: i32 = 1;
    /// Bad command line (clap's own code).
    pub const USAGE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const ORACLE_FAILED: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] cfmimo_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("oracle check failed on {failed} of {total} instances")]
    OracleFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Core(cfmimo_core::Error::TooManyUes { .. }) => exit::CONFIG,
            CliError::Core(_) | CliError::Io { .. } => exit::RUNTIME,
            CliError::OracleFailed { .. } => exit::ORACLE_FAILED,
        }
    }

    pub(crate) fn in_file(self, path: &Path) -> Self {
        match self {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        }
    }

    pub(crate) fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Self + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
