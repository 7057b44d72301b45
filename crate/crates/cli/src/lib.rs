//! Experiment runner for the `andersonlab` binary.
//!
//! Each subcommand reads an [`ExperimentConfig`], runs its ensemble and
//! writes CSV/JSON artifacts plus `manifest.json` into the output directory.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

pub use commands::{run_command, Command, RunManifest};
pub use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<anderson_core::Error> for CliError {
    fn from(e: anderson_core::Error) -> Self {
        use anderson_core::Error as E;
        match e {
            E::InvalidDistribution(_)
            | E::InvalidArgument(_)
            | E::ArgumentOrder { .. }
            | E::NonPositiveWidth(_)
            | E::InvalidScale(_)
            | E::WindowUnderflow(_)
            | E::Resolution(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

/// Loads the config at `path`, applies overrides and runs `command`.
pub fn run(
    command: Command,
    path: &std::path::Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    workers: Option<usize>,
) -> Result<RunManifest, CliError> {
    let cfg = ExperimentConfig::load(path)?.with_overrides(seed, out, workers)?;
    run_command(command, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_codes() {
        let tie = anderson_core::Error::TieBreak { shift: 1e-12, retries: 3 };
        assert_eq!(CliError::from(tie).exit_code(), 3);
        let bad = anderson_core::Error::NonPositiveWidth(0.0);
        assert_eq!(CliError::from(bad).exit_code(), 2);
        assert_eq!(CliError::Io("x".into()).exit_code(), 1);
    }
}
