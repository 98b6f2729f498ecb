//! Configuration, run orchestration and the on-disk artifacts.
//!
//! Every CSV number is written with 17 significant digits; JSON reports
//! keep wall-clock figures in a top-level `timing` record so that two runs
//! of one configuration differ nowhere else.

mod config;
mod output;
mod run;

use std::path::PathBuf;

pub use config::{
    parse_config, CoefficientConfig, ConfigError, DataConfig, DomainConfig, OutputConfig,
    ParsedConfig, PotentialConfig, ReferenceConfig, RunConfig, TimeConfig, FAMILIES,
};
pub use output::{format_number, trajectory_csv};
pub use run::{
    compare_trajectories, run_check_potential, run_compare, run_solve, run_sweep, CheckRow,
    CheckStatus, CompareOutcome, CompareRow, Comparison, PotentialCheck, SolveOutcome, SweepAxis,
    SweepOptions, SweepRow,
};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration:\n{}", join(.0))]
    Config(Vec<ConfigError>),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Solver(#[from] crate::Error),
}

fn join(errs: &[ConfigError]) -> String {
    errs.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n")
}

impl RunError {
    /// 2 for configuration problems, 3 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Io { .. } | Self::Solver(_) => 3,
        }
    }
}
