//! Experiment drivers: the CMS sizing sweep and the paired attack runs.

mod attack;
mod config;
mod output;
mod sweep;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::workload::WorkloadError;
use crate::xtr::XtrError;

pub use attack::{
    parse_timing, run_attack, run_flood_pair, run_scan_pair, AttackConfig, AttackReport, AttackRun, AttackSummary,
    FloodConfig, ScanConfig, Scenario,
};
pub use config::ExperimentConfig;
pub use output::{
    attack_runs_csv, attack_summary_csv, emit_sweep, plot_script, sweep_csv, write_attack_report, write_file,
    OutputFormat, SWEEP_CSV_HEADER,
};
pub use sweep::{mean_by_point, run_sweep, sort_rows, DepthPhase, SweepCell, SweepConfig, SweepPoint, SweepRow};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Xtr(#[from] XtrError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
}

impl ExperimentError {
    /// Process exit status: 1 for bad configuration or input, 2 for I/O failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Io { .. } | ExperimentError::Workload(WorkloadError::Io(_)) => 2,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        ExperimentError::Io { path: path.into(), source }
    }
}
