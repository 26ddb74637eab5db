//! Experiment harness: diffusion calibration, threshold and distance
//! sweeps, config files and CSV output.

mod calibrate;
mod config;
mod output;
mod sweep;

use std::path::PathBuf;

use thiserror::Error;

use crate::analytic::ModelError;
use crate::simulator::SimError;

pub use calibrate::{calibrate_diffusion, Calibration};
pub use config::{DiffusionSource, EngineSelection, ExperimentConfig};
pub use output::{emit_csv, format_number, read_csv, write_csv, Metadata, CSV_COLUMNS};
pub use sweep::{
    run_beta_sweep, run_distance_sweep, run_sweep, run_threshold_sweep, DistanceGap, Engine, MonteCarloSettings,
    OptimumSummary, SweepResult, SweepRow, SweepSpec, SweepVariable,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error{}: {message}", line.map(|l| format!(" on line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl ExperimentError {
    pub(crate) fn config(message: impl Into<String>) -> Self {
        ExperimentError::Config {
            line: None,
            message: message.into(),
        }
    }

    /// Process exit code for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config { .. } | ExperimentError::Model(_) | ExperimentError::Sim(_) => 2,
            ExperimentError::Calibration(_) => 3,
            ExperimentError::Io { .. } | ExperimentError::Csv(_) => 4,
        }
    }
}
