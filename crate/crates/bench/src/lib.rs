//! Simulation harness for noisyrank.
//!
//! * [`run_sweep`] plays simulated sessions over a grid of list sizes,
//!   channel reliabilities and ensemble sizes and aggregates them into
//!   [`SweepRow`]s;
//! * [`fit_scaling`] regresses question counts against `L ln L`;
//! * [`sampler_quality_report`] compares each from-scratch sampler with the
//!   exact posterior on small lists.
//!
//! Everything is a pure function of its inputs and seed. Trials fan out over
//! the rayon pool when the `parallel` feature is on.

mod config;
mod csv;
pub mod quality;
mod scaling;
pub mod stats;
mod sweep;
pub mod timing;

use thiserror::Error;

pub use config::{ErrorModelMode, SweepConfig};
pub use csv::{meta_path, sweep_csv_string, write_meta, write_sweep_csv, write_sweep_files, SWEEP_CSV_HEADER};
pub use quality::{sampler_quality_report, QualityReport, SamplerQuality, QUALITY_SIZE_LIMIT};
pub use scaling::{fit_scaling, ScalingFit};
pub use sweep::{random_truth, run_sweep, run_sweep_with, run_trial, SweepRow, TrialOutcome};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),
    #[error("cannot parse sweep config: {0}")]
    Parse(String),
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error(transparent)]
    Core(#[from] noisyrank_core::CoreError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
