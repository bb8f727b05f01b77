//! Monte-Carlo experiment harness: TOML-configured sweeps over an SNR grid,
//! deterministic per-trial RNG streams, and CSV metric output.

pub mod config;
pub mod metrics;
pub mod runner;

pub use config::{
    DetectorKind, EstimatorKind, ExperimentConfig, ScenarioKind,
};
pub use metrics::{MetricRow, MetricTable};
pub use runner::{run_experiment, RunOutput};
