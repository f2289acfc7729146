//! Experiment orchestration: batch Type-1-error runs, defect sweeps,
//! empirical CDFs and their reports.
//!
//! Sequence `g` of a run (`g = set_id·M + index`) always comes from stream `g`
//! of the configured generator, so the output never depends on how work is
//! scheduled across workers.

pub mod cdf;
pub mod config;
pub mod experiment;
mod report;

pub use cdf::{empirical_cdf, sample_v_tilde, CdfRow, CdfTable};
pub use config::{geometric_periods, ExperimentConfig, ReportFormat, Settings};
pub use experiment::{
    map_sequences, run_batch, run_detection_sweep, sequence_hash, ExperimentKind, ExperimentReport, PValueRow, SetRow,
    VariantSummary,
};
