//! Configuration, episodes, the experiment grid, summaries and
//! verification suites.

mod config;
mod episode;
mod grid;
mod metrics;
mod summary;
pub mod verify;

pub use config::{Baseline, CausalConfig, DetectionConfig, ExperimentConfig, InterventionConfig};
pub use episode::{run_episode, Episode, StepReport, NORMS};
pub use grid::{recover, run_grid, GridRun, GridSpec};
pub use metrics::MetricsRecord;
pub use summary::{compute_summary, read_records, CellKey, CellSummary, MeanSd, Summary};
pub use verify::{verify, Check, VerifyReport, SUITES};
