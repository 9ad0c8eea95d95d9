//! Per-run result record.

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::intervention::TierCounts;

/// One line of grid output. Carries the seed and config hash, so any line
/// can be re-run on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub seed: u64,
    pub config_hash: String,
    pub steps: u32,
    /// Mean per-agent, per-step environment reward.
    pub avg_reward: f64,
    /// Gini coefficient of cumulative allocations at the end of the run.
    pub final_gini: f64,
    pub compromise_ratio: f64,
    /// Steps from scripted onset to the first alarm, when both exist.
    pub detection_delay: Option<u32>,
    pub alarms: u64,
    pub admitted_alarms: u64,
    pub untargeted_alarms: u64,
    pub bytes_per_step_mean: f64,
    pub bytes_per_step_max: u64,
    pub byte_bound: u64,
    pub ledger_events: u64,
    pub ledger_edges: u64,
    pub ledger_root: String,
    pub interventions: TierCounts,
    pub cost_mean: f64,
    pub cost_bound: f64,
    pub failsafe_raised: u32,
    /// Cartel members' mean net reward (after shaping) in the window before and the
    /// window after the first intervention naming one of them.
    pub cartel_gain: Option<(f64, f64)>,
    pub intervention_log: Vec<String>,
    pub config: ExperimentConfig,
}

impl MetricsRecord {
    pub fn to_json_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("record serialises");
        line.push('\n');
        line
    }
}
