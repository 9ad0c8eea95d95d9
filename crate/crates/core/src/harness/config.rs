//! Experiment configuration and its validator.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attribution::DEFAULT_BETA;
use crate::causal::{DEFAULT_LAGS, DEFAULT_WINDOW as GRANGER_WINDOW};
use crate::detection::{
    DEFAULT_GLOBAL_BUDGET, DEFAULT_INITIAL_THRESHOLD, DEFAULT_MI_BINS, DEFAULT_MI_WINDOW, DEFAULT_NORM_ALPHA,
};
use crate::environment::{PolicyKind, Script, WorldConfig, GRID_LEVELS, MAX_DELAY, MAX_LOSS};
use crate::error::{Error, Result};
use crate::hash::HashAlgorithm;
use crate::intervention::{
    PlaybookParams, SupervisorConfig, DEFAULT_MA_WINDOW, DEFAULT_PATCH_COST, DEFAULT_TARGETS, DEFAULT_THROTTLE_COST,
    DEFAULT_WINDOW,
};

/// Which supervision stack runs on top of the world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Ledger, causal tracking, detection and interventions.
    #[default]
    Aaf,
    /// Learners alone.
    LearnerOnly,
    /// Learners whose requests are capped at the guard level.
    StaticGuard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CausalConfig {
    pub lags: usize,
    pub window: usize,
    pub candidates: usize,
    /// False-positive level that sets the edge threshold offset.
    pub edge_alpha: f64,
    pub beta: f64,
}

impl Default for CausalConfig {
    fn default() -> Self {
        CausalConfig {
            lags: DEFAULT_LAGS,
            window: GRANGER_WINDOW,
            candidates: DEFAULT_LAGS,
            edge_alpha: 1e-3,
            beta: DEFAULT_BETA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    /// Target alarm rate per norm.
    pub norm_alpha: f64,
    /// Global admitted-alert budget per step.
    pub global_budget: f64,
    /// Steps used to calibrate baselines before detection starts.
    pub warmup: u32,
    pub initial_threshold: f64,
    pub mi_window: usize,
    pub mi_bins: usize,
    /// Queue capacity for the load norm; defaults to `R_max`.
    pub load_capacity: Option<f64>,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            norm_alpha: DEFAULT_NORM_ALPHA,
            global_budget: DEFAULT_GLOBAL_BUDGET,
            warmup: 100,
            initial_threshold: DEFAULT_INITIAL_THRESHOLD,
            mi_window: DEFAULT_MI_WINDOW,
            mi_bins: DEFAULT_MI_BINS,
            load_capacity: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterventionConfig {
    /// Intervention window `H` in steps.
    pub window: u32,
    pub c_max: f64,
    /// Declared per-step gain ceiling of any agent.
    pub g_max: f64,
    pub targets: usize,
    /// Request ceiling under a patch; defaults to one grid increment below
    /// the greed threshold.
    pub patch_cap: Option<f64>,
    pub patch_cost: f64,
    pub throttle_cost: f64,
    pub ma_window: usize,
    pub failsafe: bool,
}

impl Default for InterventionConfig {
    fn default() -> Self {
        InterventionConfig {
            window: DEFAULT_WINDOW,
            c_max: 5.0,
            g_max: 1.0,
            targets: DEFAULT_TARGETS,
            patch_cap: None,
            patch_cost: DEFAULT_PATCH_COST,
            throttle_cost: DEFAULT_THROTTLE_COST,
            ma_window: DEFAULT_MA_WINDOW,
            failsafe: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub world: WorldConfig,
    pub causal: CausalConfig,
    pub detection: DetectionConfig,
    pub intervention: InterventionConfig,
    pub steps: u32,
    pub seeds: Vec<u64>,
    pub baseline: Baseline,
    pub script: Option<Script>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            world: WorldConfig::default(),
            causal: CausalConfig::default(),
            detection: DetectionConfig::default(),
            intervention: InterventionConfig::default(),
            steps: 1000,
            seeds: (0..5).collect(),
            baseline: Baseline::Aaf,
            script: None,
        }
    }
}

fn config_error(assumption: &'static str, message: String) -> Error {
    Error::Config { assumption, message }
}

impl ExperimentConfig {
    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text).map_err(|e| config_error("syntax", e.to_string()))?
        };
        config.validate()?;
        Ok(config)
    }

    /// Checks the modelling assumptions (bounded loss, bounded delay, finite
    /// degree, dominant penalty) and basic ranges.
    pub fn validate(&self) -> Result<()> {
        let w = &self.world;
        if !(0.0..=MAX_LOSS).contains(&w.loss) {
            return Err(config_error("A1", format!("loss {} outside [0, {MAX_LOSS}]", w.loss)));
        }
        if w.max_delay > MAX_DELAY {
            return Err(config_error("A2", format!("max_delay {} exceeds {MAX_DELAY}", w.max_delay)));
        }
        if w.d_max == 0 || w.d_max < w.graph_k {
            return Err(config_error(
                "A3",
                format!("d_max {} must be positive and cover the lattice degree {}", w.d_max, w.graph_k),
            ));
        }
        let iv = &self.intervention;
        if !(iv.c_max > iv.g_max) {
            return Err(config_error("A4", format!("c_max {} must exceed g_max {}", iv.c_max, iv.g_max)));
        }
        let checks: [(bool, &str); 12] = [
            ((0.0..=1.0).contains(&w.alpha_dist), "alpha_dist must lie in [0, 1]"),
            (w.r_max > 0.0 && w.r_in >= 0.0 && w.q_max > 0.0, "r_max and q_max must be positive, r_in nonnegative"),
            ((0.0..=1.0).contains(&w.p_rewire), "p_rewire must lie in [0, 1]"),
            ((0.0..=1.0).contains(&w.byzantine_fraction), "byzantine_fraction must lie in [0, 1]"),
            (w.n_agents < u16::MAX as usize, "too many agents"),
            (self.steps > 0, "steps must be positive"),
            (iv.window > 0 && iv.targets > 0, "window and targets must be positive"),
            (iv.g_max >= 0.0, "g_max must be nonnegative"),
            (self.causal.beta > 0.0 && self.causal.beta < 1.0, "beta must lie in (0, 1)"),
            (self.causal.edge_alpha > 0.0 && self.causal.edge_alpha < 1.0, "edge_alpha must lie in (0, 1)"),
            (
                self.detection.norm_alpha > 0.0 && self.detection.norm_alpha < 1.0,
                "norm_alpha must lie in (0, 1)",
            ),
            (
                self.detection.global_budget > 0.0 && self.detection.global_budget < 1.0,
                "global_budget must lie in (0, 1)",
            ),
        ];
        if let Some((_, msg)) = checks.iter().find(|(ok, _)| !ok) {
            return Err(config_error("range", (*msg).to_string()));
        }
        if self.detection.warmup < 2 {
            return Err(config_error("range", "warmup needs at least two steps".into()));
        }
        Ok(())
    }

    /// Honest policy after applying the baseline.
    pub fn effective_world(&self) -> WorldConfig {
        let mut w = self.world.clone();
        if self.baseline == Baseline::StaticGuard {
            w.honest_policy = PolicyKind::StaticGuardedLearner;
        }
        w
    }

    pub fn patch_cap(&self) -> f64 {
        let increment = self.world.q_max / (GRID_LEVELS - 1) as f64;
        self.intervention
            .patch_cap
            .unwrap_or(0.6 * self.world.r_max - increment)
    }

    pub fn supervisor(&self) -> SupervisorConfig {
        let iv = &self.intervention;
        let mut s = SupervisorConfig::new(PlaybookParams {
            k: iv.targets,
            window: iv.window,
            c_max: iv.c_max,
            patch_cap: self.patch_cap(),
        });
        s.patch_cost = iv.patch_cost;
        s.throttle_cost = iv.throttle_cost;
        s.alarm_rate = self.detection.global_budget;
        s.ma_window = iv.ma_window;
        s.failsafe = iv.failsafe;
        s
    }

    /// The config with its seed list cleared.
    pub fn without_seeds(&self) -> Self {
        ExperimentConfig {
            seeds: Vec::new(),
            ..self.clone()
        }
    }

    /// Hex SHA-256 of the canonical JSON of the seedless config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(&self.without_seeds()).expect("config serialises");
        HashAlgorithm::Sha256
            .digest32(&[json.as_bytes()])
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assumption_of(c: &ExperimentConfig) -> &'static str {
        match c.validate() {
            Err(Error::Config { assumption, .. }) => assumption,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::default().validate().unwrap();
        assert_eq!(ExperimentConfig::default().patch_cap(), 50.0);
    }

    #[test]
    fn assumptions_are_named() {
        let mut c = ExperimentConfig::default();
        c.world.loss = 0.25;
        assert_eq!(assumption_of(&c), "A1");
        let mut c = ExperimentConfig::default();
        c.world.max_delay = 4;
        assert_eq!(assumption_of(&c), "A2");
        let mut c = ExperimentConfig::default();
        c.world.d_max = 2;
        assert_eq!(assumption_of(&c), "A3");
        let mut c = ExperimentConfig::default();
        c.intervention.c_max = 1.0;
        assert_eq!(assumption_of(&c), "A4");
    }

    #[test]
    fn toml_round_trip_and_unknown_fields() {
        let c = ExperimentConfig::default();
        let text = toml::to_string(&c).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert!(toml::from_str::<ExperimentConfig>("stepz = 3").is_err());
        let partial: ExperimentConfig = toml::from_str("steps = 50\n[world]\nn_agents = 4\n").unwrap();
        assert_eq!(partial.steps, 50);
        assert_eq!(partial.world.n_agents, 4);
    }

    #[test]
    fn hash_ignores_seeds_only() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.seeds = vec![42];
        assert_eq!(a.hash(), b.hash());
        b.steps = 7;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
