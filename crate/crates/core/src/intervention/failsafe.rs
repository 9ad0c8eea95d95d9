//! Compromise accounting and the yellow-flag failsafe.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::environment::{LearningMode, FAILSAFE_CLIP};

pub const FAILSAFE_WINDOW: u32 = 300;
pub const FAILSAFE_REGIONS: usize = 3;
pub const DEFAULT_MA_WINDOW: usize = 1000;

/// Running violation count `C_T` and a moving average of `C_T / T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompromiseLedger {
    violations: u64,
    steps: u64,
    window: usize,
    ratios: VecDeque<f64>,
    ratio_sum: f64,
}

impl CompromiseLedger {
    pub fn new(ma_window: usize) -> Self {
        CompromiseLedger {
            violations: 0,
            steps: 0,
            window: ma_window.max(1),
            ratios: VecDeque::new(),
            ratio_sum: 0.0,
        }
    }

    /// Records one step's indicator and returns the new ratio.
    pub fn record(&mut self, violation: bool) -> f64 {
        self.steps += 1;
        self.violations += u64::from(violation);
        let r = self.ratio();
        self.ratios.push_back(r);
        self.ratio_sum += r;
        if self.ratios.len() > self.window {
            self.ratio_sum -= self.ratios.pop_front().unwrap_or(0.0);
        }
        r
    }

    pub fn violations(&self) -> u64 {
        self.violations
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn ratio(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.violations as f64 / self.steps as f64
        }
    }

    /// Mean of the last `window` ratios, current one included.
    pub fn moving_average(&self) -> f64 {
        if self.ratios.is_empty() {
            0.0
        } else {
            self.ratio_sum / self.ratios.len() as f64
        }
    }
}

impl Default for CompromiseLedger {
    fn default() -> Self {
        Self::new(DEFAULT_MA_WINDOW)
    }
}

/// Raises the yellow flag after three alert regions start inside a 300-step
/// window; a region is a maximal run of consecutive alert steps. The flag
/// clears once `C_T / T` drops below its moving average (or `C_T = 0`), after
/// which region history restarts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failsafe {
    window: u32,
    regions: usize,
    starts: VecDeque<u32>,
    in_region: bool,
    yellow: bool,
    raised: u32,
    raised_at: Vec<u32>,
}

impl Default for Failsafe {
    fn default() -> Self {
        Self::new(FAILSAFE_WINDOW, FAILSAFE_REGIONS)
    }
}

impl Failsafe {
    pub fn new(window: u32, regions: usize) -> Self {
        Failsafe {
            window,
            regions: regions.max(1),
            starts: VecDeque::new(),
            in_region: false,
            yellow: false,
            raised: 0,
            raised_at: Vec::new(),
        }
    }

    pub fn is_yellow(&self) -> bool {
        self.yellow
    }

    /// Steps at which the flag was raised.
    pub fn raised_at(&self) -> &[u32] {
        &self.raised_at
    }

    pub fn learning_mode(&self) -> LearningMode {
        if self.yellow {
            LearningMode {
                frozen: true,
                clip: Some(FAILSAFE_CLIP),
            }
        } else {
            LearningMode::default()
        }
    }

    /// Folds in step `t`; `compromise` must already include this step.
    pub fn update(&mut self, t: u32, alert: bool, compromise: &CompromiseLedger) -> bool {
        if alert && !self.in_region {
            self.starts.push_back(t);
        }
        self.in_region = alert;
        while self.starts.front().is_some_and(|&s| s + self.window <= t) {
            self.starts.pop_front();
        }
        if self.yellow {
            if compromise.violations() == 0 || compromise.ratio() < compromise.moving_average() {
                self.yellow = false;
                self.starts.clear();
            }
        } else if self.starts.len() >= self.regions {
            self.yellow = true;
            self.raised += 1;
            self.raised_at.push(t);
        }
        self.yellow
    }
}
