//! Responsibility scores from discounted causal-path mass.
//!
//! For an event `e`, agent `i`'s raw mass is the sum of `beta^len` over every
//! causal path into `e` whose first event belongs to `i`. Paths are confined to
//! events no older than `horizon` steps before `e`. Scores are the masses
//! normalised to unit sum, or all zero when no path reaches `e`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{EventId, EventIndex, LedgerDag, RING_CAPACITY};

pub const DEFAULT_BETA: f64 = 0.8;
pub const DEFAULT_SCORE_WINDOW: u32 = 25;
pub const ATTRIBUTION_HORIZON: u32 = RING_CAPACITY as u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponsibilityVector {
    pub event: EventId,
    pub scores: Vec<f64>,
    pub beta: f64,
}

impl ResponsibilityVector {
    /// True when at least one causal path reaches the event.
    pub fn is_attributed(&self) -> bool {
        self.scores.iter().any(|&s| s > 0.0)
    }

    pub fn total(&self) -> f64 {
        self.scores.iter().sum()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("beta must lie in (0,1), got {beta}")))
    }
}

/// Raw per-agent path mass into `event`, counting only ancestors whose step is
/// at least `floor`.
fn path_mass(ledger: &LedgerDag, event: EventIndex, beta: f64, floor: u32) -> Result<Vec<f64>> {
    let n = ledger.n_agents();
    let events = ledger.events();
    let mut memo: HashMap<EventIndex, Vec<f64>> = HashMap::new();
    // iterative post-order over ancestors
    let mut stack: Vec<(EventIndex, bool)> = vec![(event, false)];
    while let Some((node, expanded)) = stack.pop() {
        if memo.contains_key(&node) {
            continue;
        }
        if !expanded {
            stack.push((node, true));
            for parent in ledger.parents(node) {
                if events[parent].step >= floor && !memo.contains_key(&parent) {
                    stack.push((parent, false));
                }
            }
            continue;
        }
        let mut mass = vec![0.0; n];
        for parent in ledger.parents(node) {
            if events[parent].step < floor {
                continue;
            }
            let upstream = &memo[&parent];
            mass[events[parent].agent as usize] += beta;
            for (m, u) in mass.iter_mut().zip(upstream) {
                *m += beta * u;
            }
        }
        memo.insert(node, mass);
    }
    memo.remove(&event)
        .ok_or_else(|| Error::InvalidArgument("event index out of range".into()))
}

fn normalise(mass: Vec<f64>) -> Vec<f64> {
    let total: f64 = mass.iter().sum();
    if total > 0.0 && total.is_finite() {
        mass.into_iter().map(|m| m / total).collect()
    } else {
        vec![0.0; mass.len()]
    }
}

/// Responsibility vector for `event` under the default 256-step horizon.
pub fn compute_rho(ledger: &LedgerDag, event: EventIndex, beta: f64) -> Result<ResponsibilityVector> {
    compute_rho_within(ledger, event, beta, ATTRIBUTION_HORIZON)
}

pub fn compute_rho_within(
    ledger: &LedgerDag,
    event: EventIndex,
    beta: f64,
    horizon: u32,
) -> Result<ResponsibilityVector> {
    check_beta(beta)?;
    let e = ledger.event(event)?;
    let mass = path_mass(ledger, event, beta, e.step.saturating_sub(horizon))?;
    Ok(ResponsibilityVector {
        event: ledger.event_id(event),
        scores: normalise(mass),
        beta,
    })
}

/// Windowed aggregate `sum of rho_i(e)` over events with step in `[t - window, t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedScores {
    pub t: u32,
    pub window: u32,
    pub scores: Vec<f64>,
    /// Events in the window with a nonempty path set.
    pub attributed_events: usize,
}

impl WindowedScores {
    pub fn total(&self) -> f64 {
        self.scores.iter().sum()
    }

    pub fn top_k(&self, k: usize) -> Vec<usize> {
        top_k(&self.scores, k)
    }

    /// Scores scaled to unit sum (all zero if nothing was attributed).
    pub fn normalised(&self) -> Vec<f64> {
        normalise(self.scores.clone())
    }
}

pub fn windowed_scores(ledger: &LedgerDag, t: u32, window: u32, beta: f64) -> Result<WindowedScores> {
    Attributor::new(beta)?.windowed(ledger, t, window)
}

/// Agents with positive score, highest first, ties to the lower index, at most `k`.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut ranked: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] > 0.0).collect();
    ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    ranked.truncate(k);
    ranked
}

/// Caches one responsibility vector per event. Valid because edges into an
/// event are only inserted while that event is processed, so its ancestry is
/// final once it has been queried after its own step.
#[derive(Debug, Clone)]
pub struct Attributor {
    beta: f64,
    horizon: u32,
    cache: HashMap<EventIndex, Vec<f64>>,
}

impl Attributor {
    pub fn new(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Attributor {
            beta,
            horizon: ATTRIBUTION_HORIZON,
            cache: HashMap::new(),
        })
    }

    pub fn with_horizon(mut self, horizon: u32) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn scores(&mut self, ledger: &LedgerDag, event: EventIndex) -> Result<&[f64]> {
        if !self.cache.contains_key(&event) {
            let floor = ledger.event(event)?.step.saturating_sub(self.horizon);
            let rho = normalise(path_mass(ledger, event, self.beta, floor)?);
            self.cache.insert(event, rho);
        }
        Ok(&self.cache[&event])
    }

    pub fn rho(&mut self, ledger: &LedgerDag, event: EventIndex) -> Result<ResponsibilityVector> {
        let beta = self.beta;
        let scores = self.scores(ledger, event)?.to_vec();
        Ok(ResponsibilityVector {
            event: ledger.event_id(event),
            scores,
            beta,
        })
    }

    pub fn windowed(&mut self, ledger: &LedgerDag, t: u32, window: u32) -> Result<WindowedScores> {
        if window == 0 {
            return Err(Error::InvalidArgument("window must be at least 1".into()));
        }
        let lo = t.saturating_sub(window);
        let mut scores = vec![0.0; ledger.n_agents()];
        let mut attributed_events = 0;
        let in_window: Vec<EventIndex> = ledger.events_in_steps(lo..=t).collect();
        for idx in in_window {
            let rho = self.scores(ledger, idx)?;
            if rho.iter().any(|&s| s > 0.0) {
                attributed_events += 1;
                for (acc, r) in scores.iter_mut().zip(rho) {
                    *acc += r;
                }
            }
        }
        Ok(WindowedScores {
            t,
            window,
            scores,
            attributed_events,
        })
    }

    /// Drops cached vectors for events older than `step`.
    pub fn prune_before(&mut self, ledger: &LedgerDag, step: u32) {
        self.cache.retain(|&i, _| ledger.events()[i].step >= step);
    }
}
