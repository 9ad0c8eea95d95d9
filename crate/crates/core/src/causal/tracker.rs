//! Online edge discovery over the ledger.

use std::collections::BTreeMap;

use super::granger::{GrangerState, DEFAULT_LAGS, DEFAULT_WINDOW};
use super::schedule::ThresholdSchedule;
use crate::error::Result;
use crate::ledger::{CausalEdge, EventIndex, LedgerDag, EDGE_RECORD_BYTES};

/// Maximum age, in steps, of an upstream candidate.
pub const CAUSAL_HORIZON: u32 = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    pub lags: usize,
    pub window: usize,
    /// Upstream events examined per new event.
    pub candidates: usize,
    pub schedule: ThresholdSchedule,
    /// Per-step byte ceiling for events plus edges; `None` disables it.
    pub step_byte_budget: Option<u64>,
    /// Steps a reward sample waits for late records before it is fed to the
    /// pair states. Samples are fed in event-step order; records arriving
    /// after their step was fed do not contribute.
    pub settle: u32,
}

impl TrackerConfig {
    pub fn new(schedule: ThresholdSchedule) -> Self {
        TrackerConfig {
            lags: DEFAULT_LAGS,
            window: DEFAULT_WINDOW,
            candidates: DEFAULT_LAGS,
            schedule,
            step_byte_budget: None,
            settle: 0,
        }
    }
}

/// A proposed edge before it is committed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeProposal {
    pub source: EventIndex,
    pub target: EventIndex,
    pub f_stat: f64,
}

/// Per-agent reward signal plus one [`GrangerState`] per ordered
/// (in-neighbour, agent) pair.
#[derive(Debug, Clone)]
pub struct CausalTracker {
    config: TrackerConfig,
    signal: Vec<f64>,
    pairs: BTreeMap<(usize, usize), GrangerState>,
    resets: u64,
    pending: BTreeMap<u32, Vec<Option<f64>>>,
    fed_through: Option<u32>,
}

impl CausalTracker {
    pub fn new(config: TrackerConfig, n_agents: usize) -> Self {
        CausalTracker {
            config,
            signal: vec![0.0; n_agents],
            pairs: BTreeMap::new(),
            resets: 0,
            pending: BTreeMap::new(),
            fed_through: None,
        }
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn signal(&self) -> &[f64] {
        &self.signal
    }

    /// Total numerical resets across all pair states.
    pub fn resets(&self) -> u64 {
        self.resets + self.pairs.values().map(GrangerState::resets).sum::<u64>()
    }

    /// Current F for `source -> target`, 0 if the pair is untracked or warming up.
    pub fn pair_f(&self, source: usize, target: usize) -> f64 {
        self.pairs.get(&(source, target)).map_or(0.0, GrangerState::f_stat)
    }

    pub fn pair(&self, source: usize, target: usize) -> Option<&GrangerState> {
        self.pairs.get(&(source, target))
    }

    pub fn tracked_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Advances every tracked pair by one sample. `rewards[i]` is the reward
    /// carried by agent i's event this step; missing entries hold the last value.
    pub fn observe(&mut self, rewards: &[Option<f64>], in_neighbors: &[Vec<usize>]) {
        for (slot, r) in self.signal.iter_mut().zip(rewards) {
            if let Some(r) = r {
                *slot = *r;
            }
        }
        let (lags, window) = (self.config.lags, self.config.window);
        for (target, sources) in in_neighbors.iter().enumerate() {
            for &source in sources {
                self.pairs
                    .entry((source, target))
                    .or_insert_with(|| GrangerState::new(lags, window));
            }
        }
        for (&(source, target), state) in self.pairs.iter_mut() {
            state.update(self.signal[source], self.signal[target]);
        }
    }

    /// Up to `candidates` most recent events of in-neighbours that precede
    /// `event` within the causal horizon, newest first.
    pub fn candidates(
        &self,
        ledger: &LedgerDag,
        event: EventIndex,
        in_neighbors: &[usize],
    ) -> Result<Vec<EventIndex>> {
        let e = ledger.event(event)?;
        let floor = e.step.saturating_sub(CAUSAL_HORIZON);
        let mut found: Vec<(u32, u16, EventIndex)> = Vec::new();
        for &agent in in_neighbors {
            let Some(ring) = ledger.ring(agent) else { continue };
            let mut taken = 0;
            for &idx in ring.iter().rev() {
                let u = ledger.event(idx)?;
                if u.step >= e.step {
                    continue;
                }
                if u.step < floor || taken == self.config.candidates {
                    break;
                }
                found.push((u.step, u.agent, idx));
                taken += 1;
            }
        }
        found.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        found.truncate(self.config.candidates);
        Ok(found.into_iter().map(|(_, _, idx)| idx).collect())
    }

    /// Edges into `event` whose pair F exceeds the threshold at step `t`.
    pub fn propose(
        &self,
        ledger: &LedgerDag,
        event: EventIndex,
        in_neighbors: &[usize],
        t: u64,
    ) -> Result<Vec<EdgeProposal>> {
        let threshold = self.config.schedule.threshold_at(t.max(1))?;
        let target_agent = ledger.event(event)?.agent as usize;
        let mut out = Vec::new();
        for source in self.candidates(ledger, event, in_neighbors)? {
            let source_agent = ledger.event(source)?.agent as usize;
            let f = self.pair_f(source_agent, target_agent);
            if f > threshold {
                out.push(EdgeProposal {
                    source,
                    target: event,
                    f_stat: f,
                });
            }
        }
        Ok(out)
    }

    /// Tests and inserts edges for one new event, ignoring the byte budget.
    pub fn insert_causal_edges(
        &self,
        ledger: &mut LedgerDag,
        event: EventIndex,
        in_neighbors: &[usize],
        t: u64,
    ) -> Result<Vec<CausalEdge>> {
        let proposals = self.propose(ledger, event, in_neighbors, t)?;
        commit_proposals(ledger, proposals, t)
    }

    /// One ledger step: feeds every settled step's rewards to the pair
    /// states, then tests every new event. When a byte budget is set, the strongest edges
    /// are kept so that the step's bytes stay within it.
    pub fn process_step(
        &mut self,
        ledger: &mut LedgerDag,
        t: u64,
        new_events: &[EventIndex],
        in_neighbors: &[Vec<usize>],
    ) -> Result<Vec<CausalEdge>> {
        let n = self.signal.len();
        for &idx in new_events {
            let e = ledger.event(idx)?;
            if self.fed_through.is_some_and(|f| e.step <= f) || e.agent as usize >= n {
                continue;
            }
            self.pending.entry(e.step).or_insert_with(|| vec![None; n])[e.agent as usize] = Some(e.reward());
        }
        let ready = u32::try_from(t).unwrap_or(u32::MAX).saturating_sub(self.config.settle);
        while let Some(entry) = self.pending.first_entry() {
            if *entry.key() > ready {
                break;
            }
            let (step, rewards) = entry.remove_entry();
            self.observe(&rewards, in_neighbors);
            self.fed_through = Some(step);
        }
        let mut proposals = Vec::new();
        for &idx in new_events {
            let agent = ledger.event(idx)?.agent as usize;
            let sources = in_neighbors.get(agent).map_or(&[][..], Vec::as_slice);
            proposals.extend(self.propose(ledger, idx, sources, t)?);
        }
        if let Some(budget) = self.config.step_byte_budget {
            let used = ledger.pending_step_bytes();
            let slots = (budget.saturating_sub(used) / EDGE_RECORD_BYTES) as usize;
            if proposals.len() > slots {
                proposals.sort_by(|a, b| {
                    b.f_stat
                        .total_cmp(&a.f_stat)
                        .then(a.target.cmp(&b.target))
                        .then(a.source.cmp(&b.source))
                });
                proposals.truncate(slots);
            }
        }
        commit_proposals(ledger, proposals, t)
    }
}

fn commit_proposals(
    ledger: &mut LedgerDag,
    proposals: Vec<EdgeProposal>,
    t: u64,
) -> Result<Vec<CausalEdge>> {
    let step = u32::try_from(t).unwrap_or(u32::MAX);
    let mut out = Vec::with_capacity(proposals.len());
    for p in proposals {
        if ledger.insert_edge(p.source, p.target, p.f_stat, step)? {
            out.push(CausalEdge {
                source: ledger.event_id(p.source),
                target: ledger.event_id(p.target),
                f_stat: p.f_stat,
                inserted_at: step,
            });
        }
    }
    Ok(out)
}
