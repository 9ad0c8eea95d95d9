use serde::{Deserialize, Serialize};

/// Bytes per committed event record.
pub const EVENT_RECORD_BYTES: u64 = 40;
/// Bytes per causal edge (one 32-byte hash reference).
pub const EDGE_RECORD_BYTES: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ResourceAccount {
    pub bytes_per_step: u64,
    pub total_bytes: u64,
    pub events_count: u64,
    pub edges_count: u64,
}

/// Per-step upper bound `40 N + 32 d_max h`.
pub fn bytes_per_step_bound(n_agents: u64, d_max: u64, horizon: u64) -> u64 {
    EVENT_RECORD_BYTES * n_agents + EDGE_RECORD_BYTES * d_max * horizon
}

/// Formula-mode accounting for `steps` control steps.
pub fn account_resources(n_agents: u64, d_max: u64, horizon: u64, steps: u64) -> ResourceAccount {
    let per_step = bytes_per_step_bound(n_agents, d_max, horizon);
    ResourceAccount {
        bytes_per_step: per_step,
        total_bytes: per_step * steps,
        events_count: n_agents * steps,
        edges_count: d_max * horizon * steps,
    }
}

/// Live counters for the step in progress plus running totals.
#[derive(Debug, Clone, Default)]
pub struct LiveAccount {
    step_events: u64,
    step_edges: u64,
    totals: ResourceAccount,
    max_bytes_per_step: u64,
}

impl LiveAccount {
    pub fn record_event(&mut self) {
        self.step_events += 1;
    }

    pub fn record_edge(&mut self) {
        self.step_edges += 1;
    }

    pub fn step_bytes(&self) -> u64 {
        EVENT_RECORD_BYTES * self.step_events + EDGE_RECORD_BYTES * self.step_edges
    }

    pub fn step_events(&self) -> u64 {
        self.step_events
    }

    /// Closes the current step and returns its account.
    pub fn close_step(&mut self) -> ResourceAccount {
        let bytes = self.step_bytes();
        self.totals.total_bytes += bytes;
        self.totals.events_count += self.step_events;
        self.totals.edges_count += self.step_edges;
        self.totals.bytes_per_step = bytes;
        self.max_bytes_per_step = self.max_bytes_per_step.max(bytes);
        self.step_events = 0;
        self.step_edges = 0;
        self.totals
    }

    pub fn totals(&self) -> ResourceAccount {
        self.totals
    }

    pub fn max_bytes_per_step(&self) -> u64 {
        self.max_bytes_per_step
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_deployment_bound() {
        let acc = account_resources(100, 8, 8, 1);
        assert_eq!(acc.bytes_per_step, 6048);
    }

    #[test]
    fn zero_agents_keeps_edge_budget() {
        assert_eq!(account_resources(0, 8, 8, 1).bytes_per_step, 2048);
    }

    #[test]
    fn million_step_total() {
        let acc = account_resources(100, 8, 8, 1_000_000);
        assert_eq!(acc.total_bytes, 6_048_000_000);
    }

    #[test]
    fn live_counts() {
        let mut live = LiveAccount::default();
        for _ in 0..3 {
            live.record_event();
        }
        live.record_edge();
        let acc = live.close_step();
        assert_eq!(acc.bytes_per_step, 3 * 40 + 32);
        live.record_event();
        let acc = live.close_step();
        assert_eq!(acc.bytes_per_step, 40);
        assert_eq!(acc.total_bytes, 192);
        assert_eq!(live.max_bytes_per_step(), 152);
    }
}
