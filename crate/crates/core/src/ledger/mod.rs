//! Tamper-evident audit ledger: events, causal edges, Merkle commitments and
//! sealed snapshots.

mod accounting;
mod event;
mod merkle;
mod ring;
mod snapshot;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::ops::RangeInclusive;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use accounting::{
    account_resources, bytes_per_step_bound, LiveAccount, ResourceAccount, EDGE_RECORD_BYTES,
    EVENT_RECORD_BYTES,
};
pub use event::{Event, EventId, EVENT_BYTES, REWARD_SCALE};
pub use merkle::{
    empty_root, leaf_hash, node_hash, verify_inclusion, Digest16, Hash32, InclusionProof,
    MerkleLog,
};
pub use ring::{RingBuffer, RING_CAPACITY};
pub use snapshot::{export, import, MerkleSnapshot, FORMAT_VERSION, MAGIC};

use crate::error::{Error, Result};
use crate::hash::HashAlgorithm;

/// Steps between sealed snapshots.
pub const SNAPSHOT_INTERVAL: u32 = 256;

/// Dense index of an event inside a [`LedgerDag`].
pub type EventIndex = usize;

/// Directed causal claim `source -> target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CausalEdge {
    pub source: EventId,
    pub target: EventId,
    pub f_stat: f64,
    pub inserted_at: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct EdgeRecord {
    source: EventIndex,
    target: EventIndex,
    f_stat: f64,
    inserted_at: u32,
}

/// Append-only event DAG with per-agent ring buffers and a Merkle commitment
/// over event digests.
#[derive(Debug, Clone)]
pub struct LedgerDag {
    alg: HashAlgorithm,
    agents: usize,
    events: Vec<Event>,
    ids: Vec<EventId>,
    by_digest: HashMap<Digest16, EventIndex>,
    by_id: HashMap<EventId, EventIndex>,
    by_step: BTreeMap<u32, Vec<EventIndex>>,
    edges: Vec<EdgeRecord>,
    edge_set: HashSet<(EventIndex, EventIndex)>,
    in_edges: Vec<Vec<usize>>,
    rings: Vec<RingBuffer<EventIndex>>,
    merkle: MerkleLog,
    snapshots: Vec<MerkleSnapshot>,
    live: LiveAccount,
}

impl LedgerDag {
    pub fn new(alg: HashAlgorithm, n_agents: usize) -> Self {
        LedgerDag {
            alg,
            agents: n_agents,
            events: Vec::new(),
            ids: Vec::new(),
            by_digest: HashMap::new(),
            by_id: HashMap::new(),
            by_step: BTreeMap::new(),
            edges: Vec::new(),
            edge_set: HashSet::new(),
            in_edges: Vec::new(),
            rings: (0..n_agents).map(|_| RingBuffer::default()).collect(),
            merkle: MerkleLog::new(alg),
            snapshots: Vec::new(),
            live: LiveAccount::default(),
        }
    }

    pub fn algorithm(&self) -> HashAlgorithm {
        self.alg
    }

    pub fn n_agents(&self) -> usize {
        self.agents
    }

    /// Author id for supervisor records; one past the last agent.
    pub fn supervisor_id(&self) -> u16 {
        self.agents as u16
    }

    /// Commits an event: ring append, vertex insert, Merkle insert. Returns
    /// `None` when the same record was already committed (redelivery).
    pub fn commit(&mut self, event: Event) -> Option<EventIndex> {
        let digest = event.digest(self.alg);
        if self.by_digest.contains_key(&digest) {
            return None;
        }
        let agent = event.agent as usize;
        if agent >= self.rings.len() {
            self.rings.resize_with(agent + 1, RingBuffer::default);
        }
        let idx = self.events.len();
        let id = event.id(self.alg);
        self.events.push(event);
        self.ids.push(id);
        self.by_digest.insert(digest, idx);
        self.by_id.insert(id, idx);
        self.by_step.entry(self.events[idx].step).or_default().push(idx);
        self.in_edges.push(Vec::new());
        self.rings[agent].push(idx);
        self.merkle.insert(digest);
        self.live.record_event();
        Some(idx)
    }

    /// Inserts `source -> target`. Edges must point forward in time; a
    /// repeated edge is ignored and reported as `Ok(false)`.
    pub fn insert_edge(
        &mut self,
        source: EventIndex,
        target: EventIndex,
        f_stat: f64,
        inserted_at: u32,
    ) -> Result<bool> {
        let (s, t) = (self.event(source)?, self.event(target)?);
        if s.step >= t.step {
            return Err(Error::Precondition(format!(
                "edge must point forward in time (source step {} >= target step {})",
                s.step, t.step
            )));
        }
        if !self.edge_set.insert((source, target)) {
            return Ok(false);
        }
        self.in_edges[target].push(self.edges.len());
        self.edges.push(EdgeRecord {
            source,
            target,
            f_stat,
            inserted_at,
        });
        self.live.record_edge();
        Ok(true)
    }

    pub fn event(&self, idx: EventIndex) -> Result<&Event> {
        self.events
            .get(idx)
            .ok_or_else(|| Error::InvalidArgument(format!("no event at index {idx}")))
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn event_id(&self, idx: EventIndex) -> EventId {
        self.ids[idx]
    }

    pub fn index_of(&self, id: EventId) -> Option<EventIndex> {
        self.by_id.get(&id).copied()
    }

    /// Events whose step lies in `steps`, by step then commit order.
    pub fn events_in_steps(&self, steps: RangeInclusive<u32>) -> impl Iterator<Item = EventIndex> + '_ {
        self.by_step.range(steps).flat_map(|(_, v)| v.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sources of all edges into `target`, in insertion order.
    pub fn parents(&self, target: EventIndex) -> impl Iterator<Item = EventIndex> + '_ {
        self.in_edges[target].iter().map(move |&e| self.edges[e].source)
    }

    pub fn edges(&self) -> impl Iterator<Item = CausalEdge> + '_ {
        self.edges.iter().map(move |e| CausalEdge {
            source: self.ids[e.source],
            target: self.ids[e.target],
            f_stat: e.f_stat,
            inserted_at: e.inserted_at,
        })
    }

    pub fn edge_pairs(&self) -> impl Iterator<Item = (EventIndex, EventIndex)> + '_ {
        self.edges.iter().map(|e| (e.source, e.target))
    }

    pub fn ring(&self, agent: usize) -> Option<&RingBuffer<EventIndex>> {
        self.rings.get(agent)
    }

    pub fn merkle(&self) -> &MerkleLog {
        &self.merkle
    }

    pub fn root(&self) -> Hash32 {
        self.merkle.root()
    }

    pub fn prove(&self, event: &Event) -> Result<InclusionProof> {
        self.merkle.prove(&event.digest(self.alg))
    }

    /// Proof against a sealed snapshot's root.
    pub fn prove_at(&self, event: &Event, snapshot: &MerkleSnapshot) -> Result<InclusionProof> {
        self.merkle
            .prove_at(&event.digest(self.alg), snapshot.leaf_count as usize)
    }

    pub fn verify(&self, root: &Hash32, proof: &InclusionProof, event: &Event) -> bool {
        verify_inclusion(self.alg, root, proof, &event.digest(self.alg))
    }

    /// Seals a snapshot. Only allowed on multiples of [`SNAPSHOT_INTERVAL`]
    /// and strictly after the previous seal.
    pub fn seal_snapshot(&mut self, step: u32) -> Result<MerkleSnapshot> {
        if step % SNAPSHOT_INTERVAL != 0 {
            return Err(Error::Precondition(format!(
                "snapshots are sealed every {SNAPSHOT_INTERVAL} steps, got step {step}"
            )));
        }
        if let Some(last) = self.snapshots.last() {
            if step <= last.step_sealed {
                return Err(Error::Precondition(format!(
                    "step {step} is not after the last sealed step {}",
                    last.step_sealed
                )));
            }
        }
        let snap = MerkleSnapshot {
            root: self.merkle.root(),
            step_sealed: step,
            leaf_count: self.merkle.len() as u64,
        };
        self.snapshots.push(snap);
        Ok(snap)
    }

    pub fn snapshots(&self) -> &[MerkleSnapshot] {
        &self.snapshots
    }

    pub fn export_snapshot(&self, snapshot: Option<&MerkleSnapshot>) -> Vec<u8> {
        let size = snapshot.map_or(self.merkle.len(), |s| s.leaf_count as usize);
        export(&self.merkle, size)
    }

    /// Edge dump, one `source_id,target_id,f_stat,step` line per edge.
    pub fn edge_dump(&self) -> String {
        let mut out = String::new();
        for e in self.edges() {
            let _ = writeln!(out, "{},{},{},{}", e.source, e.target, e.f_stat, e.inserted_at);
        }
        out
    }

    pub fn live_account(&self) -> &LiveAccount {
        &self.live
    }

    /// Bytes committed so far in the step in progress.
    pub fn pending_step_bytes(&self) -> u64 {
        self.live.step_bytes()
    }

    pub fn close_step(&mut self) -> ResourceAccount {
        self.live.close_step()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALG: HashAlgorithm = HashAlgorithm::Sha256;

    fn ev(step: u32, agent: u16, r: f64) -> Event {
        Event::new(ALG, step, agent, &step.to_le_bytes(), &[agent as u8], r)
    }

    #[test]
    fn commit_and_prove() {
        let mut dag = LedgerDag::new(ALG, 2);
        let e = ev(1, 0, 1.0);
        dag.commit(e).unwrap();
        let p = dag.prove(&e).unwrap();
        assert!(dag.verify(&dag.root(), &p, &e));
        assert!(dag.commit(e).is_none());
        assert_eq!(dag.len(), 1);
    }

    #[test]
    fn backward_edges_rejected() {
        let mut dag = LedgerDag::new(ALG, 2);
        let a = dag.commit(ev(1, 0, 1.0)).unwrap();
        let b = dag.commit(ev(2, 1, 1.0)).unwrap();
        let c = dag.commit(ev(2, 0, 1.0)).unwrap();
        assert!(dag.insert_edge(b, a, 1.0, 2).is_err());
        assert!(dag.insert_edge(b, c, 1.0, 2).is_err());
        assert!(dag.insert_edge(a, b, 9.0, 2).unwrap());
        assert!(!dag.insert_edge(a, b, 9.0, 2).unwrap());
        assert_eq!(dag.parents(b).collect::<Vec<_>>(), vec![a]);
        let dump = dag.edge_dump();
        assert_eq!(dump.lines().count(), 1);
        assert!(dump.ends_with(",9,2\n"));
    }

    #[test]
    fn snapshot_schedule() {
        let mut dag = LedgerDag::new(ALG, 1);
        assert!(dag.seal_snapshot(100).is_err());
        let s1 = dag.seal_snapshot(256).unwrap();
        assert_eq!(s1.root, empty_root(ALG));
        assert_eq!(s1.leaf_count, 0);
        let s2 = dag.seal_snapshot(512).unwrap();
        assert_eq!(s1.root, s2.root);
        for t in 513..520 {
            dag.commit(ev(t, 0, 0.5));
        }
        let s3 = dag.seal_snapshot(768).unwrap();
        assert_eq!(s3.leaf_count, 7);
        assert_ne!(s3.root, s2.root);
        assert!(dag.seal_snapshot(768).is_err());
    }

    #[test]
    fn proof_against_older_snapshot_fails() {
        let mut dag = LedgerDag::new(ALG, 1);
        dag.commit(ev(1, 0, 0.0));
        let s1 = dag.seal_snapshot(256).unwrap();
        let late = ev(300, 0, 0.0);
        dag.commit(late);
        let s2 = dag.seal_snapshot(512).unwrap();
        let p = dag.prove_at(&late, &s2).unwrap();
        assert!(dag.verify(&s2.root, &p, &late));
        assert!(!dag.verify(&s1.root, &p, &late));
        assert!(dag.prove_at(&late, &s1).is_err());
    }

    #[test]
    fn ring_tracks_agent_events() {
        let mut dag = LedgerDag::new(ALG, 1);
        for t in 0..300 {
            dag.commit(ev(t, 0, 0.0));
        }
        let ring = dag.ring(0).unwrap();
        assert_eq!(ring.len(), 256);
        assert_eq!(dag.event(*ring.oldest().unwrap()).unwrap().step, 44);
    }

    #[test]
    fn live_accounting_counts_bytes() {
        let mut dag = LedgerDag::new(ALG, 2);
        let a = dag.commit(ev(1, 0, 0.0)).unwrap();
        dag.close_step();
        let b = dag.commit(ev(2, 1, 0.0)).unwrap();
        dag.insert_edge(a, b, 5.0, 2).unwrap();
        let acc = dag.close_step();
        assert_eq!(acc.bytes_per_step, 72);
        assert_eq!(acc.total_bytes, 112);
    }
}
