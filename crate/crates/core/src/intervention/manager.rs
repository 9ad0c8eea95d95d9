//! The supervisor: issues interventions, turns the active set into
//! per-step controls, expires them and keeps the cost and compromise tallies.

use serde::{Deserialize, Serialize};

use crate::attribution::WindowedScores;
use crate::detection::DEFAULT_GLOBAL_BUDGET;
use crate::environment::{Graph, StepControls};
use crate::error::Result;
use crate::hash::HashAlgorithm;
use crate::ledger::Event;

use super::bounds::{cost_bound, DEFAULT_PATCH_COST, DEFAULT_THROTTLE_COST};
use super::failsafe::{CompromiseLedger, Failsafe, DEFAULT_MA_WINDOW};
use super::playbook::{plan_intervention, Alarm, EscalationState, Intervention, InterventionKind, PlaybookParams};
use super::throttle::ThrottleBook;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupervisorConfig {
    pub playbook: PlaybookParams,
    pub patch_cost: f64,
    pub throttle_cost: f64,
    /// Alarm rate used in the analytic cost bound.
    pub alarm_rate: f64,
    pub ma_window: usize,
    pub failsafe: bool,
}

impl SupervisorConfig {
    pub fn new(playbook: PlaybookParams) -> Self {
        SupervisorConfig {
            playbook,
            patch_cost: DEFAULT_PATCH_COST,
            throttle_cost: DEFAULT_THROTTLE_COST,
            alarm_rate: DEFAULT_GLOBAL_BUDGET,
            ma_window: DEFAULT_MA_WINDOW,
            failsafe: true,
        }
    }

    pub fn cost_bound(&self) -> f64 {
        cost_bound(self.playbook.lambda(), self.alarm_rate, self.patch_cost, self.throttle_cost)
    }
}

/// Issued-intervention counts by tier.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierCounts {
    pub reward_shaping: u64,
    pub policy_patch: u64,
    pub link_throttle: u64,
}

impl TierCounts {
    fn bump(&mut self, kind: InterventionKind) {
        match kind {
            InterventionKind::RewardShaping => self.reward_shaping += 1,
            InterventionKind::PolicyPatch => self.policy_patch += 1,
            InterventionKind::LinkThrottle => self.link_throttle += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.reward_shaping + self.policy_patch + self.link_throttle
    }
}

/// Running supervisory spend.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostTally {
    pub total: f64,
    pub steps: u64,
    /// Largest running mean seen so far.
    pub max_running_mean: f64,
    /// Steps whose running mean exceeded the analytic bound.
    pub exceedances: u64,
}

impl CostTally {
    pub fn mean(&self) -> f64 {
        if self.steps == 0 { 0.0 } else { self.total / self.steps as f64 }
    }
}

#[derive(Debug, Clone)]
pub struct Supervisor {
    config: SupervisorConfig,
    active: Vec<(u64, Intervention)>,
    next_id: u64,
    escalation: EscalationState,
    failsafe: Failsafe,
    compromise: CompromiseLedger,
    throttles: ThrottleBook,
    issued: Vec<Intervention>,
    counts: TierCounts,
    cost: CostTally,
    pending_cost: f64,
}

impl Supervisor {
    pub fn new(config: SupervisorConfig) -> Self {
        Supervisor {
            compromise: CompromiseLedger::new(config.ma_window),
            config,
            active: Vec::new(),
            next_id: 0,
            escalation: EscalationState::default(),
            failsafe: Failsafe::default(),
            throttles: ThrottleBook::default(),
            issued: Vec::new(),
            counts: TierCounts::default(),
            cost: CostTally::default(),
            pending_cost: 0.0,
        }
    }

    pub fn config(&self) -> &SupervisorConfig {
        &self.config
    }

    /// Plans and installs an intervention for `alarm`.
    pub fn issue(&mut self, alarm: &Alarm, scores: &WindowedScores, graph: &mut Graph) -> Result<Intervention> {
        let iv = plan_intervention(alarm, scores, &self.escalation, &self.config.playbook)?;
        let id = self.next_id;
        self.next_id += 1;
        for &i in &iv.targets {
            self.escalation.record_penalty(i, alarm.step);
        }
        match iv.kind {
            InterventionKind::RewardShaping => {}
            InterventionKind::PolicyPatch => self.pending_cost += self.config.patch_cost,
            InterventionKind::LinkThrottle => {
                self.pending_cost += self.config.throttle_cost;
                self.throttles.apply(id, graph, &iv.targets, &iv.weights)?;
            }
        }
        self.counts.bump(iv.kind);
        self.active.push((id, iv.clone()));
        self.issued.push(iv.clone());
        Ok(iv)
    }

    /// Controls for step `t` from every intervention active at `t`.
    pub fn controls(&self, t: u32, n_agents: usize) -> StepControls {
        let mut c = StepControls::none(n_agents);
        for (_, iv) in self.active.iter().filter(|(_, iv)| iv.is_active(t)) {
            for (&i, &w) in iv.targets.iter().zip(&iv.weights) {
                if i >= n_agents {
                    continue;
                }
                c.targeted[i] = true;
                match iv.kind {
                    InterventionKind::RewardShaping => c.shaping[i] += iv.lambda * w,
                    InterventionKind::PolicyPatch => {
                        c.patch_cap[i] = Some(c.patch_cap[i].map_or(iv.patch_cap, |p| p.min(iv.patch_cap)));
                    }
                    InterventionKind::LinkThrottle => {}
                }
            }
        }
        if self.config.failsafe {
            c.learning = self.failsafe.learning_mode();
        }
        c
    }

    /// Closes step `t`: tallies cost, records the compromise indicator,
    /// updates the failsafe and expires interventions whose window ended.
    pub fn end_step(&mut self, t: u32, alert: bool, violation: bool, shaping_mass: f64, graph: &mut Graph) -> Result<()> {
        self.cost.total += shaping_mass + self.pending_cost;
        self.cost.steps += 1;
        self.pending_cost = 0.0;
        let mean = self.cost.mean();
        self.cost.max_running_mean = self.cost.max_running_mean.max(mean);
        if mean > self.config.cost_bound() {
            self.cost.exceedances += 1;
        }
        self.compromise.record(violation);
        self.failsafe.update(t, alert, &self.compromise);
        let (expired, kept): (Vec<_>, Vec<_>) = std::mem::take(&mut self.active)
            .into_iter()
            .partition(|(_, iv)| iv.last_step() <= t);
        self.active = kept;
        for (id, iv) in expired {
            if iv.kind == InterventionKind::LinkThrottle {
                self.throttles.release(id, graph)?;
            }
        }
        Ok(())
    }

    pub fn active(&self) -> impl Iterator<Item = &Intervention> {
        self.active.iter().map(|(_, iv)| iv)
    }

    pub fn issued(&self) -> &[Intervention] {
        &self.issued
    }

    pub fn counts(&self) -> TierCounts {
        self.counts
    }

    pub fn cost(&self) -> CostTally {
        self.cost
    }

    pub fn compromise(&self) -> &CompromiseLedger {
        &self.compromise
    }

    pub fn failsafe(&self) -> &Failsafe {
        &self.failsafe
    }

    pub fn throttles(&self) -> &ThrottleBook {
        &self.throttles
    }
}

/// Ledger record for an issued intervention: the rationale (norm id and
/// statistic) as observation payload, the log line as action payload.
pub fn audit_event(alg: HashAlgorithm, supervisor: u16, iv: &Intervention) -> Event {
    let mut rationale = Vec::with_capacity(16);
    rationale.extend_from_slice(&(iv.norm_id as u64).to_le_bytes());
    rationale.extend_from_slice(&iv.statistic.to_le_bytes());
    Event::new(alg, iv.issued_at, supervisor, &rationale, iv.log_line().as_bytes(), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::NormKind;

    fn sup() -> Supervisor {
        Supervisor::new(SupervisorConfig::new(PlaybookParams {
            k: 2,
            window: 25,
            c_max: 5.0,
            patch_cap: 50.0,
        }))
    }

    fn scores(v: &[f64], t: u32) -> WindowedScores {
        WindowedScores {
            t,
            window: 25,
            scores: v.to_vec(),
            attributed_events: 1,
        }
    }

    fn alarm(step: u32, kind: NormKind) -> Alarm {
        Alarm { step, norm_id: 0, kind, statistic: 2.0 }
    }

    #[test]
    fn shaping_window_and_mass() {
        let mut s = sup();
        let mut g = Graph::empty(3);
        let iv = s.issue(&alarm(10, NormKind::Inequity), &scores(&[2.0, 0.0, 2.0], 10), &mut g).unwrap();
        assert_eq!(iv.targets, vec![0, 2]);
        for t in 10..35 {
            let c = s.controls(t, 3);
            assert!((c.shaping[0] - 0.1).abs() < 1e-15 && c.shaping[1] == 0.0);
            s.end_step(t, false, false, c.shaping.iter().sum(), &mut g).unwrap();
        }
        assert_eq!(s.controls(35, 3).shaping, vec![0.0; 3]);
        assert_eq!(s.active().count(), 0);
        assert!(s.cost().max_running_mean <= s.config().playbook.lambda() + 1e-12);
        assert_eq!(s.cost().exceedances, 0);
    }

    #[test]
    fn recalcitrant_agent_gets_patched() {
        let mut s = sup();
        let mut g = Graph::empty(3);
        let sc = scores(&[1.0, 0.0, 0.0], 0);
        s.issue(&alarm(10, NormKind::Inequity), &sc, &mut g).unwrap();
        s.issue(&alarm(80, NormKind::Inequity), &sc, &mut g).unwrap();
        let iv = s.issue(&alarm(90, NormKind::Inequity), &sc, &mut g).unwrap();
        assert_eq!(iv.kind, InterventionKind::PolicyPatch);
        assert_eq!(s.controls(90, 3).patch_cap[0], Some(50.0));
        assert_eq!(s.counts().total(), 3);
    }

    #[test]
    fn throttle_restored_on_expiry() {
        let mut s = sup();
        let mut g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        s.issue(&alarm(5, NormKind::Collusion), &scores(&[1.0, 1.0, 0.0], 5), &mut g).unwrap();
        assert_eq!(g.weight(0, 1), 0.0);
        for t in 5..30 {
            s.end_step(t, false, false, 0.0, &mut g).unwrap();
        }
        assert_eq!(g.weight(0, 1), 1.0);
        assert!(s.throttles().is_empty());
    }

    #[test]
    fn audit_event_is_distinct_per_intervention() {
        let mut s = sup();
        let mut g = Graph::empty(2);
        let a = s.issue(&alarm(3, NormKind::Load), &scores(&[1.0, 0.0], 3), &mut g).unwrap();
        let b = s.issue(&alarm(4, NormKind::Load), &scores(&[1.0, 0.0], 4), &mut g).unwrap();
        let ea = audit_event(HashAlgorithm::Sha256, 2, &a);
        let eb = audit_event(HashAlgorithm::Sha256, 2, &b);
        assert_ne!(ea.digest(HashAlgorithm::Sha256), eb.digest(HashAlgorithm::Sha256));
        assert_eq!(ea.agent, 2);
    }
}
