//! One supervised run: world, ledger intake, causal tracking, detection and
//! interventions advanced in lockstep.

use std::collections::VecDeque;

use crate::attribution::Attributor;
use crate::causal::{CausalTracker, ThresholdSchedule, TrackerConfig};
use crate::detection::{
    cusum_step, gini, load_statistic, BudgetAllocator, CollusionMonitor, DetectorState, NormKind, NormSpec,
    TraceRecord,
};
use crate::environment::{Script, StepControls, StepOutcome, World};
use crate::error::{Error, Result};
use crate::intervention::{audit_event, Alarm, Intervention, Supervisor};
use crate::ledger::{bytes_per_step_bound, Event, EventIndex, LedgerDag, RING_CAPACITY, SNAPSHOT_INTERVAL};

use super::config::{Baseline, ExperimentConfig};
use super::metrics::MetricsRecord;

/// Monitored norms, in id order.
pub const NORMS: [NormKind; 3] = [NormKind::Inequity, NormKind::Collusion, NormKind::Load];

/// What happened in one step.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub outcome: StepOutcome,
    /// Norms whose detector fired.
    pub fired: Vec<usize>,
    pub issued: Option<Intervention>,
    pub new_edges: usize,
    pub ledger_bytes: u64,
}

#[derive(Debug, Clone)]
enum Detection {
    Warmup(Vec<Vec<f64>>),
    Live { specs: Vec<NormSpec>, states: Vec<DetectorState> },
}

/// Ledger, tracker, detectors and supervisor of an `aaf` run.
#[derive(Debug, Clone)]
struct Oversight {
    ledger: LedgerDag,
    tracker: CausalTracker,
    attributor: Attributor,
    intake: VecDeque<Event>,
    audits: Vec<Event>,
    collusion: CollusionMonitor,
    detection: Detection,
    allocator: BudgetAllocator,
    supervisor: Supervisor,
    byte_bound: u64,
}

#[derive(Debug, Clone)]
pub struct Episode {
    config: ExperimentConfig,
    seed: u64,
    world: World,
    oversight: Option<Oversight>,
    trace: Option<Vec<TraceRecord>>,
    reward_sum: f64,
    cum_alloc: Vec<f64>,
    violations: u64,
    alarms: u64,
    admitted: u64,
    untargeted: u64,
    first_alarm_after_onset: Option<u32>,
    cartel_rewards: Vec<f64>,
    cartel_hit: Option<u32>,
    bytes_total: u64,
    bytes_max: u64,
}

impl Episode {
    pub fn new(config: ExperimentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let world = World::new(config.effective_world(), config.script.clone(), seed)?;
        let n = config.world.n_agents;
        let oversight = if config.baseline == Baseline::Aaf {
            let byte_bound = bytes_per_step_bound(n as u64, config.world.d_max as u64, config.causal.lags as u64);
            let mut tc = TrackerConfig::new(ThresholdSchedule::for_alpha(config.causal.edge_alpha)?);
            tc.lags = config.causal.lags;
            tc.window = config.causal.window;
            tc.candidates = config.causal.candidates;
            tc.step_byte_budget = Some(byte_bound);
            tc.settle = config.world.max_delay + 1;
            let det = &config.detection;
            Some(Oversight {
                ledger: LedgerDag::new(config.world.hash, n),
                tracker: CausalTracker::new(tc, n),
                attributor: Attributor::new(config.causal.beta)?,
                intake: VecDeque::new(),
                audits: Vec::new(),
                collusion: CollusionMonitor::new(n, det.mi_window, det.mi_bins, config.world.q_max),
                detection: Detection::Warmup(vec![Vec::new(); NORMS.len()]),
                allocator: BudgetAllocator::new(NORMS.len(), det.global_budget, u64::from(config.steps))?,
                supervisor: Supervisor::new(config.supervisor()),
                byte_bound,
            })
        } else {
            None
        };
        Ok(Episode {
            seed,
            world,
            oversight,
            trace: None,
            reward_sum: 0.0,
            cum_alloc: vec![0.0; n],
            violations: 0,
            alarms: 0,
            admitted: 0,
            untargeted: 0,
            first_alarm_after_onset: None,
            cartel_rewards: Vec::new(),
            cartel_hit: None,
            bytes_total: 0,
            bytes_max: 0,
            config,
        })
    }

    /// Keeps every detector trace record from now on.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn ledger(&self) -> Option<&LedgerDag> {
        self.oversight.as_ref().map(|o| &o.ledger)
    }

    pub fn tracker(&self) -> Option<&CausalTracker> {
        self.oversight.as_ref().map(|o| &o.tracker)
    }

    pub fn supervisor(&self) -> Option<&Supervisor> {
        self.oversight.as_ref().map(|o| &o.supervisor)
    }

    pub fn trace(&self) -> &[TraceRecord] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn t(&self) -> u32 {
        self.world.t()
    }

    pub fn is_done(&self) -> bool {
        self.world.t() >= self.config.steps
    }

    /// Largest per-step ledger byte count allowed by the accounting bound.
    pub fn byte_bound(&self) -> Option<u64> {
        self.oversight.as_ref().map(|o| o.byte_bound)
    }

    fn onset(&self) -> Option<u32> {
        match &self.config.script {
            Some(Script::Cartel { active_from, .. }) | Some(Script::Adversary { active_from, .. }) => {
                Some(*active_from)
            }
            None => None,
        }
    }

    pub fn step(&mut self) -> Result<StepReport> {
        let n = self.config.world.n_agents;
        let t = self.world.t() + 1;
        let controls = match &self.oversight {
            Some(o) => o.supervisor.controls(t, n),
            None => StepControls::none(n),
        };
        let outcome = self.world.step(&controls);
        self.reward_sum += outcome.env_rewards.iter().sum::<f64>();
        for (c, a) in self.cum_alloc.iter_mut().zip(&outcome.allocations) {
            *c += a;
        }
        self.violations += u64::from(outcome.violation);
        let cartel = self.world.cartel();
        if !cartel.is_empty() {
            let mean = cartel.iter().map(|&i| outcome.rewards[i]).sum::<f64>() / cartel.len() as f64;
            self.cartel_rewards.push(mean);
        }

        let mut report = StepReport {
            fired: Vec::new(),
            issued: None,
            new_edges: 0,
            ledger_bytes: 0,
            outcome,
        };
        if self.oversight.is_some() {
            self.oversee(t, &mut report)?;
        }
        Ok(report)
    }

    fn oversee(&mut self, t: u32, report: &mut StepReport) -> Result<()> {
        let n = self.config.world.n_agents;
        let onset = self.onset();
        let in_neighbors = self.world.in_neighbors();
        let o = self.oversight.as_mut().expect("oversight present");
        let outcome = &report.outcome;

        // Intake: supervisor records first, then agent records, N per step.
        o.intake.extend(outcome.delivered.iter().copied());
        let mut budget = n.max(1);
        for e in o.audits.drain(..) {
            o.ledger.commit(e);
            budget = budget.saturating_sub(1);
        }
        let mut fresh: Vec<EventIndex> = Vec::with_capacity(budget);
        while budget > 0 {
            let Some(e) = o.intake.pop_front() else { break };
            if let Some(idx) = o.ledger.commit(e) {
                fresh.push(idx);
            }
            budget -= 1;
        }
        report.new_edges = o.tracker.process_step(&mut o.ledger, u64::from(t), &fresh, &in_neighbors)?.len();
        if t % SNAPSHOT_INTERVAL == 0 {
            o.ledger.seal_snapshot(t)?;
        }
        let account = o.ledger.close_step();
        report.ledger_bytes = account.bytes_per_step;
        self.bytes_total += account.bytes_per_step;
        self.bytes_max = self.bytes_max.max(account.bytes_per_step);

        let det = &self.config.detection;
        let capacity = det.load_capacity.unwrap_or(self.config.world.r_max);
        let z = [
            gini(&outcome.allocations),
            o.collusion.push(&outcome.requests),
            load_statistic(outcome.queue_length, capacity),
        ];
        let mut fired = Vec::new();
        match &mut o.detection {
            Detection::Warmup(samples) => {
                for (s, &v) in samples.iter_mut().zip(&z) {
                    s.push(v);
                }
                if t >= det.warmup {
                    let mut specs = Vec::with_capacity(NORMS.len());
                    for (id, (kind, s)) in NORMS.iter().zip(samples.iter()).enumerate() {
                        specs.push(NormSpec::calibrate(id, *kind, s, det.norm_alpha)?);
                    }
                    let states = vec![DetectorState::new(det.initial_threshold)?; NORMS.len()];
                    o.detection = Detection::Live { specs, states };
                }
            }
            Detection::Live { specs, states } => {
                for ((spec, state), &v) in specs.iter().zip(states.iter_mut()).zip(&z) {
                    let mut rec = cusum_step(state, v, spec);
                    if rec.alert {
                        fired.push(spec.id);
                    }
                    if let Some(trace) = self.trace.as_mut() {
                        rec.t = u64::from(t);
                        trace.push(rec);
                    }
                }
                let allocation = o.allocator.allocate_alert(&fired)?;
                for &(m, b) in &allocation.bumps {
                    states[m].bump(b);
                }
                if !fired.is_empty() {
                    self.alarms += 1;
                    if onset.is_some_and(|s| t >= s) && self.first_alarm_after_onset.is_none() {
                        self.first_alarm_after_onset = Some(t);
                    }
                }
                if let (true, Some(w)) = (allocation.admitted, allocation.winner) {
                    self.admitted += 1;
                    let alarm = Alarm {
                        step: t,
                        norm_id: w,
                        kind: specs[w].kind,
                        statistic: z[w],
                    };
                    let scores = o.attributor.windowed(&o.ledger, t, self.config.intervention.window)?;
                    match o.supervisor.issue(&alarm, &scores, self.world.graph_mut()) {
                        Ok(iv) => {
                            o.audits.push(audit_event(self.config.world.hash, o.ledger.supervisor_id(), &iv));
                            if self.cartel_hit.is_none() && iv.targets.iter().any(|i| self.world.cartel().contains(i)) {
                                self.cartel_hit = Some(t);
                            }
                            report.issued = Some(iv);
                        }
                        Err(Error::NoTarget) => self.untargeted += 1,
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        o.supervisor
            .end_step(t, !fired.is_empty(), outcome.violation, outcome.shaping_total, self.world.graph_mut())?;
        if t % RING_CAPACITY as u32 == 0 {
            o.attributor.prune_before(&o.ledger, t.saturating_sub(2 * RING_CAPACITY as u32));
        }
        report.fired = fired;
        Ok(())
    }

    /// Runs the remaining steps.
    pub fn run(mut self) -> Result<MetricsRecord> {
        while !self.is_done() {
            self.step()?;
        }
        Ok(self.finish())
    }

    pub fn finish(self) -> MetricsRecord {
        let steps = self.world.t();
        let n = self.config.world.n_agents;
        let per = |x: f64, d: f64| if d > 0.0 { x / d } else { 0.0 };
        let window = self.config.intervention.window as usize;
        let onset = self.onset().map_or(0, |s| (s as usize).saturating_sub(1));
        let cartel_gain = self.cartel_hit.map(|hit| {
            let hit = hit as usize - 1;
            let before = &self.cartel_rewards[hit.saturating_sub(window).max(onset).min(hit)..hit];
            let after = &self.cartel_rewards[hit..(hit + window).min(self.cartel_rewards.len())];
            let mean = |s: &[f64]| per(s.iter().sum(), s.len() as f64);
            (mean(before), mean(after))
        });
        let detection_delay = match (self.onset(), self.first_alarm_after_onset) {
            (Some(s), Some(a)) => Some(a - s),
            _ => None,
        };
        let (ledger_events, ledger_edges, ledger_root, interventions, cost_mean, cost_bound, failsafe_raised, log, bound) =
            match &self.oversight {
                Some(o) => (
                    o.ledger.len() as u64,
                    o.ledger.edge_count() as u64,
                    o.ledger.root().iter().map(|b| format!("{b:02x}")).collect(),
                    o.supervisor.counts(),
                    o.supervisor.cost().mean(),
                    o.supervisor.config().cost_bound(),
                    o.supervisor.failsafe().raised_at().len() as u32,
                    o.supervisor.issued().iter().map(Intervention::log_line).collect(),
                    o.byte_bound,
                ),
                None => Default::default(),
            };
        MetricsRecord {
            seed: self.seed,
            config_hash: self.config.hash(),
            steps,
            avg_reward: per(self.reward_sum, f64::from(steps) * n as f64),
            final_gini: gini(&self.cum_alloc),
            compromise_ratio: per(self.violations as f64, f64::from(steps)),
            detection_delay,
            alarms: self.alarms,
            admitted_alarms: self.admitted,
            untargeted_alarms: self.untargeted,
            bytes_per_step_mean: per(self.bytes_total as f64, f64::from(steps)),
            bytes_per_step_max: self.bytes_max,
            byte_bound: bound,
            ledger_events,
            ledger_edges,
            ledger_root,
            interventions,
            cost_mean,
            cost_bound,
            failsafe_raised,
            cartel_gain,
            intervention_log: log,
            config: ExperimentConfig {
                seeds: vec![self.seed],
                ..self.config
            },
        }
    }
}

/// Validates, runs and summarises one `(config, seed)` pair.
pub fn run_episode(config: &ExperimentConfig, seed: u64) -> Result<MetricsRecord> {
    Episode::new(config.clone(), seed)?.run()
}
