//! The resource game: configuration, state and the per-step transition.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::allocation::{allocate, is_greedy, reward, DEFAULT_R_MAX, DEFAULT_SOCIAL_WEIGHT, GREED_FRACTION};
use super::channel::{Channel, DelayModel};
use super::graph::Graph;
use super::observe::observe;
use super::policy::{AgentPolicy, LearningMode, PolicyKind};
use crate::error::Result;
use crate::hash::HashAlgorithm;
use crate::ledger::Event;

// Independent random streams derived from the run seed.
const STREAM_OBSERVE: u64 = 1;
const STREAM_CHANNEL: u64 = 2;
const STREAM_SCRIPT: u64 = 3;
const STREAM_SETUP: u64 = 4;
const STREAM_AGENT_BASE: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub n_agents: usize,
    pub r_max: f64,
    pub r_in: f64,
    pub q_max: f64,
    pub alpha_dist: f64,
    pub penalty_factor: f64,
    pub social_weight: f64,
    pub partial_obs: bool,
    pub graph_k: usize,
    pub p_rewire: f64,
    pub d_max: usize,
    pub loss: f64,
    pub max_delay: u32,
    pub delay_model: DelayModel,
    pub byzantine_fraction: f64,
    pub honest_policy: PolicyKind,
    /// Off makes every learner act greedily.
    pub exploration: bool,
    /// Static-guard ceiling; defaults to `0.6 R_max`.
    pub guard_cap: Option<f64>,
    /// Observation noise; defaults to `0.05 R_max`.
    pub obs_noise: Option<f64>,
    pub hash: HashAlgorithm,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            n_agents: 10,
            r_max: DEFAULT_R_MAX,
            r_in: DEFAULT_R_MAX,
            q_max: DEFAULT_R_MAX,
            alpha_dist: 1.0,
            penalty_factor: 0.05,
            social_weight: DEFAULT_SOCIAL_WEIGHT,
            partial_obs: true,
            graph_k: 4,
            p_rewire: 0.1,
            d_max: 8,
            loss: 0.1,
            max_delay: 3,
            delay_model: DelayModel::Uniform,
            byzantine_fraction: 0.0,
            honest_policy: PolicyKind::Learner,
            exploration: true,
            guard_cap: None,
            obs_noise: None,
            hash: HashAlgorithm::Sha256,
        }
    }
}

impl WorldConfig {
    pub fn guard_cap(&self) -> f64 {
        self.guard_cap.unwrap_or(GREED_FRACTION * self.r_max)
    }

    pub fn obs_noise(&self) -> f64 {
        self.obs_noise.unwrap_or(0.05 * self.r_max)
    }

    pub fn byzantine_count(&self) -> usize {
        (self.byzantine_fraction * self.n_agents as f64).round() as usize
    }
}

/// Scripted behaviour layered over the policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Script {
    /// A leader broadcasts a high request level to its cartel partners, who
    /// copy the last level received. Requests are drawn from
    /// `[low, high] * R_max`. The whole cartel stands down while any member
    /// is targeted by an active intervention; a muted link stops the
    /// broadcast from arriving.
    Cartel {
        size: usize,
        active_from: u32,
        low: f64,
        high: f64,
    },
    /// Requests `q_max` every step from `active_from` on unless targeted.
    /// Each violation yields a private gain uniform on `[0, 2 g_max]`, and
    /// each graph neighbour loses `harm` times that gain one step later.
    Adversary {
        agent: usize,
        active_from: u32,
        g_max: f64,
        harm: f64,
    },
}

/// Supervisor inputs for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepControls {
    /// Reward deduction per agent.
    pub shaping: Vec<f64>,
    pub patch_cap: Vec<Option<f64>>,
    /// Agents named by any active intervention.
    pub targeted: Vec<bool>,
    pub learning: LearningMode,
}

impl StepControls {
    pub fn none(n: usize) -> Self {
        StepControls {
            shaping: vec![0.0; n],
            patch_cap: vec![None; n],
            targeted: vec![false; n],
            learning: LearningMode::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub t: u32,
    pub requests: Vec<f64>,
    pub allocations: Vec<f64>,
    pub private_rewards: Vec<f64>,
    /// `r_total` before shaping.
    pub env_rewards: Vec<f64>,
    /// Rewards after shaping; what the learners see and the ledger records.
    pub rewards: Vec<f64>,
    pub shaping_total: f64,
    /// Ledger records that arrived this step.
    pub delivered: Vec<Event>,
    /// Some request met the greed predicate.
    pub violation: bool,
    pub queue_length: f64,
    /// Agents whose request came from a script this step.
    pub scripted: Vec<bool>,
    /// Gain credited to the scripted adversary this step.
    pub adversary_gain: f64,
}

#[derive(Debug, Clone)]
pub struct World {
    config: WorldConfig,
    script: Option<Script>,
    t: u32,
    pool: f64,
    graph: Graph,
    policies: Vec<AgentPolicy>,
    last_alloc: Vec<f64>,
    last_requests: Vec<f64>,
    ledger_channel: Channel<Event>,
    signal_channel: Channel<f64>,
    agent_rngs: Vec<ChaCha8Rng>,
    observe_rng: ChaCha8Rng,
    channel_rng: ChaCha8Rng,
    script_rng: ChaCha8Rng,
    cartel: Vec<usize>,
    received: Vec<Option<(u32, f64)>>,
    pending_harm: f64,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl World {
    pub fn new(config: WorldConfig, script: Option<Script>, seed: u64) -> Result<Self> {
        let n = config.n_agents;
        let graph = if n > config.graph_k {
            Graph::watts_strogatz(n, config.graph_k, config.p_rewire, seed)?
        } else {
            Graph::empty(n)
        };
        let mut setup = stream(seed, STREAM_SETUP);
        let byz = config.byzantine_count().min(n);
        let byzantine: Vec<usize> = if byz > 0 {
            let mut v = sample(&mut setup, n, byz).into_vec();
            v.sort_unstable();
            v
        } else {
            Vec::new()
        };
        let mut policies = Vec::with_capacity(n);
        for i in 0..n {
            let kind = if byzantine.binary_search(&i).is_ok() {
                PolicyKind::Byzantine
            } else {
                config.honest_policy
            };
            let mut p = AgentPolicy::new(kind, config.q_max, config.r_max);
            p.set_guard_cap(config.guard_cap());
            if !config.exploration {
                p.disable_exploration();
            }
            policies.push(p);
        }
        let cartel = match &script {
            Some(Script::Cartel { size, .. }) => pick_cartel(&graph, *size),
            _ => Vec::new(),
        };
        Ok(World {
            t: 0,
            pool: config.r_max,
            graph,
            policies,
            last_alloc: vec![0.0; n],
            last_requests: vec![0.0; n],
            ledger_channel: Channel::new(config.loss, config.max_delay, config.delay_model),
            signal_channel: Channel::new(config.loss, config.max_delay, config.delay_model),
            agent_rngs: (0..n as u64).map(|i| stream(seed, STREAM_AGENT_BASE + i)).collect(),
            observe_rng: stream(seed, STREAM_OBSERVE),
            channel_rng: stream(seed, STREAM_CHANNEL),
            script_rng: stream(seed, STREAM_SCRIPT),
            received: vec![None; n],
            cartel,
            pending_harm: 0.0,
            config,
            script,
        })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn pool(&self) -> f64 {
        self.pool
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn graph_mut(&mut self) -> &mut Graph {
        &mut self.graph
    }

    pub fn policies(&self) -> &[AgentPolicy] {
        &self.policies
    }

    pub fn script(&self) -> Option<&Script> {
        self.script.as_ref()
    }

    /// Leader first, then partners; empty without a cartel script.
    pub fn cartel(&self) -> &[usize] {
        &self.cartel
    }

    pub fn byzantine_agents(&self) -> Vec<usize> {
        (0..self.policies.len())
            .filter(|&i| self.policies[i].kind == PolicyKind::Byzantine)
            .collect()
    }

    /// In-neighbour lists over links with positive weight.
    pub fn in_neighbors(&self) -> Vec<Vec<usize>> {
        (0..self.graph.len()).map(|i| self.graph.in_neighbors(i)).collect()
    }

    /// Advances one step in the fixed order: deliver, observe, act, allocate,
    /// reward, shape, learn, emit records, replenish.
    pub fn step(&mut self, controls: &StepControls) -> StepOutcome {
        self.t += 1;
        let t = self.t;
        let n = self.config.n_agents;
        let cfg = &self.config;

        // messages sent in earlier steps whose delay has elapsed
        let delivered: Vec<Event> = self.ledger_channel.deliver(t - 1).into_iter().map(|(_, e)| e).collect();
        for (member, level) in self.signal_channel.deliver(t - 1) {
            self.received[member] = Some((t, level));
        }

        let queue_prev: f64 = self.last_requests.iter().sum();
        let sigma = cfg.obs_noise();
        let observations: Vec<Vec<u8>> = (0..n)
            .map(|i| {
                observe(&self.graph, i, &self.last_alloc, queue_prev, cfg.partial_obs, sigma, &mut self.observe_rng)
                    .to_bytes()
            })
            .collect();

        let mut requests: Vec<f64> = (0..n).map(|i| self.policies[i].act(&mut self.agent_rngs[i])).collect();
        let mut scripted = vec![false; n];
        let mut leader_level = None;
        let mut adversary_violating = false;
        let targeted = |i: usize| controls.targeted.get(i).copied().unwrap_or(false);
        match &self.script {
            Some(Script::Cartel { active_from, low, high, .. }) if !self.cartel.is_empty() => {
                let level = self.script_rng.random_range(*low..=*high) * cfg.r_max;
                let leader = self.cartel[0];
                let live = t >= *active_from && !self.cartel.iter().any(|&m| targeted(m));
                if live {
                    requests[leader] = level;
                    scripted[leader] = true;
                    leader_level = Some(level);
                }
                let fresh = cfg.max_delay + 1;
                for &m in &self.cartel[1..] {
                    if let Some((at, v)) = self.received[m] {
                        if live && t - at <= fresh {
                            requests[m] = v;
                            scripted[m] = true;
                        }
                    }
                }
            }
            Some(Script::Adversary { agent, active_from, .. }) if *agent < n => {
                if t >= *active_from && !targeted(*agent) {
                    requests[*agent] = cfg.q_max;
                    scripted[*agent] = true;
                    adversary_violating = true;
                }
            }
            _ => {}
        }
        for (q, cap) in requests.iter_mut().zip(&controls.patch_cap) {
            if let Some(c) = cap {
                *q = q.min(*c);
            }
        }

        let allocations = allocate(&requests, self.pool, cfg.alpha_dist);
        let social_mean = if n > 0 { allocations.iter().sum::<f64>() / n as f64 } else { 0.0 };
        let mut private_rewards = Vec::with_capacity(n);
        let mut env_rewards = Vec::with_capacity(n);
        for i in 0..n {
            let (p, total) = reward(allocations[i], requests[i], cfg.r_max, cfg.penalty_factor, social_mean, cfg.social_weight);
            private_rewards.push(p);
            env_rewards.push(total);
        }
        let mut adversary_gain = 0.0;
        if let Some(Script::Adversary { agent, g_max, harm, .. }) = &self.script {
            let draw = self.script_rng.random_range(0.0..=2.0 * g_max);
            if *agent < n {
                for j in self.graph.neighbors(*agent) {
                    env_rewards[j] -= self.pending_harm;
                }
                self.pending_harm = 0.0;
                if adversary_violating {
                    adversary_gain = draw;
                    env_rewards[*agent] += draw;
                    self.pending_harm = harm * draw;
                }
            }
        }

        let mut rewards = env_rewards.clone();
        let mut shaping_total = 0.0;
        for (r, s) in rewards.iter_mut().zip(&controls.shaping) {
            *r -= s;
            shaping_total += s;
        }

        for i in 0..n {
            if scripted[i] {
                self.policies[i].learner_mut().discard();
            } else {
                self.policies[i].learn(rewards[i], allocations[i], controls.learning);
            }
        }

        for i in 0..n {
            let event = Event::new(cfg.hash, t, i as u16, &observations[i], &requests[i].to_le_bytes(), rewards[i]);
            self.ledger_channel.send(t, i, event, 1.0, &mut self.channel_rng);
        }
        if let Some(Script::Cartel { .. }) = &self.script {
            if let Some(&leader) = self.cartel.first() {
                for &m in &self.cartel[1..] {
                    let link = self.graph.weight(leader, m);
                    if let Some(level) = leader_level {
                        self.signal_channel.send(t, m, level, link, &mut self.channel_rng);
                    }
                }
            }
        }

        let used: f64 = allocations.iter().sum();
        self.pool = (self.pool - used + cfg.r_in).clamp(0.0, cfg.r_max);
        let queue_length: f64 = requests.iter().sum();
        let violation = requests.iter().any(|&q| is_greedy(q, cfg.r_max));
        self.last_alloc.clone_from(&allocations);
        self.last_requests.clone_from(&requests);
        StepOutcome {
            t,
            requests,
            allocations,
            private_rewards,
            env_rewards,
            rewards,
            shaping_total,
            delivered,
            violation,
            queue_length,
            scripted,
            adversary_gain,
        }
    }
}

/// Lowest-index node with at least `size - 1` neighbours, plus its
/// lowest-index neighbours.
fn pick_cartel(graph: &Graph, size: usize) -> Vec<usize> {
    if size == 0 {
        return Vec::new();
    }
    for leader in 0..graph.len() {
        if graph.degree(leader) + 1 >= size {
            let mut out = vec![leader];
            out.extend(graph.neighbors(leader).take(size - 1));
            return out;
        }
    }
    Vec::new()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize) -> WorldConfig {
        WorldConfig {
            n_agents: n,
            ..WorldConfig::default()
        }
    }

    #[test]
    fn deterministic_trajectory() {
        let run = || {
            let mut w = World::new(cfg(12), None, 7).unwrap();
            let c = StepControls::none(12);
            (0..100).map(|_| w.step(&c)).map(|o| (o.requests, o.rewards, o.delivered)).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn zero_agents_replenish() {
        let mut w = World::new(cfg(0), None, 1).unwrap();
        let o = w.step(&StepControls::none(0));
        assert!(o.requests.is_empty());
        assert_eq!(w.pool(), 100.0);
    }

    #[test]
    fn pool_bounds_and_scarcity() {
        let mut c = cfg(10);
        c.r_in = 30.0;
        let mut w = World::new(c, None, 3).unwrap();
        let ctl = StepControls::none(10);
        for _ in 0..200 {
            w.step(&ctl);
            assert!((0.0..=100.0).contains(&w.pool()));
        }
    }

    #[test]
    fn shaping_changes_logged_reward_only_for_target() {
        let mut a = World::new(cfg(6), None, 5).unwrap();
        let mut b = World::new(cfg(6), None, 5).unwrap();
        let plain = StepControls::none(6);
        let mut shaped = StepControls::none(6);
        shaped.shaping[0] = 0.75;
        let oa = a.step(&plain);
        let ob = b.step(&shaped);
        assert_eq!(ob.rewards[0], oa.rewards[0] - 0.75);
        assert_eq!(ob.env_rewards, oa.env_rewards);
        assert_eq!(&ob.rewards[1..], &oa.rewards[1..]);
    }

    #[test]
    fn patch_keeps_byzantine_below_greed() {
        let mut c = cfg(20);
        c.byzantine_fraction = 0.1;
        let mut w = World::new(c, None, 2).unwrap();
        let byz = w.byzantine_agents();
        assert_eq!(byz.len(), 2);
        let mut ctl = StepControls::none(20);
        for &b in &byz {
            ctl.patch_cap[b] = Some(50.0);
        }
        for _ in 0..100 {
            let o = w.step(&ctl);
            for &b in &byz {
                assert_eq!(o.requests[b], 50.0);
                assert!(!is_greedy(o.requests[b], 100.0));
            }
        }
    }

    #[test]
    fn records_arrive_with_bounded_delay() {
        let mut c = cfg(8);
        c.loss = 0.0;
        let mut w = World::new(c, None, 4).unwrap();
        let ctl = StepControls::none(8);
        let mut seen = 0;
        for _ in 0..50 {
            let o = w.step(&ctl);
            for e in &o.delivered {
                assert!(e.step < o.t && o.t - e.step <= 4);
            }
            seen += o.delivered.len();
        }
        assert!(seen >= 8 * 46);
    }

    #[test]
    fn cartel_follows_leader_until_muted() {
        let script = Script::Cartel { size: 4, active_from: 1, low: 0.8, high: 1.0 };
        let mut c = cfg(10);
        c.loss = 0.0;
        c.max_delay = 0;
        let mut w = World::new(c, Some(script), 9).unwrap();
        let cartel = w.cartel().to_vec();
        assert_eq!(cartel.len(), 4);
        let ctl = StepControls::none(10);
        let mut prev_level = None;
        for _ in 0..20 {
            let o = w.step(&ctl);
            let leader = o.requests[cartel[0]];
            assert!((80.0..=100.0).contains(&leader));
            if let Some(p) = prev_level {
                for &m in &cartel[1..] {
                    assert_eq!(o.requests[m], p);
                }
            }
            prev_level = Some(leader);
        }
        for &m in &cartel[1..] {
            w.graph_mut().set_weight(cartel[0], m, 0.0).unwrap();
        }
        for _ in 0..3 {
            w.step(&ctl);
        }
        let o = w.step(&ctl);
        assert!(cartel[1..].iter().all(|&m| !o.scripted[m]));
    }

    #[test]
    fn adversary_harms_neighbours_next_step() {
        let script = Script::Adversary { agent: 0, active_from: 1, g_max: 1.0, harm: 2.0 };
        let mut c = cfg(10);
        c.social_weight = 0.0;
        let mut w = World::new(c, Some(script), 11).unwrap();
        let ctl = StepControls::none(10);
        let first = w.step(&ctl);
        assert_eq!(first.requests[0], 100.0);
        assert!(first.adversary_gain >= 0.0 && first.adversary_gain <= 2.0);
        let nbr = w.graph().neighbors(0).next().unwrap();
        let second = w.step(&ctl);
        let base = second.private_rewards[nbr];
        assert!((second.env_rewards[nbr] - (base - 2.0 * first.adversary_gain)).abs() < 1e-12);
        let mut quiet = StepControls::none(10);
        quiet.targeted[0] = true;
        let third = w.step(&quiet);
        assert!(!third.scripted[0]);
        assert_eq!(third.adversary_gain, 0.0);
    }
}
