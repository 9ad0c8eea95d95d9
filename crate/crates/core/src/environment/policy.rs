//! Agent policies: tabular learner, Byzantine, statically guarded learner.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const GRID_LEVELS: usize = 11;
pub const STATE_BUCKETS: usize = 11;
pub const MIN_EXPLORATION: f64 = 0.05;
pub const LEARNING_EXPONENT: f64 = 0.6;
/// Largest value-table change per update while learning is clipped.
pub const FAILSAFE_CLIP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Learner,
    Byzantine,
    StaticGuardedLearner,
}

/// How a learner update is modulated this step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LearningMode {
    /// Schedules stay at their current step count.
    pub frozen: bool,
    /// Absolute cap on each value change.
    pub clip: Option<f64>,
}

/// Epsilon-greedy bandit over an 11-level request grid, with state equal to
/// the agent's last allocation bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Learner {
    q_max: f64,
    values: Vec<[f64; GRID_LEVELS]>,
    t: u64,
    state: usize,
    last_action: Option<usize>,
    explore: bool,
}

impl Learner {
    pub fn new(q_max: f64) -> Self {
        Learner {
            q_max,
            values: vec![[0.0; GRID_LEVELS]; STATE_BUCKETS],
            t: 0,
            state: 0,
            last_action: None,
            explore: true,
        }
    }

    /// Disables exploration (greedy play only).
    pub fn without_exploration(mut self) -> Self {
        self.explore = false;
        self
    }

    pub fn level(&self, action: usize) -> f64 {
        self.q_max * action as f64 / (GRID_LEVELS - 1) as f64
    }

    pub fn exploration_rate(&self) -> f64 {
        if !self.explore {
            return 0.0;
        }
        MIN_EXPLORATION.max(((self.t + 1) as f64).powf(-0.5))
    }

    pub fn learning_rate(&self) -> f64 {
        ((self.t + 1) as f64).powf(-LEARNING_EXPONENT)
    }

    pub fn values(&self, state: usize) -> &[f64; GRID_LEVELS] {
        &self.values[state]
    }

    fn greedy(&self) -> usize {
        let row = &self.values[self.state];
        let mut best = 0;
        for a in 1..GRID_LEVELS {
            if row[a] > row[best] {
                best = a;
            }
        }
        best
    }

    /// Draws an action index. Always consumes two uniforms so the stream
    /// stays aligned across runs that differ only in learned values.
    pub fn choose(&mut self, rng: &mut ChaCha8Rng) -> usize {
        let coin: f64 = rng.random();
        let pick = rng.random_range(0..GRID_LEVELS);
        let a = if coin < self.exploration_rate() { pick } else { self.greedy() };
        self.last_action = Some(a);
        a
    }

    /// Forgets the pending action without learning from it.
    pub fn discard(&mut self) {
        self.last_action = None;
    }

    /// Moves the value of the last action toward `reward`, then sets the
    /// next state from the received allocation.
    pub fn update(&mut self, reward: f64, allocation: f64, mode: LearningMode) {
        if let Some(a) = self.last_action.take() {
            let lr = self.learning_rate();
            let v = &mut self.values[self.state][a];
            let mut step = lr * (reward - *v);
            if let Some(c) = mode.clip {
                step = step.clamp(-c, c);
            }
            *v += step;
        }
        if !mode.frozen {
            self.t += 1;
        }
        self.state = bucket(allocation, self.q_max);
    }
}

fn bucket(allocation: f64, q_max: f64) -> usize {
    if !(q_max > 0.0) {
        return 0;
    }
    let b = (allocation / q_max * (STATE_BUCKETS - 1) as f64).round();
    (b.max(0.0) as usize).min(STATE_BUCKETS - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPolicy {
    pub kind: PolicyKind,
    learner: Learner,
    guard_cap: f64,
}

impl AgentPolicy {
    pub fn new(kind: PolicyKind, q_max: f64, r_max: f64) -> Self {
        AgentPolicy {
            kind,
            learner: Learner::new(q_max),
            guard_cap: 0.6 * r_max,
        }
    }

    pub fn set_guard_cap(&mut self, cap: f64) {
        self.guard_cap = cap;
    }

    pub fn disable_exploration(&mut self) {
        self.learner.explore = false;
    }

    pub fn learner(&self) -> &Learner {
        &self.learner
    }

    pub fn learner_mut(&mut self) -> &mut Learner {
        &mut self.learner
    }

    /// Request for this step. Every kind consumes the same random draws.
    pub fn act(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        let a = self.learner.choose(rng);
        match self.kind {
            PolicyKind::Byzantine => self.learner.q_max,
            PolicyKind::Learner => self.learner.level(a),
            PolicyKind::StaticGuardedLearner => self.learner.level(a).min(self.guard_cap),
        }
    }

    pub fn learn(&mut self, reward: f64, allocation: f64, mode: LearningMode) {
        if self.kind != PolicyKind::Byzantine {
            self.learner.update(reward, allocation, mode);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn byzantine_requests_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = AgentPolicy::new(PolicyKind::Byzantine, 100.0, 100.0);
        assert!((0..50).all(|_| p.act(&mut rng) == 100.0));
    }

    #[test]
    fn guard_caps_high_request() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = AgentPolicy::new(PolicyKind::StaticGuardedLearner, 100.0, 100.0);
        for _ in 0..500 {
            assert!(p.act(&mut rng) <= 60.0);
        }
    }

    #[test]
    fn ties_pick_lowest_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut l = Learner::new(100.0).without_exploration();
        assert_eq!(l.choose(&mut rng), 0);
    }

    #[test]
    fn learns_best_arm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut l = Learner::new(100.0);
        for _ in 0..3000 {
            let a = l.choose(&mut rng);
            let r = if a == 4 { 10.0 } else { 1.0 };
            l.update(r, 0.0, LearningMode::default());
        }
        let row = l.values(0);
        let best = (0..GRID_LEVELS).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
        assert_eq!(best, 4);
    }

    #[test]
    fn schedules() {
        let mut l = Learner::new(100.0);
        assert_eq!(l.exploration_rate(), 1.0);
        assert_eq!(l.learning_rate(), 1.0);
        for _ in 0..10_000 {
            l.update(0.0, 0.0, LearningMode::default());
        }
        assert_eq!(l.exploration_rate(), MIN_EXPLORATION);
        assert!((l.learning_rate() - 10_001f64.powf(-0.6)).abs() < 1e-15);
    }

    #[test]
    fn frozen_and_clipped_update() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut l = Learner::new(100.0).without_exploration();
        l.choose(&mut rng);
        let mode = LearningMode { frozen: true, clip: Some(FAILSAFE_CLIP) };
        l.update(50.0, 0.0, mode);
        assert_eq!(l.values(0)[0], 0.1);
        assert_eq!(l.learning_rate(), 1.0);
    }
}
