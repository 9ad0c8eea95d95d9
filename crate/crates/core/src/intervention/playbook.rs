//! Intervention records, tier selection and the per-agent actions.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::attribution::{top_k, WindowedScores};
use crate::detection::NormKind;
use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: u32 = 25;
pub const DEFAULT_TARGETS: usize = 2;
pub const RECALCITRANCE_WINDOW: u32 = 100;
pub const RECALCITRANCE_COUNT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterventionKind {
    RewardShaping,
    PolicyPatch,
    LinkThrottle,
}

impl InterventionKind {
    pub fn tier(self) -> u8 {
        match self {
            InterventionKind::RewardShaping => 1,
            InterventionKind::PolicyPatch => 2,
            InterventionKind::LinkThrottle => 3,
        }
    }
}

impl fmt::Display for InterventionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InterventionKind::RewardShaping => "reward_shaping",
            InterventionKind::PolicyPatch => "policy_patch",
            InterventionKind::LinkThrottle => "link_throttle",
        })
    }
}

/// The alarm that triggered planning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alarm {
    pub step: u32,
    pub norm_id: usize,
    pub kind: NormKind,
    pub statistic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intervention {
    pub kind: InterventionKind,
    pub targets: Vec<usize>,
    pub norm_id: usize,
    pub statistic: f64,
    /// Shaping penalty weight per step.
    pub lambda: f64,
    /// Request ceiling while a patch is active.
    pub patch_cap: f64,
    /// Per-target weight: unit-mass responsibility for shaping, raw windowed
    /// score for throttling.
    pub weights: Vec<f64>,
    pub window: u32,
    pub issued_at: u32,
}

impl Intervention {
    /// Last step (inclusive) on which the intervention acts.
    pub fn last_step(&self) -> u32 {
        self.issued_at.saturating_add(self.window - 1)
    }

    pub fn is_active(&self, t: u32) -> bool {
        (self.issued_at..=self.last_step()).contains(&t)
    }

    pub fn targets(&self, agent: usize) -> bool {
        self.targets.contains(&agent)
    }

    /// `step,kind,targets,norm_id,lambda,window`, targets joined by `;`.
    pub fn log_line(&self) -> String {
        let targets: Vec<String> = self.targets.iter().map(usize::to_string).collect();
        format!(
            "{},{},{},{},{},{}",
            self.issued_at,
            self.kind,
            targets.join(";"),
            self.norm_id,
            self.lambda,
            self.window
        )
    }
}

/// Constants that shape planned interventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaybookParams {
    pub k: usize,
    pub window: u32,
    pub c_max: f64,
    pub patch_cap: f64,
}

impl PlaybookParams {
    /// Shaping weight `c_max / H`.
    pub fn lambda(&self) -> f64 {
        self.c_max / self.window as f64
    }
}

/// Penalty timestamps per agent for the recalcitrance test.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EscalationState {
    penalties: BTreeMap<usize, VecDeque<u32>>,
}

impl EscalationState {
    pub fn record_penalty(&mut self, agent: usize, step: u32) {
        let q = self.penalties.entry(agent).or_default();
        q.push_back(step);
        while q.front().is_some_and(|&s| s + RECALCITRANCE_WINDOW < step) {
            q.pop_front();
        }
    }

    /// At least two penalties within the last 100 steps.
    pub fn is_recalcitrant(&self, agent: usize, t: u32) -> bool {
        self.penalties.get(&agent).is_some_and(|q| {
            q.iter()
                .filter(|&&s| s <= t && s + RECALCITRANCE_WINDOW >= t)
                .count()
                >= RECALCITRANCE_COUNT
        })
    }
}

/// Chooses targets and tier for an alarm: throttle for collusion, patch when
/// any target is recalcitrant, shaping otherwise.
pub fn plan_intervention(
    alarm: &Alarm,
    scores: &WindowedScores,
    escalation: &EscalationState,
    params: &PlaybookParams,
) -> Result<Intervention> {
    if params.k == 0 || params.window == 0 {
        return Err(Error::InvalidArgument("k and window must be positive".into()));
    }
    let targets = top_k(&scores.scores, params.k);
    if targets.is_empty() {
        return Err(Error::NoTarget);
    }
    let kind = if alarm.kind == NormKind::Collusion {
        InterventionKind::LinkThrottle
    } else if targets.iter().any(|&i| escalation.is_recalcitrant(i, alarm.step)) {
        InterventionKind::PolicyPatch
    } else {
        InterventionKind::RewardShaping
    };
    let weights = match kind {
        InterventionKind::LinkThrottle => targets.iter().map(|&i| scores.scores[i]).collect(),
        _ => {
            let unit = scores.normalised();
            targets.iter().map(|&i| unit[i]).collect()
        }
    };
    Ok(Intervention {
        kind,
        targets,
        norm_id: alarm.norm_id,
        statistic: alarm.statistic,
        lambda: params.lambda(),
        patch_cap: params.patch_cap,
        weights,
        window: params.window,
        issued_at: alarm.step,
    })
}

/// Subtracts `lambda * scores[i]` from each target's reward; returns the total.
pub fn apply_reward_shaping(rewards: &mut [f64], targets: &[usize], scores: &[f64], lambda: f64) -> f64 {
    let mut total = 0.0;
    for &i in targets {
        if let (Some(r), Some(&s)) = (rewards.get_mut(i), scores.get(i)) {
            let p = lambda * s;
            *r -= p;
            total += p;
        }
    }
    total
}

pub fn apply_policy_patch(request: f64, cap: f64) -> f64 {
    request.min(cap)
}

/// Throttle multiplier `1 - clamp(a) clamp(b)` for an edge between two targets.
pub fn throttle_factor(score_i: f64, score_j: f64) -> f64 {
    1.0 - score_i.clamp(0.0, 1.0) * score_j.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(v: &[f64]) -> WindowedScores {
        WindowedScores {
            t: 90,
            window: 25,
            scores: v.to_vec(),
            attributed_events: v.iter().filter(|&&x| x > 0.0).count(),
        }
    }

    fn params() -> PlaybookParams {
        PlaybookParams {
            k: 2,
            window: 25,
            c_max: 5.0,
            patch_cap: 50.0,
        }
    }

    fn alarm(kind: NormKind) -> Alarm {
        Alarm {
            step: 90,
            norm_id: 0,
            kind,
            statistic: 1.0,
        }
    }

    #[test]
    fn collusion_throttles_top_two() {
        let esc = EscalationState::default();
        let iv = plan_intervention(&alarm(NormKind::Collusion), &scores(&[0.0, 0.8, 0.7, 0.6]), &esc, &params()).unwrap();
        assert_eq!(iv.kind, InterventionKind::LinkThrottle);
        assert_eq!(iv.targets, vec![1, 2]);
        assert_eq!(iv.weights, vec![0.8, 0.7]);
    }

    #[test]
    fn inequity_shapes_by_default() {
        let esc = EscalationState::default();
        let iv = plan_intervention(&alarm(NormKind::Inequity), &scores(&[1.0, 3.0, 0.0, 0.0]), &esc, &params()).unwrap();
        assert_eq!(iv.kind, InterventionKind::RewardShaping);
        assert_eq!(iv.targets, vec![1, 0]);
        assert!((iv.weights[0] - 0.75).abs() < 1e-15);
        assert!((iv.lambda - 0.2).abs() < 1e-15);
    }

    #[test]
    fn recalcitrant_agent_gets_patched() {
        let mut esc = EscalationState::default();
        esc.record_penalty(1, 10);
        esc.record_penalty(1, 80);
        assert!(esc.is_recalcitrant(1, 90));
        assert!(!esc.is_recalcitrant(1, 111));
        let iv = plan_intervention(&alarm(NormKind::Load), &scores(&[0.0, 2.0]), &esc, &params()).unwrap();
        assert_eq!(iv.kind, InterventionKind::PolicyPatch);
    }

    #[test]
    fn zero_scores_have_no_target() {
        let esc = EscalationState::default();
        let err = plan_intervention(&alarm(NormKind::Load), &scores(&[0.0, 0.0]), &esc, &params());
        assert!(matches!(err, Err(Error::NoTarget)));
    }

    #[test]
    fn shaping_examples() {
        let mut r = vec![10.0, 20.0];
        apply_reward_shaping(&mut r, &[0, 1], &[2.0, 0.0], 0.0);
        assert_eq!(r, vec![10.0, 20.0]);
        let total = apply_reward_shaping(&mut r, &[0], &[2.0, 0.0], 0.5);
        assert_eq!(r, vec![9.0, 20.0]);
        assert_eq!(total, 1.0);
    }

    #[test]
    fn patch_examples() {
        assert_eq!(apply_policy_patch(90.0, 60.0), 60.0);
        assert_eq!(apply_policy_patch(10.0, 60.0), 10.0);
    }

    #[test]
    fn throttle_factor_examples() {
        assert_eq!(throttle_factor(1.0, 3.0), 0.0);
        assert_eq!(throttle_factor(0.0, 0.7), 1.0);
        assert!((throttle_factor(0.5, 0.5) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn log_line_format() {
        let esc = EscalationState::default();
        let iv = plan_intervention(&alarm(NormKind::Collusion), &scores(&[0.0, 0.8, 0.7]), &esc, &params()).unwrap();
        assert_eq!(iv.log_line(), "90,link_throttle,1;2,0,0.2,25");
        assert!(iv.is_active(90) && iv.is_active(114) && !iv.is_active(115));
    }
}
