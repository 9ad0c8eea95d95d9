//! Arbitration of simultaneous alarms under a global alert budget.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GLOBAL_BUDGET: f64 = 0.05;
pub const DEFAULT_BUMP: f64 = 1.0;

/// Outcome of one arbitration round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    /// Fired norm with the lowest running alarm frequency, if any fired.
    pub winner: Option<usize>,
    /// Whether the winner's alert fits within the global budget.
    pub admitted: bool,
    /// Threshold increases for the losing norms, as `(norm, bump)`.
    pub bumps: Vec<(usize, f64)>,
}

/// Entropic mirror-descent weights over norms plus a token bucket that caps
/// admitted alerts at `1 + budget * t`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BudgetAllocator {
    log_weights: Vec<f64>,
    budget: f64,
    learning_rate: f64,
    bump: f64,
    fires: Vec<u64>,
    steps: u64,
    credit: f64,
    admitted: u64,
}

impl BudgetAllocator {
    /// `planned_steps` sets the mirror-descent rate `sqrt(ln M / T)`.
    pub fn new(norms: usize, budget: f64, planned_steps: u64) -> Result<Self> {
        if norms == 0 {
            return Err(Error::InvalidArgument("need at least one norm".into()));
        }
        if !(budget > 0.0 && budget < 1.0) {
            return Err(Error::InvalidArgument(format!("budget must lie in (0,1), got {budget}")));
        }
        let lr = ((norms as f64).ln().max(0.0) / planned_steps.max(1) as f64).sqrt();
        Ok(BudgetAllocator {
            log_weights: vec![0.0; norms],
            budget,
            learning_rate: lr,
            bump: DEFAULT_BUMP,
            fires: vec![0; norms],
            steps: 0,
            credit: 1.0,
            admitted: 0,
        })
    }

    pub fn with_bump(mut self, bump: f64) -> Self {
        self.bump = bump;
        self
    }

    pub fn norms(&self) -> usize {
        self.log_weights.len()
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn weights(&self) -> Vec<f64> {
        let top = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = self.log_weights.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }

    /// Smoothed running alarm frequency `(fires + 1) / (steps + 2)`.
    pub fn alarm_frequency(&self, norm: usize) -> f64 {
        (self.fires[norm] as f64 + 1.0) / (self.steps as f64 + 2.0)
    }

    pub fn admitted(&self) -> u64 {
        self.admitted
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// One round; call every step, with `fired` possibly empty.
    pub fn allocate_alert(&mut self, fired: &[usize]) -> Result<Allocation> {
        if let Some(&bad) = fired.iter().find(|&&m| m >= self.norms()) {
            return Err(Error::InvalidArgument(format!("unknown norm {bad}")));
        }
        let winner = fired.iter().copied().min_by(|&a, &b| {
            self.alarm_frequency(a)
                .total_cmp(&self.alarm_frequency(b))
                .then(a.cmp(&b))
        });
        let mut bumps = Vec::new();
        if let Some(w) = winner {
            let fw = self.alarm_frequency(w);
            let mut losers: Vec<usize> = fired.iter().copied().filter(|&m| m != w).collect();
            losers.sort_unstable();
            losers.dedup();
            for m in losers {
                let b = (self.bump * (self.alarm_frequency(m) / fw).ln()).max(0.0);
                bumps.push((m, b));
            }
        }
        let mut admitted = false;
        if winner.is_some() && self.credit >= 1.0 {
            self.credit -= 1.0;
            self.admitted += 1;
            admitted = true;
        }
        self.credit = (self.credit + self.budget).min(1.0);
        for &m in fired {
            self.log_weights[m] -= self.learning_rate;
        }
        let mut seen = vec![false; self.norms()];
        for &m in fired {
            if !seen[m] {
                self.fires[m] += 1;
                seen[m] = true;
            }
        }
        self.steps += 1;
        Ok(Allocation {
            winner,
            admitted,
            bumps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_fired_norm_wins_without_bumps() {
        let mut a = BudgetAllocator::new(3, 0.05, 1000).unwrap();
        let out = a.allocate_alert(&[2]).unwrap();
        assert_eq!(out.winner, Some(2));
        assert!(out.bumps.is_empty());
        assert!(out.admitted);
    }

    #[test]
    fn quiet_round_keeps_weights() {
        let mut a = BudgetAllocator::new(3, 0.05, 1000).unwrap();
        let before = a.weights();
        let out = a.allocate_alert(&[]).unwrap();
        assert_eq!(out.winner, None);
        assert_eq!(a.weights(), before);
    }

    #[test]
    fn lower_frequency_wins_and_loser_is_bumped() {
        let mut a = BudgetAllocator::new(3, 0.05, 1000).unwrap();
        for _ in 0..10 {
            a.allocate_alert(&[0]).unwrap();
        }
        let out = a.allocate_alert(&[0, 1]).unwrap();
        assert_eq!(out.winner, Some(1));
        let expect = (11.0f64 / 1.0).ln();
        assert_eq!(out.bumps.len(), 1);
        assert_eq!(out.bumps[0].0, 0);
        assert!((out.bumps[0].1 - expect).abs() < 1e-12);
        // equal frequencies: lower id wins, zero bump
        let mut b = BudgetAllocator::new(3, 0.05, 1000).unwrap();
        let out = b.allocate_alert(&[2, 1]).unwrap();
        assert_eq!(out.winner, Some(1));
        assert_eq!(out.bumps, vec![(2, 0.0)]);
    }

    #[test]
    fn always_firing_norm_loses_weight_and_budget_holds() {
        let steps = 10_000u64;
        let mut a = BudgetAllocator::new(3, 0.05, steps).unwrap();
        let mut prev = a.weights()[0];
        for t in 0..steps {
            a.allocate_alert(&[0]).unwrap();
            let w = a.weights();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(w.iter().all(|&x| x > 0.0));
            if t < 1000 {
                assert!(w[0] < prev);
            }
            prev = w[0];
        }
        let bound = 0.05 * steps as f64 + 2.0 * (steps as f64 * 3f64.ln()).sqrt();
        assert!((a.admitted() as f64) <= bound);
    }
}
