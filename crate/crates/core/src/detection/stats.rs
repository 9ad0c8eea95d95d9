//! Per-step norm statistics.

use std::collections::VecDeque;

use crate::error::{Error, Result};

pub const DEFAULT_MI_WINDOW: usize = 64;
pub const DEFAULT_MI_BINS: usize = 8;

/// Gini index of `values`, shifted so the minimum is at least zero.
pub fn gini(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let shift = values.iter().copied().fold(0.0_f64, f64::min);
    let mut xs: Vec<f64> = values.iter().map(|v| v - shift).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    // sum_{i,j} |x_i - x_j| = 2 sum_k (2k - n + 1) x_(k) over ascending order
    let weighted: f64 = xs
        .iter()
        .enumerate()
        .map(|(k, x)| (2.0 * k as f64 - n + 1.0) * x)
        .sum();
    (2.0 * weighted / (2.0 * n * n * mean)).clamp(0.0, 1.0)
}

/// Queue length minus design capacity.
pub fn load_statistic(queue_length: f64, design_capacity: f64) -> f64 {
    queue_length - design_capacity
}

/// Bin index of `value` among `bins` equal-width bins over `[0, upper]`.
pub fn bin_of(value: f64, upper: f64, bins: usize) -> usize {
    if !(upper > 0.0) || !value.is_finite() {
        return 0;
    }
    let b = (value / upper * bins as f64).floor();
    (b.max(0.0) as usize).min(bins - 1)
}

/// Plug-in mutual information (nats) of two aligned discrete sequences.
pub fn mutual_information(a: &[usize], b: &[usize], bins: usize) -> f64 {
    let w = a.len().min(b.len());
    if w == 0 {
        return 0.0;
    }
    let mut joint = vec![0u32; bins * bins];
    let mut pa = vec![0u32; bins];
    let mut pb = vec![0u32; bins];
    for (&x, &y) in a.iter().zip(b) {
        joint[x * bins + y] += 1;
        pa[x] += 1;
        pb[y] += 1;
    }
    let n = w as f64;
    let mut mi = 0.0;
    for x in 0..bins {
        for y in 0..bins {
            let c = joint[x * bins + y];
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (pa[x] as f64 * pb[y] as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Max pairwise plug-in MI over the last `window` values of each stream,
/// binned over `[0, upper]`. Zero while any stream is shorter than `window`.
pub fn collusion_pulse(streams: &[&[f64]], window: usize, bins: usize, upper: f64) -> Result<f64> {
    if streams.len() < 2 {
        return Err(Error::InvalidArgument("need at least two agents".into()));
    }
    if window == 0 || bins == 0 {
        return Err(Error::InvalidArgument("window and bins must be positive".into()));
    }
    if streams.iter().any(|s| s.len() < window) {
        return Ok(0.0);
    }
    let binned: Vec<Vec<usize>> = streams
        .iter()
        .map(|s| s[s.len() - window..].iter().map(|&v| bin_of(v, upper, bins)).collect())
        .collect();
    let mut best: f64 = 0.0;
    for i in 0..binned.len() {
        for j in i + 1..binned.len() {
            best = best.max(mutual_information(&binned[i], &binned[j], bins));
        }
    }
    Ok(best)
}

/// Sliding-window collusion statistic maintained incrementally: each pair
/// keeps a joint histogram and running `sum c ln c` terms, so one step costs
/// O(pairs) instead of O(pairs * window).
#[derive(Debug, Clone)]
pub struct CollusionMonitor {
    window: usize,
    bins: usize,
    upper: f64,
    history: Vec<VecDeque<usize>>,
    marginal: Vec<Vec<u32>>,
    marginal_clnc: Vec<f64>,
    joint: Vec<Vec<u32>>,
    joint_clnc: Vec<f64>,
    clnc: Vec<f64>,
    filled: usize,
}

impl CollusionMonitor {
    pub fn new(n_agents: usize, window: usize, bins: usize, upper: f64) -> Self {
        let pairs = n_agents * n_agents.saturating_sub(1) / 2;
        CollusionMonitor {
            window,
            bins,
            upper,
            history: vec![VecDeque::with_capacity(window + 1); n_agents],
            marginal: vec![vec![0; bins]; n_agents],
            marginal_clnc: vec![0.0; n_agents],
            joint: vec![vec![0; bins * bins]; pairs],
            joint_clnc: vec![0.0; pairs],
            clnc: (0..=window)
                .map(|c| if c == 0 { 0.0 } else { c as f64 * (c as f64).ln() })
                .collect(),
            filled: 0,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.history.len()
    }

    fn shift(clnc: &[f64], acc: &mut f64, count: &mut u32, add: bool) {
        *acc -= clnc[*count as usize];
        if add {
            *count += 1;
        } else {
            *count -= 1;
        }
        *acc += clnc[*count as usize];
    }

    /// Pushes one action per agent and returns the statistic.
    pub fn push(&mut self, actions: &[f64]) -> f64 {
        let n = self.history.len();
        let bins = self.bins;
        let new: Vec<usize> = actions.iter().map(|&a| bin_of(a, self.upper, bins)).collect();
        let evict = self.filled == self.window;
        let old: Vec<usize> = if evict {
            self.history.iter_mut().map(|h| h.pop_front().unwrap_or(0)).collect()
        } else {
            Vec::new()
        };
        for i in 0..n {
            self.history[i].push_back(new[i]);
            if evict {
                Self::shift(&self.clnc, &mut self.marginal_clnc[i], &mut self.marginal[i][old[i]], false);
            }
            Self::shift(&self.clnc, &mut self.marginal_clnc[i], &mut self.marginal[i][new[i]], true);
        }
        let mut p = 0;
        for i in 0..n {
            for j in i + 1..n {
                let joint = &mut self.joint[p];
                let acc = &mut self.joint_clnc[p];
                if evict {
                    Self::shift(&self.clnc, acc, &mut joint[old[i] * bins + old[j]], false);
                }
                Self::shift(&self.clnc, acc, &mut joint[new[i] * bins + new[j]], true);
                p += 1;
            }
        }
        if !evict {
            self.filled += 1;
        }
        self.value()
    }

    /// Current statistic; zero until the window is full.
    pub fn value(&self) -> f64 {
        if self.filled < self.window || self.history.len() < 2 {
            return 0.0;
        }
        // I(X;Y) = ln W + (sum c ln c)_joint/W - (sum c ln c)_X/W - (sum c ln c)_Y/W
        let w = self.window as f64;
        let n = self.history.len();
        let mut best: f64 = 0.0;
        let mut p = 0;
        for i in 0..n {
            for j in i + 1..n {
                let mi = w.ln()
                    + (self.joint_clnc[p] - self.marginal_clnc[i] - self.marginal_clnc[j]) / w;
                best = best.max(mi);
                p += 1;
            }
        }
        best.max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gini_oracle(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        if mean == 0.0 {
            return 0.0;
        }
        let mut s = 0.0;
        for a in x {
            for b in x {
                s += (a - b).abs();
            }
        }
        s / (2.0 * n * n * mean)
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[1.0, 1.0, 1.0, 1.0]), 0.0);
        assert!((gini(&[0.0, 1.0]) - 0.5).abs() < 1e-15);
        assert!((gini(&[1.0, 2.0, 3.0, 4.0]) - 0.25).abs() < 1e-15);
        assert_eq!(gini(&[0.0, 0.0]), 0.0);
        // shifted: (-1, 0) behaves as (0, 1)
        assert!((gini(&[-1.0, 0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn load_examples() {
        assert_eq!(load_statistic(100.0, 100.0), 0.0);
        assert_eq!(load_statistic(130.0, 100.0), 30.0);
    }

    proptest! {
        #[test]
        fn gini_matches_pairwise_oracle(v in prop::collection::vec(0.0f64..100.0, 1..30), c in 0.01f64..50.0) {
            let g = gini(&v);
            prop_assert!((0.0..=1.0).contains(&g));
            prop_assert!((g - gini_oracle(&v)).abs() < 1e-9);
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            prop_assert!((gini(&scaled) - g).abs() < 1e-9);
            let mut rev = v.clone();
            rev.reverse();
            prop_assert!((gini(&rev) - g).abs() < 1e-12);
        }
    }

    #[test]
    fn mi_constant_is_zero() {
        let a = vec![5.0; 64];
        let b = vec![3.0; 64];
        assert_eq!(collusion_pulse(&[&a, &b], 64, 8, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn mi_identical_streams_is_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a: Vec<f64> = (0..64).map(|_| rng.random_range(0.0..10.0)).collect();
        let mi = collusion_pulse(&[&a, &a], 64, 8, 10.0).unwrap();
        let mut counts = [0usize; 8];
        for &v in &a {
            counts[bin_of(v, 10.0, 8)] += 1;
        }
        let h: f64 = counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / 64.0;
                -p * p.ln()
            })
            .sum();
        assert!((mi - h).abs() < 1e-12);
    }

    #[test]
    fn mi_warm_up_is_zero() {
        let a = vec![1.0; 10];
        assert_eq!(collusion_pulse(&[&a, &a], 64, 8, 10.0).unwrap(), 0.0);
        assert!(collusion_pulse(&[&a], 8, 8, 10.0).is_err());
    }

    #[test]
    fn mi_independent_streams_follow_chi_square() {
        // 2 W MI is asymptotically chi-square with (B-1)^2 = 49 dof: mean
        // 49 / 512. With ~4 samples per cell the tail is heavier than the
        // asymptote, so 95% of trials are checked against its 99% point 74.92.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let trials = 400;
        let mut under = 0;
        let mut total = 0.0;
        for _ in 0..trials {
            let a: Vec<f64> = (0..256).map(|_| rng.random_range(0.0..1.0)).collect();
            let b: Vec<f64> = (0..256).map(|_| rng.random_range(0.0..1.0)).collect();
            let mi = collusion_pulse(&[&a, &b], 256, 8, 1.0).unwrap();
            total += mi;
            if mi <= 74.92 / 512.0 {
                under += 1;
            }
        }
        let mean = total / trials as f64;
        assert!((mean - 49.0 / 512.0).abs() < 0.015, "{mean}");
        assert!(under as f64 >= 0.95 * trials as f64, "{under}");
    }

    #[test]
    fn monitor_matches_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 5;
        let mut mon = CollusionMonitor::new(n, 16, 4, 10.0);
        let mut streams: Vec<Vec<f64>> = vec![Vec::new(); n];
        for t in 0..100 {
            let mut acts: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
            if t % 3 == 0 {
                acts[2] = acts[1];
            }
            for (s, a) in streams.iter_mut().zip(&acts) {
                s.push(*a);
            }
            let got = mon.push(&acts);
            let refs: Vec<&[f64]> = streams.iter().map(Vec::as_slice).collect();
            let want = collusion_pulse(&refs, 16, 4, 10.0).unwrap();
            assert!((got - want).abs() < 1e-9, "t={t}: {got} vs {want}");
        }
    }
}
