//! Pairwise Granger F-statistics.
//!
//! Both regressions use an intercept, ridge `lambda` on every coefficient and
//! regressor order `[1, target lags.., source lags..]`. The residual sum of
//! squares is the ridge objective `y'y - b'(X'X + lambda I)^{-1} b`, so the
//! restricted value is never below the unrestricted one.

use std::collections::VecDeque;

use super::linalg::{cholesky, forward_sub, spd_inverse};
use crate::error::{Error, Result};

pub const DEFAULT_LAGS: usize = 8;
pub const DEFAULT_WINDOW: usize = 64;
pub const DEFAULT_RIDGE: f64 = 1e-6;
/// F reported when only the unrestricted residual vanishes. A target its
/// own lags already explain scores 0.
pub const F_SENTINEL: f64 = 1e12;
const RSS_FLOOR: f64 = 1e-12;

fn f_from_rss(rss_r: f64, rss_u: f64, lags: usize, rows: usize) -> f64 {
    if rss_r < RSS_FLOOR {
        return 0.0;
    }
    if rss_u < RSS_FLOOR {
        return F_SENTINEL;
    }
    let dof = (rows - 2 * lags - 1) as f64;
    let f = ((rss_r - rss_u) / lags as f64) / (rss_u / dof);
    if f.is_finite() {
        f.max(0.0)
    } else {
        F_SENTINEL
    }
}

/// Batch F-statistic over whole series: rows `t = lags..len`, so the sample
/// size is `len - lags` and must be at least `2 lags + 2`.
pub fn granger_f_batch(source: &[f64], target: &[f64], lags: usize) -> Result<f64> {
    granger_f_batch_ridge(source, target, lags, DEFAULT_RIDGE)
}

pub fn granger_f_batch_ridge(source: &[f64], target: &[f64], lags: usize, ridge: f64) -> Result<f64> {
    if lags == 0 {
        return Err(Error::InvalidArgument("lag order must be positive".into()));
    }
    if source.len() != target.len() {
        return Err(Error::InvalidArgument("series lengths differ".into()));
    }
    let len = target.len();
    if len < lags || len - lags < 2 * lags + 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} samples for {lags} lags, got {len}",
            3 * lags + 2
        )));
    }
    let p = 2 * lags + 1;
    let mut gram = vec![0.0; p * p];
    let mut b = vec![0.0; p];
    let mut yy = 0.0;
    let mut x = vec![0.0; p];
    for t in lags..len {
        fill_row(&mut x, lags, |k| target[t - k], |k| source[t - k]);
        let y = target[t];
        for i in 0..p {
            b[i] += x[i] * y;
            for j in 0..=i {
                gram[i * p + j] += x[i] * x[j];
            }
        }
        yy += y * y;
    }
    for i in 0..p {
        gram[i * p + i] += ridge;
        for j in 0..i {
            gram[j * p + i] = gram[i * p + j];
        }
    }
    if !cholesky(&mut gram, p) {
        return Err(Error::Precondition("normal equations are not positive definite".into()));
    }
    // The leading (lags+1) block of the unrestricted factor is the restricted factor.
    let z = forward_sub(&gram, p, &b);
    let r = lags + 1;
    let explained_r: f64 = z[..r].iter().map(|v| v * v).sum();
    let explained_u: f64 = explained_r + z[r..].iter().map(|v| v * v).sum::<f64>();
    let rss_r = yy - explained_r;
    let rss_u = yy - explained_u;
    Ok(f_from_rss(rss_r, rss_u, lags, len - lags))
}

/// `x = [1, tgt(1..=lags), src(1..=lags)]` where `tgt(k)` is the k-th lag.
fn fill_row(x: &mut [f64], lags: usize, tgt: impl Fn(usize) -> f64, src: impl Fn(usize) -> f64) {
    x[0] = 1.0;
    for k in 1..=lags {
        x[k] = tgt(k);
        x[lags + k] = src(k);
    }
}

/// Inverse Gram, moment vector and `y'y` for one regression.
#[derive(Debug, Clone)]
struct RlsModel {
    p: usize,
    inv: Vec<f64>,
    b: Vec<f64>,
    yy: f64,
    scratch: Vec<f64>,
}

impl RlsModel {
    fn new(p: usize) -> Self {
        RlsModel {
            p,
            inv: vec![0.0; p * p],
            b: vec![0.0; p],
            yy: 0.0,
            scratch: vec![0.0; p],
        }
    }

    /// Rank-one update with `sign = +1` (add row) or `-1` (remove row).
    fn rank_one(&mut self, x: &[f64], y: f64, sign: f64) -> bool {
        let p = self.p;
        let px = &mut self.scratch;
        for i in 0..p {
            let row = &self.inv[i * p..(i + 1) * p];
            px[i] = row.iter().zip(&x[..p]).map(|(a, b)| a * b).sum();
        }
        let quad: f64 = px.iter().zip(&x[..p]).map(|(a, b)| a * b).sum();
        let denom = 1.0 + sign * quad;
        if !(denom > 1e-12) || !denom.is_finite() {
            return false;
        }
        let scale = sign / denom;
        for i in 0..p {
            let pi = px[i] * scale;
            for j in 0..=i {
                let v = self.inv[i * p + j] - pi * px[j];
                self.inv[i * p + j] = v;
                self.inv[j * p + i] = v;
            }
        }
        for i in 0..p {
            self.b[i] += sign * x[i] * y;
        }
        self.yy += sign * y * y;
        true
    }

    fn rss(&self) -> f64 {
        let p = self.p;
        let mut quad = 0.0;
        for i in 0..p {
            let row = &self.inv[i * p..(i + 1) * p];
            let s: f64 = row.iter().zip(&self.b).map(|(a, b)| a * b).sum();
            quad += self.b[i] * s;
        }
        self.yy - quad
    }

    fn is_finite(&self) -> bool {
        self.inv.iter().all(|v| v.is_finite()) && self.yy.is_finite()
    }

    fn max_asymmetry(&self) -> f64 {
        let p = self.p;
        let mut worst: f64 = 0.0;
        for i in 0..p {
            for j in 0..i {
                worst = worst.max((self.inv[i * p + j] - self.inv[j * p + i]).abs());
            }
        }
        worst
    }
}

/// Sliding-window Granger test for one ordered (source, target) pair, updated
/// with rank-one Sherman-Morrison steps and periodically re-anchored by an
/// exact inverse of the window's Gram matrix.
#[derive(Debug, Clone)]
pub struct GrangerState {
    lags: usize,
    window: usize,
    ridge: f64,
    samples: VecDeque<(f64, f64)>,
    restricted: RlsModel,
    unrestricted: RlsModel,
    primed: bool,
    since_refresh: usize,
    resets: u64,
    last_f: f64,
    row: Vec<f64>,
}

impl GrangerState {
    pub fn new(lags: usize, window: usize) -> Self {
        Self::with_ridge(lags, window, DEFAULT_RIDGE)
    }

    pub fn with_ridge(lags: usize, window: usize, ridge: f64) -> Self {
        assert!(lags > 0, "lag order must be positive");
        assert!(window >= 2 * lags + 2, "window too short for lag order");
        GrangerState {
            lags,
            window,
            ridge,
            samples: VecDeque::with_capacity(window + lags + 1),
            restricted: RlsModel::new(lags + 1),
            unrestricted: RlsModel::new(2 * lags + 1),
            primed: false,
            since_refresh: 0,
            resets: 0,
            last_f: 0.0,
            row: vec![0.0; 2 * lags + 1],
        }
    }

    pub fn lags(&self) -> usize {
        self.lags
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// True once the window holds `window` regression rows.
    pub fn is_ready(&self) -> bool {
        self.primed
    }

    /// Most recent F (0 during warm-up).
    pub fn f_stat(&self) -> f64 {
        self.last_f
    }

    /// Number of numerical breakdowns that forced a reset.
    pub fn resets(&self) -> u64 {
        self.resets
    }

    pub fn rss(&self) -> Option<(f64, f64)> {
        self.primed
            .then(|| (self.restricted.rss(), self.unrestricted.rss()))
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.restricted
            .max_asymmetry()
            .max(self.unrestricted.max_asymmetry())
    }

    /// Drops all samples; the next full window starts from scratch.
    pub fn reset(&mut self) {
        self.samples.clear();
        self.primed = false;
        self.since_refresh = 0;
        self.last_f = 0.0;
    }

    /// The trailing series currently in the window, oldest first.
    pub fn window_series(&self) -> (Vec<f64>, Vec<f64>) {
        self.samples.iter().copied().unzip()
    }

    fn row_at(&mut self, pos: usize) -> f64 {
        let lags = self.lags;
        let samples = &self.samples;
        fill_row(
            &mut self.row,
            lags,
            |k| samples[pos - k].1,
            |k| samples[pos - k].0,
        );
        samples[pos].1
    }

    fn rebuild(&mut self) -> bool {
        let p = 2 * self.lags + 1;
        let r = self.lags + 1;
        let mut gram = vec![0.0; p * p];
        let mut b = vec![0.0; p];
        let mut yy = 0.0;
        for pos in self.lags..self.samples.len() {
            let y = self.row_at(pos);
            let x = &self.row;
            for i in 0..p {
                b[i] += x[i] * y;
                for j in 0..=i {
                    gram[i * p + j] += x[i] * x[j];
                }
            }
            yy += y * y;
        }
        for i in 0..p {
            gram[i * p + i] += self.ridge;
            for j in 0..i {
                gram[j * p + i] = gram[i * p + j];
            }
        }
        let mut gram_r = vec![0.0; r * r];
        for i in 0..r {
            for j in 0..r {
                gram_r[i * r + j] = gram[i * p + j];
            }
        }
        let (Some(inv_u), Some(inv_r)) = (spd_inverse(&gram, p), spd_inverse(&gram_r, r)) else {
            return false;
        };
        self.unrestricted.inv = inv_u;
        self.unrestricted.b = b.clone();
        self.unrestricted.yy = yy;
        self.restricted.inv = inv_r;
        self.restricted.b = b[..r].to_vec();
        self.restricted.yy = yy;
        self.since_refresh = 0;
        true
    }

    fn breakdown(&mut self) -> f64 {
        self.resets += 1;
        self.reset();
        0.0
    }

    /// Feeds one (source, target) sample and returns the current F.
    pub fn update(&mut self, source: f64, target: f64) -> f64 {
        if !source.is_finite() || !target.is_finite() {
            return self.breakdown();
        }
        self.samples.push_back((source, target));
        let capacity = self.window + self.lags;
        if !self.primed {
            if self.samples.len() < capacity {
                self.last_f = 0.0;
                return 0.0;
            }
            if !self.rebuild() {
                return self.breakdown();
            }
            self.primed = true;
        } else {
            // add newest row, remove the oldest row, then drop its leading sample
            let newest = self.samples.len() - 1;
            let y_new = self.row_at(newest);
            let x_new = self.row.clone();
            let y_old = self.row_at(self.lags);
            let x_old = self.row.clone();
            self.samples.pop_front();
            self.since_refresh += 1;
            let r = self.lags + 1;
            let ok = if self.since_refresh >= self.window {
                self.rebuild()
            } else {
                self.unrestricted.rank_one(&x_new, y_new, 1.0)
                    && self.unrestricted.rank_one(&x_old, y_old, -1.0)
                    && self.restricted.rank_one(&x_new[..r], y_new, 1.0)
                    && self.restricted.rank_one(&x_old[..r], y_old, -1.0)
            };
            if !ok || !self.unrestricted.is_finite() || !self.restricted.is_finite() {
                return self.breakdown();
            }
        }
        let rss_r = self.restricted.rss();
        let rss_u = self.unrestricted.rss();
        self.last_f = f_from_rss(rss_r, rss_u, self.lags, self.window);
        self.last_f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    // Independent oracle: plain Gaussian elimination on the normal equations,
    // residuals formed explicitly and the ridge penalty added back.
    fn oracle_rss(xs: &[Vec<f64>], ys: &[f64], ridge: f64) -> f64 {
        let p = xs[0].len();
        let mut a = vec![vec![0.0; p + 1]; p];
        for (x, &y) in xs.iter().zip(ys) {
            for i in 0..p {
                for j in 0..p {
                    a[i][j] += x[i] * x[j];
                }
                a[i][p] += x[i] * y;
            }
        }
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += ridge;
        }
        for c in 0..p {
            let piv = (c..p)
                .max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())
                .unwrap();
            a.swap(c, piv);
            for r in 0..p {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    for k in c..=p {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
        let beta: Vec<f64> = (0..p).map(|i| a[i][p] / a[i][i]).collect();
        let resid: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let fit: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
                (y - fit).powi(2)
            })
            .sum();
        resid + ridge * beta.iter().map(|b| b * b).sum::<f64>()
    }

    fn oracle_f(source: &[f64], target: &[f64], m: usize) -> f64 {
        let mut xr = Vec::new();
        let mut xu = Vec::new();
        let mut ys = Vec::new();
        for t in m..target.len() {
            let mut r = vec![1.0];
            r.extend((1..=m).map(|k| target[t - k]));
            let mut u = r.clone();
            u.extend((1..=m).map(|k| source[t - k]));
            xr.push(r);
            xu.push(u);
            ys.push(target[t]);
        }
        let rss_r = oracle_rss(&xr, &ys, DEFAULT_RIDGE);
        let rss_u = oracle_rss(&xu, &ys, DEFAULT_RIDGE);
        f_from_rss(rss_r, rss_u, m, ys.len())
    }

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn batch_matches_oracle() {
        for seed in 0..20 {
            let s = noise(90, seed);
            let mut t = noise(90, seed + 100);
            for i in 1..90 {
                t[i] += 0.3 * s[i - 1];
            }
            let f = granger_f_batch(&s, &t, 8).unwrap();
            let o = oracle_f(&s, &t, 8);
            assert!((f - o).abs() <= 1e-8 * o.max(1.0), "{f} vs {o}");
        }
    }

    #[test]
    fn lagged_copy_gives_huge_f() {
        let s = noise(128, 3);
        let mut t = vec![0.0; 128];
        for i in 1..128 {
            t[i] = s[i - 1];
        }
        let f = granger_f_batch(&s, &t, 8).unwrap();
        assert!(f >= 1e6, "{f}");
    }

    #[test]
    fn constant_zero_source_gives_zero() {
        let s = vec![0.0; 100];
        let t = noise(100, 5);
        assert_eq!(granger_f_batch(&s, &t, 8).unwrap(), 0.0);
    }

    #[test]
    fn short_series_rejected() {
        let s = noise(25, 1);
        assert!(granger_f_batch(&s, &s, 8).is_err());
        assert!(granger_f_batch(&noise(26, 1), &noise(26, 2), 8).is_ok());
    }

    #[test]
    fn warm_up_reports_zero() {
        let mut g = GrangerState::new(8, 64);
        let s = noise(100, 7);
        let t = noise(100, 8);
        for i in 0..71 {
            assert_eq!(g.update(s[i], t[i]), 0.0);
            assert!(!g.is_ready());
        }
        g.update(s[71], t[71]);
        assert!(g.is_ready());
    }

    #[test]
    fn incremental_matches_batch_over_stream() {
        let n = 500;
        let s = noise(n, 11);
        let mut t = noise(n, 12);
        for i in 1..n {
            t[i] += 0.2 * s[i - 1] + 0.1 * t[i - 1];
        }
        let mut g = GrangerState::new(8, 64);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let f = g.update(s[i], t[i]);
            if g.is_ready() {
                let lo = i + 1 - 72;
                let fb = granger_f_batch(&s[lo..=i], &t[lo..=i], 8).unwrap();
                worst = worst.max((f - fb).abs() / fb.abs().max(1e-12));
                let (rr, ru) = g.rss().unwrap();
                assert!(rr >= ru - 1e-9);
                assert!(g.max_asymmetry() <= 1e-9);
            }
        }
        assert!(worst <= 1e-6, "max relative discrepancy {worst}");
    }

    #[test]
    fn reset_then_refill_matches_batch() {
        let s = noise(300, 21);
        let t = noise(300, 22);
        let mut g = GrangerState::new(8, 64);
        for i in 0..150 {
            g.update(s[i], t[i]);
        }
        g.reset();
        assert!(!g.is_ready());
        let mut f = 0.0;
        for i in 150..222 {
            f = g.update(s[i], t[i]);
        }
        assert!(g.is_ready());
        let fb = granger_f_batch(&s[150..222], &t[150..222], 8).unwrap();
        assert!((f - fb).abs() <= 1e-6 * fb.max(1e-12));
    }

    #[test]
    fn non_finite_input_resets() {
        let mut g = GrangerState::new(2, 8);
        for i in 0..20 {
            g.update(i as f64, (i * i) as f64 % 7.0);
        }
        g.update(f64::NAN, 1.0);
        assert_eq!(g.resets(), 1);
        assert!(!g.is_ready());
    }
}
