//! Adaptive CUSUM with Robbins-Monro threshold calibration.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const H_MIN: f64 = 1e-3;
pub const DEFAULT_GAIN_EXPONENT: f64 = 0.6;
pub const DEFAULT_NORM_ALPHA: f64 = 0.0167;
pub const DEFAULT_INITIAL_THRESHOLD: f64 = 4.0;
/// Returned by [`lorden_delay_bound`] when the bound exceeds 1e12.
pub const DELAY_INFINITE: f64 = f64::INFINITY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Inequity,
    Collusion,
    Load,
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::Inequity => "inequity",
            NormKind::Collusion => "collusion",
            NormKind::Load => "load",
        })
    }
}

/// One monitored norm. The CUSUM increment is `(z - mu0 - delta) / scale`;
/// `scale = 1` gives the raw recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub id: usize,
    pub kind: NormKind,
    pub mu0: f64,
    pub delta: f64,
    pub alpha: f64,
    pub scale: f64,
}

impl NormSpec {
    pub fn new(id: usize, kind: NormKind, mu0: f64, delta: f64, alpha: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("slack must be positive, got {delta}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0,1), got {alpha}")));
        }
        Ok(NormSpec {
            id,
            kind,
            mu0,
            delta,
            alpha,
            scale: 1.0,
        })
    }

    /// Baseline from a warm-up sample: `mu0` is its mean, `delta` half its
    /// sample standard deviation, and increments are measured in standard
    /// deviations.
    pub fn calibrate(id: usize, kind: NormKind, warmup: &[f64], alpha: f64) -> Result<Self> {
        if warmup.len() < 2 {
            return Err(Error::InvalidArgument("warm-up needs at least two samples".into()));
        }
        let n = warmup.len() as f64;
        let mean = warmup.iter().sum::<f64>() / n;
        let var = warmup.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sd = var.sqrt().max(1e-6);
        let mut spec = NormSpec::new(id, kind, mean, 0.5 * sd, alpha)?;
        spec.scale = sd;
        Ok(spec)
    }

    fn increment(&self, z: f64) -> f64 {
        (z - self.mu0 - self.delta) / self.scale
    }
}

/// CUSUM statistic, adaptive threshold and alarm counters for one norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorState {
    pub s: f64,
    pub h: f64,
    pub t: u64,
    pub alarm_count: u64,
    pub gain_exponent: f64,
    /// When set the threshold is held fixed.
    pub frozen: bool,
}

impl DetectorState {
    pub fn new(h0: f64) -> Result<Self> {
        if !(h0 > 0.0) {
            return Err(Error::InvalidArgument(format!("initial threshold must be positive, got {h0}")));
        }
        Ok(DetectorState {
            s: 0.0,
            h: h0,
            t: 0,
            alarm_count: 0,
            gain_exponent: DEFAULT_GAIN_EXPONENT,
            frozen: false,
        })
    }

    pub fn frozen(mut self) -> Self {
        self.frozen = true;
        self
    }

    pub fn gain(&self) -> f64 {
        if self.frozen || self.t == 0 {
            0.0
        } else {
            (self.t as f64).powf(-self.gain_exponent)
        }
    }

    /// Empirical alarm frequency so far.
    pub fn alarm_rate(&self) -> f64 {
        if self.t == 0 {
            0.0
        } else {
            self.alarm_count as f64 / self.t as f64
        }
    }

    /// Raises the threshold by `bump` (allocator arbitration).
    pub fn bump(&mut self, bump: f64) {
        if bump > 0.0 && bump.is_finite() {
            self.h += bump;
        }
    }
}

/// Trace record for one norm at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    pub norm_id: usize,
    pub z: f64,
    pub s: f64,
    pub h: f64,
    pub alert: bool,
}

impl TraceRecord {
    pub const HEADER: &'static str = "t,norm_id,z,S,h,alert";

    pub fn parse(line: &str) -> Result<Self> {
        let bad = || Error::Format(format!("bad trace line: {line}"));
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 6 {
            return Err(bad());
        }
        Ok(TraceRecord {
            t: f[0].parse().map_err(|_| bad())?,
            norm_id: f[1].parse().map_err(|_| bad())?,
            z: f[2].parse().map_err(|_| bad())?,
            s: f[3].parse().map_err(|_| bad())?,
            h: f[4].parse().map_err(|_| bad())?,
            alert: match f[5] {
                "1" => true,
                "0" => false,
                _ => return Err(bad()),
            },
        })
    }
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{}",
            self.t, self.norm_id, self.z, self.s, self.h, u8::from(self.alert)
        )
    }
}

/// One detector step: Page recursion, alarm test, reset, then
/// `h += t^-0.6 (alert - alpha)` floored at [`H_MIN`].
pub fn cusum_step(state: &mut DetectorState, z: f64, spec: &NormSpec) -> TraceRecord {
    state.t += 1;
    state.s = (state.s + spec.increment(z)).max(0.0);
    let alert = state.s >= state.h;
    let s_before_reset = state.s;
    if alert {
        state.alarm_count += 1;
        state.s = 0.0;
    }
    let target = if alert { 1.0 } else { 0.0 };
    state.h = (state.h + state.gain() * (target - spec.alpha)).max(H_MIN);
    TraceRecord {
        t: state.t,
        norm_id: spec.id,
        z,
        s: s_before_reset,
        h: state.h,
        alert,
    }
}

/// Worst-case mean detection delay `h* / (Delta - delta)`.
pub fn lorden_delay_bound(h_star: f64, drift: f64, slack: f64) -> Result<f64> {
    if drift <= slack {
        return Err(Error::InvalidArgument(format!(
            "drift {drift} does not exceed slack {slack}; change is undetectable"
        )));
    }
    let bound = h_star / (drift - slack);
    Ok(if bound > 1e12 { DELAY_INFINITE } else { bound })
}
