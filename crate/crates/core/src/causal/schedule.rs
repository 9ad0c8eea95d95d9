use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Base threshold giving a ledger-wide false-edge probability of at most
/// `alpha`: `sqrt(2 ln(1/alpha))`.
pub fn h0_for_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    Ok((2.0 * (1.0 / alpha).ln()).sqrt())
}

/// Time-uniform threshold `h_t = h0 + sqrt(2 ln t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSchedule {
    pub h0: f64,
}

impl ThresholdSchedule {
    pub fn new(h0: f64) -> Self {
        ThresholdSchedule { h0 }
    }

    pub fn for_alpha(alpha: f64) -> Result<Self> {
        Ok(ThresholdSchedule::new(h0_for_alpha(alpha)?))
    }

    /// The false-edge probability this schedule guarantees.
    pub fn alpha(&self) -> f64 {
        (-self.h0 * self.h0 / 2.0).exp()
    }

    pub fn threshold_at(&self, t: u64) -> Result<f64> {
        if t == 0 {
            return Err(Error::InvalidArgument("threshold schedule starts at t = 1".into()));
        }
        Ok(self.h0 + (2.0 * (t as f64).ln()).sqrt())
    }
}
