//! Closed-form compromise and cost bounds.

use crate::error::{Error, Result};

pub const DEFAULT_PATCH_COST: f64 = 0.5;
pub const DEFAULT_THROTTLE_COST: f64 = 0.25;

/// Long-run compromise ceiling `alpha H / (lambda H - g_max)`.
pub fn eta_star(alpha: f64, window: f64, lambda: f64, g_max: f64) -> Result<f64> {
    let margin = lambda * window - g_max;
    if !(margin > 0.0) {
        return Err(Error::Vacuous(format!(
            "penalty mass lambda*H = {} does not exceed g_max = {g_max}",
            lambda * window
        )));
    }
    Ok(alpha * window / margin)
}

/// Smallest penalty whose ceiling equals `eta_target`: `g_max / H + alpha / eta`.
pub fn lambda_min(g_max: f64, alpha: f64, window: f64, eta_target: f64) -> Result<f64> {
    if !(eta_target > 0.0) {
        return Err(Error::InvalidArgument(format!("target ceiling must be positive, got {eta_target}")));
    }
    if !(window > 0.0) {
        return Err(Error::InvalidArgument(format!("window must be positive, got {window}")));
    }
    Ok(g_max / window + alpha / eta_target)
}

/// Expected per-step supervisory spend `lambda + c_patch alpha + c_throttle alpha^2`.
pub fn cost_bound(lambda: f64, alpha: f64, patch_cost: f64, throttle_cost: f64) -> f64 {
    lambda + patch_cost * alpha + throttle_cost * alpha * alpha
}
