//! Allocation rule and per-agent rewards.

pub const DEFAULT_R_MAX: f64 = 100.0;
pub const DEFAULT_SOCIAL_WEIGHT: f64 = 0.3;
/// Requests at or above this fraction of `R_max` count as greedy.
pub const GREED_FRACTION: f64 = 0.6;

/// Everyone gets their request when the pool covers it; otherwise shares are
/// proportional to `q^alpha` (with `0^0 = 0`).
pub fn allocate(requests: &[f64], r_max: f64, alpha: f64) -> Vec<f64> {
    let total: f64 = requests.iter().sum();
    if total <= r_max {
        return requests.to_vec();
    }
    let powered: Vec<f64> = requests
        .iter()
        .map(|&q| if q > 0.0 { q.powf(alpha) } else { 0.0 })
        .collect();
    let norm: f64 = powered.iter().sum();
    if norm <= 0.0 {
        return vec![0.0; requests.len()];
    }
    powered.into_iter().map(|p| p / norm * r_max).collect()
}

pub fn is_greedy(request: f64, r_max: f64) -> bool {
    request >= GREED_FRACTION * r_max
}

/// `(r_private, r_total)` for one agent.
pub fn reward(
    allocation: f64,
    request: f64,
    r_max: f64,
    penalty_factor: f64,
    social_mean: f64,
    social_weight: f64,
) -> (f64, f64) {
    let private = allocation - if is_greedy(request, r_max) { penalty_factor } else { 0.0 };
    (private, private + social_weight * social_mean)
}
