//! Sizing the shaping penalty against an adversary's gain, and the cost the
//! supervisor should expect to spend.

use accountability::intervention::{cost_bound, eta_star, lambda_min, DEFAULT_PATCH_COST, DEFAULT_THROTTLE_COST};
use accountability::Result;

fn main() -> Result<()> {
    let (alpha, window, g_max) = (0.05, 25.0, 1.0);
    for lambda in [0.1, 0.2, 0.4] {
        let ceiling = eta_star(alpha, window, lambda, g_max)?;
        let spend = cost_bound(lambda, alpha, DEFAULT_PATCH_COST, DEFAULT_THROTTLE_COST);
        println!("lambda {lambda:.2}: compromise ceiling {ceiling:.4}, expected spend {spend:.4} per step");
    }
    for target in [0.5, 0.25, 0.1] {
        println!("ceiling {target:.2} needs lambda >= {:.4}", lambda_min(g_max, alpha, window, target)?);
    }
    if let Err(e) = eta_star(alpha, window, 0.03, g_max) {
        println!("too small a penalty: {e}");
    }
    Ok(())
}
