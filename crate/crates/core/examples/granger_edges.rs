//! Granger F-statistics between a driving series and a lagged follower,
//! and the time-uniform threshold an edge must clear.

use accountability::causal::{granger_f_batch, GrangerState, ThresholdSchedule};
use accountability::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let source: Vec<f64> = (0..400).map(|_| rng.random_range(-1.0..1.0)).collect();
    let follower: Vec<f64> = (0..400)
        .map(|t| if t >= 2 { 0.8 * source[t - 2] } else { 0.0 } + 0.1 * rng.random_range(-1.0..1.0))
        .collect();
    let noise: Vec<f64> = (0..400).map(|_| rng.random_range(-1.0..1.0)).collect();

    println!("batch F, source -> follower: {:.1}", granger_f_batch(&source, &follower, 8)?);
    println!("batch F, source -> noise:    {:.2}", granger_f_batch(&source, &noise, 8)?);

    let schedule = ThresholdSchedule::for_alpha(1e-3)?;
    let mut state = GrangerState::new(8, 64);
    for (t, (&x, &y)) in source.iter().zip(&follower).enumerate() {
        let f = state.update(x, y);
        let step = t as u64 + 1;
        if step % 100 == 0 {
            let h = schedule.threshold_at(step)?;
            println!("t={step:>3}  sliding F {f:>8.1}  threshold {h:.3}  edge {}", f > h);
        }
    }
    Ok(())
}
