//! Adaptive CUSUM on a stream that drifts, and budgeted arbitration
//! between norms that fire together.

use accountability::detection::{cusum_step, lorden_delay_bound, BudgetAllocator, DetectorState, NormKind, NormSpec};
use accountability::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<()> {
    let spec = NormSpec::new(0, NormKind::Load, 0.0, 0.1, 0.05)?;
    let mut state = DetectorState::new(4.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");

    for _ in 0..20_000 {
        cusum_step(&mut state, noise.sample(&mut rng), &spec);
    }
    println!("null alarm rate {:.4}, threshold settled at {:.3}", state.alarm_rate(), state.h);

    let bound = lorden_delay_bound(state.h, 1.0, spec.delta)?;
    let mut delay = 0;
    loop {
        delay += 1;
        if cusum_step(&mut state, 1.0 + noise.sample(&mut rng), &spec).alert {
            break;
        }
    }
    println!("drift of 1.0 detected after {delay} samples (worst-case mean bound {bound:.2})");

    let mut allocator = BudgetAllocator::new(3, 0.05, 1000)?;
    let mut admitted = 0;
    for t in 0..1000 {
        let fired: &[usize] = if t % 3 == 0 { &[0, 2] } else { &[0] };
        admitted += usize::from(allocator.allocate_alert(fired)?.admitted);
    }
    println!("norm weights after a noisy norm fires every step: {:?}", allocator.weights());
    println!("{admitted} of 1000 alerts admitted under a 0.05 budget");
    Ok(())
}
