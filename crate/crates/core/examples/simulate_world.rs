//! Step the resource-sharing world directly, with a patch applied to the
//! greediest agent halfway through.

use accountability::detection::gini;
use accountability::environment::{StepControls, World, WorldConfig};
use accountability::Result;

fn main() -> Result<()> {
    let config = WorldConfig {
        n_agents: 8,
        ..WorldConfig::default()
    };
    let mut world = World::new(config, None, 11)?;
    let mut controls = StepControls::none(8);
    let mut totals = vec![0.0f64; 8];
    for t in 1..=400 {
        if t == 200 {
            let greediest = (0..8).max_by(|&a, &b| totals[a].total_cmp(&totals[b])).unwrap_or(0);
            controls.patch_cap[greediest] = Some(50.0);
            println!("patching agent {greediest} from step 200");
        }
        let out = world.step(&controls);
        for (acc, a) in totals.iter_mut().zip(&out.allocations) {
            *acc += a;
        }
        if t % 100 == 0 {
            println!(
                "t={t}: queue {:>6.1}  violation {}  gini of cumulative allocations {:.3}  delivered records {}",
                out.queue_length,
                out.violation,
                gini(&totals),
                out.delivered.len()
            );
        }
    }
    Ok(())
}
