//! Whole-episode invariants over randomised configurations.

use accountability::harness::{run_episode, Baseline, ExperimentConfig};
use proptest::prelude::*;

fn small(agents: usize, loss: f64, byzantine: f64, obs: bool) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.world.n_agents = agents;
    c.world.loss = loss;
    c.world.byzantine_fraction = byzantine;
    c.world.partial_obs = obs;
    c.steps = 80;
    c.detection.warmup = 20;
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn episode_metrics_stay_in_range(
        agents in 4usize..16,
        loss in 0.0..0.2f64,
        byzantine in prop_oneof![Just(0.0), Just(0.25)],
        obs: bool,
        seed: u64,
    ) {
        let config = small(agents, loss, byzantine, obs);
        let r = run_episode(&config, seed).unwrap();
        prop_assert_eq!(r.steps, 80);
        prop_assert!((0.0..=1.0).contains(&r.compromise_ratio));
        prop_assert!((0.0..=1.0).contains(&r.final_gini));
        prop_assert!(r.admitted_alarms <= r.alarms);
        prop_assert!(r.bytes_per_step_max <= r.byte_bound);
        prop_assert!(r.cost_mean <= r.cost_bound + 1e-9);
        // Delayed records may still sit in the intake queue at the end.
        prop_assert!(r.ledger_events > 0);
        prop_assert!(r.ledger_events <= 80 * agents as u64 + r.interventions.total());
        prop_assert_eq!(r.config_hash, config.hash());
    }

    #[test]
    fn reruns_are_byte_identical(seed: u64, agents in 4usize..12) {
        let config = small(agents, 0.1, 0.0, true);
        prop_assert_eq!(
            run_episode(&config, seed).unwrap().to_json_line(),
            run_episode(&config, seed).unwrap().to_json_line()
        );
    }
}

#[test]
fn learner_only_runs_without_a_ledger() {
    let mut config = small(8, 0.0, 0.0, false);
    config.baseline = Baseline::LearnerOnly;
    let r = run_episode(&config, 1).unwrap();
    assert_eq!(r.ledger_events, 0);
    assert_eq!(r.alarms, 0);
    assert_eq!(r.interventions.total(), 0);
}

#[test]
fn seeds_change_the_outcome() {
    let config = small(10, 0.1, 0.0, true);
    let a = run_episode(&config, 1).unwrap();
    let b = run_episode(&config, 2).unwrap();
    assert_ne!(a.ledger_root, b.ledger_root);
}
