//! A full supervised episode against a scripted cartel, compared with the
//! same world left unsupervised.

use accountability::harness::{run_episode, verify::cartel_fixture, Baseline};
use accountability::Result;

fn main() -> Result<()> {
    let seed = 4;
    let supervised = run_episode(&cartel_fixture(Baseline::Aaf), seed)?;
    let unsupervised = run_episode(&cartel_fixture(Baseline::LearnerOnly), seed)?;

    println!("compromise ratio: supervised {:.3}, unsupervised {:.3}", supervised.compromise_ratio, unsupervised.compromise_ratio);
    println!("first alarm {:?} steps after the cartel formed", supervised.detection_delay);
    if let Some((before, after)) = supervised.cartel_gain {
        println!("cartel net reward per step: {before:.2} before the first sanction, {after:.2} after");
    }
    println!("interventions {:?}", supervised.interventions);
    for line in supervised.intervention_log.iter().take(5) {
        println!("  {line}");
    }
    println!(
        "ledger: {} events, {} causal edges, peak {} of {} bytes per step, root {}",
        supervised.ledger_events,
        supervised.ledger_edges,
        supervised.bytes_per_step_max,
        supervised.byte_bound,
        &supervised.ledger_root[..16]
    );
    Ok(())
}
