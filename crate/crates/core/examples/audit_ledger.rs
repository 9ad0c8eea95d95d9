//! Commit events, link them causally, seal a snapshot and prove inclusion.

use accountability::ledger::{import, Event, LedgerDag, SNAPSHOT_INTERVAL};
use accountability::{HashAlgorithm, Result};

fn main() -> Result<()> {
    let alg = HashAlgorithm::Sha256;
    let mut ledger = LedgerDag::new(alg, 3);

    let mut committed = Vec::new();
    for step in 0..4u32 {
        for agent in 0..3u16 {
            let obs = format!("obs-{step}-{agent}");
            let act = format!("act-{step}-{agent}");
            let event = Event::new(alg, step, agent, obs.as_bytes(), act.as_bytes(), f64::from(agent) * 1.5);
            if let Some(idx) = ledger.commit(event) {
                committed.push(idx);
            }
        }
    }
    // agent 0 at step 0 influences agent 1 at step 1, which influences agent 2 at step 2
    ledger.insert_edge(committed[0], committed[4], 12.5, 1)?;
    ledger.insert_edge(committed[4], committed[8], 9.1, 2)?;
    println!("{} events, {} edges", ledger.len(), ledger.edge_count());
    print!("{}", ledger.edge_dump());

    let snapshot = ledger.seal_snapshot(SNAPSHOT_INTERVAL)?;
    let event = *ledger.event(committed[5])?;
    let proof = ledger.prove_at(&event, &snapshot)?;
    println!(
        "event at step {} by agent {} included under sealed root: {}",
        event.step,
        event.agent,
        ledger.verify(&snapshot.root, &proof, &event)
    );

    let bytes = ledger.export_snapshot(Some(&snapshot));
    let restored = import(&bytes)?;
    println!(
        "exported {} bytes; re-imported root matches: {}",
        bytes.len(),
        restored.root() == snapshot.root
    );
    Ok(())
}
