//! Responsibility scores over a small causal DAG, per event and windowed.

use accountability::attribution::{compute_rho, windowed_scores};
use accountability::ledger::{Event, LedgerDag};
use accountability::{HashAlgorithm, Result};

fn main() -> Result<()> {
    let alg = HashAlgorithm::Sha256;
    let mut ledger = LedgerDag::new(alg, 3);
    let at = |step: u32, agent: u16, ledger: &mut LedgerDag| {
        ledger
            .commit(Event::new(alg, step, agent, &step.to_le_bytes(), &agent.to_le_bytes(), 0.0))
            .expect("fresh event")
    };
    let a0 = at(0, 0, &mut ledger);
    let b0 = at(0, 1, &mut ledger);
    let b1 = at(1, 1, &mut ledger);
    let c2 = at(2, 2, &mut ledger);
    // two routes into c2: a0 -> b1 -> c2 and b0 -> c2
    ledger.insert_edge(a0, b1, 20.0, 1)?;
    ledger.insert_edge(b1, c2, 15.0, 2)?;
    ledger.insert_edge(b0, c2, 11.0, 2)?;

    let rho = compute_rho(&ledger, c2, 0.8)?;
    println!("rho(c2) = {:?} (sum {:.12})", rho.scores, rho.total());

    let window = windowed_scores(&ledger, 2, 2, 0.8)?;
    println!(
        "windowed over steps 0..=2: {:?}, {} attributed events, top agent {:?}",
        window.scores,
        window.attributed_events,
        window.top_k(1)
    );
    Ok(())
}
