//! A reduced experiment grid written as JSONL, then summarised per cell.

use accountability::harness::{compute_summary, read_records, run_grid, GridSpec};
use accountability::Result;

fn main() -> Result<()> {
    let mut spec = GridSpec {
        agents: vec![10],
        seeds: vec![0, 1],
        ..GridSpec::default()
    };
    spec.base.steps = 150;
    let dir = std::env::temp_dir().join("accountability-grid-example");
    std::fs::create_dir_all(&dir)?;
    let out = dir.join("records.jsonl");

    let written = run_grid(&spec, &out, false, 1)?;
    println!("{written} runs written to {}", out.display());
    let again = run_grid(&spec, &out, true, 1)?;
    println!("resumed: {again} runs left to do");

    let summary = compute_summary(&read_records(&out)?);
    summary.write(&dir)?;
    print!("{}", summary.table());
    Ok(())
}
