//! Per-cell means and standard deviations over seeds.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::metrics::MetricsRecord;
use crate::error::Result;

/// Sample mean and sample standard deviation (`n - 1` denominator; zero for
/// a single value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanSd { mean: 0.0, sd: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        MeanSd { mean, sd }
    }
}

/// Grid cell identity. Floats are stored as their bit patterns so cells
/// sort and compare exactly; every value involved is nonnegative, so bit
/// order is numeric order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellKey {
    pub agents: usize,
    penalty_bits: u64,
    pub partial_obs: bool,
    alpha_bits: u64,
    byzantine_bits: u64,
}

impl CellKey {
    pub fn of(record: &MetricsRecord) -> Self {
        let w = &record.config.world;
        CellKey {
            agents: w.n_agents,
            penalty_bits: w.penalty_factor.to_bits(),
            partial_obs: w.partial_obs,
            alpha_bits: w.alpha_dist.to_bits(),
            byzantine_bits: w.byzantine_fraction.to_bits(),
        }
    }

    pub fn penalty(&self) -> f64 {
        f64::from_bits(self.penalty_bits)
    }

    pub fn alpha_dist(&self) -> f64 {
        f64::from_bits(self.alpha_bits)
    }

    pub fn byzantine_fraction(&self) -> f64 {
        f64::from_bits(self.byzantine_bits)
    }

    fn columns(&self) -> String {
        let policy = if self.alpha_dist() == 0.0 {
            "none".to_string()
        } else {
            format!("{}", self.alpha_dist())
        };
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.agents,
            self.penalty(),
            if self.partial_obs { "on" } else { "off" },
            policy,
            self.byzantine_fraction()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub key: CellKey,
    pub runs: usize,
    pub avg_reward: MeanSd,
    pub final_gini: MeanSd,
    pub compromise_ratio: MeanSd,
}

/// Cells in `(N, penalty, obs, policy, byzantine)` order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub cells: Vec<CellSummary>,
}

pub fn compute_summary(records: &[MetricsRecord]) -> Summary {
    let mut groups: BTreeMap<CellKey, Vec<&MetricsRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(CellKey::of(r)).or_default().push(r);
    }
    let cells = groups
        .into_iter()
        .map(|(key, rs)| {
            let stat = |f: fn(&MetricsRecord) -> f64| MeanSd::of(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            CellSummary {
                key,
                runs: rs.len(),
                avg_reward: stat(|r| r.avg_reward),
                final_gini: stat(|r| r.final_gini),
                compromise_ratio: stat(|r| r.compromise_ratio),
            }
        })
        .collect();
    Summary { cells }
}

pub fn read_records(path: &Path) -> Result<Vec<MetricsRecord>> {
    let mut out = Vec::new();
    for line in BufReader::new(std::fs::File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

const KEY_HEADER: &str = "Agents\tPenalty\tPartial Obs\tDist. Policy\tByzantine";

impl Summary {
    /// Tab-separated results table, one row per cell.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{KEY_HEADER}\tRuns\tAvg. Reward\tAvg. Reward SD\tFinal Gini\tFinal Gini SD\tC_T/T\tC_T/T SD\n"
        );
        for c in &self.cells {
            writeln!(
                s,
                "{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
                c.key.columns(),
                c.runs,
                c.avg_reward.mean,
                c.avg_reward.sd,
                c.final_gini.mean,
                c.final_gini.sd,
                c.compromise_ratio.mean,
                c.compromise_ratio.sd
            )
            .expect("write to string");
        }
        s
    }

    /// Final Gini per cell as CSV, for bar charts.
    pub fn gini_csv(&self) -> String {
        let mut s = String::from("agents,penalty,partial_obs,alpha_dist,byzantine,gini_mean,gini_sd\n");
        for c in &self.cells {
            writeln!(
                s,
                "{},{},{},{},{},{:.6},{:.6}",
                c.key.agents,
                c.key.penalty(),
                c.key.partial_obs,
                c.key.alpha_dist(),
                c.key.byzantine_fraction(),
                c.final_gini.mean,
                c.final_gini.sd
            )
            .expect("write to string");
        }
        s
    }

    /// Writes `summary.tsv` and `gini.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("summary.tsv"), self.table())?;
        std::fs::write(dir.join("gini.csv"), self.gini_csv())?;
        Ok(())
    }
}
