//! The Monte-Carlo grid: a Cartesian sweep plus a Byzantine sub-sweep,
//! written as JSONL and resumable.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::episode::run_episode;
use super::metrics::MetricsRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Every run starts from this config; its seed list is ignored.
    pub base: ExperimentConfig,
    pub agents: Vec<usize>,
    pub penalties: Vec<f64>,
    pub partial_obs: Vec<bool>,
    pub alpha_dist: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Agent counts that also get a Byzantine sweep over the other axes.
    pub byzantine_agents: Vec<usize>,
    pub byzantine_fraction: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            base: ExperimentConfig::default(),
            agents: vec![10, 50, 100],
            penalties: vec![0.05, 0.20, 0.35],
            partial_obs: vec![true, false],
            alpha_dist: vec![0.0, 0.25, 1.0],
            seeds: (0..5).collect(),
            byzantine_agents: vec![100],
            byzantine_fraction: 0.05,
        }
    }
}

/// One scheduled run.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRun {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub hash: String,
}

impl GridSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let spec: GridSpec = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config {
                assumption: "syntax",
                message: e.to_string(),
            })?
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for run in self.runs() {
            run.config.validate()?;
        }
        Ok(())
    }

    /// The plain sweep in `(N, penalty, obs, alpha, seed)` order, then the
    /// Byzantine sweep in the same order.
    pub fn runs(&self) -> Vec<GridRun> {
        let mut out = Vec::new();
        let byzantine: Vec<usize> = self
            .agents
            .iter()
            .copied()
            .filter(|n| self.byzantine_agents.contains(n))
            .collect();
        for (agents, fraction) in [(&self.agents, 0.0), (&byzantine, self.byzantine_fraction)] {
            for &n in agents {
                for &penalty in &self.penalties {
                    for &obs in &self.partial_obs {
                        for &alpha in &self.alpha_dist {
                            let mut config = self.base.without_seeds();
                            config.world.n_agents = n;
                            config.world.penalty_factor = penalty;
                            config.world.partial_obs = obs;
                            config.world.alpha_dist = alpha;
                            config.world.byzantine_fraction = fraction;
                            let hash = config.hash();
                            for &seed in &self.seeds {
                                out.push(GridRun {
                                    config: config.clone(),
                                    seed,
                                    hash: hash.clone(),
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Drops a trailing partial line and returns the `(config_hash, seed)` pairs
/// already recorded.
pub fn recover(path: &Path) -> Result<HashSet<(String, u64)>> {
    let mut done = HashSet::new();
    if !path.exists() {
        return Ok(done);
    }
    let bytes = std::fs::read(path)?;
    let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    if complete < bytes.len() {
        OpenOptions::new().write(true).open(path)?.set_len(complete as u64)?;
    }
    for line in BufReader::new(&bytes[..complete]).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: MetricsRecord = serde_json::from_str(&line)?;
        done.insert((record.config_hash, record.seed));
    }
    Ok(done)
}

/// Runs every pending cell on `jobs` threads and appends one line per run
/// in schedule order. Returns the number of records written.
pub fn run_grid(spec: &GridSpec, out: &Path, resume: bool, jobs: usize) -> Result<usize> {
    spec.validate()?;
    let done = if resume { recover(out)? } else { HashSet::new() };
    let pending: Vec<GridRun> = spec
        .runs()
        .into_iter()
        .filter(|r| !done.contains(&(r.hash.clone(), r.seed)))
        .collect();
    let mut file = if resume {
        OpenOptions::new().create(true).append(true).open(out)?
    } else {
        File::create(out)?
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let chunk = jobs.max(1) * 2;
    let mut written = 0;
    for batch in pending.chunks(chunk) {
        let records: Vec<Result<MetricsRecord>> =
            pool.install(|| batch.par_iter().map(|r| run_episode(&r.config, r.seed)).collect());
        for record in records {
            file.write_all(record?.to_json_line().as_bytes())?;
            file.flush()?;
            written += 1;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_cardinality() {
        let spec = GridSpec::default();
        let runs = spec.runs();
        assert_eq!(runs.len(), 360);
        assert_eq!(runs.iter().filter(|r| r.config.world.byzantine_fraction > 0.0).count(), 90);
        let keys: HashSet<_> = runs.iter().map(|r| (r.hash.clone(), r.seed)).collect();
        assert_eq!(keys.len(), 360);
    }

    #[test]
    fn restricted_to_ten_agents() {
        let spec = GridSpec {
            agents: vec![10],
            ..GridSpec::default()
        };
        assert_eq!(spec.runs().len(), 90);
    }

    #[test]
    fn recover_truncates_partial_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.jsonl");
        let mut config = ExperimentConfig::default();
        config.steps = 5;
        config.detection.warmup = 2;
        let record = run_episode(&config, 3).unwrap();
        let mut text = record.to_json_line();
        text.push_str("{\"seed\": 4, \"conf");
        std::fs::write(&path, &text).unwrap();
        let done = recover(&path).unwrap();
        assert_eq!(done.len(), 1);
        assert!(done.contains(&(config.hash(), 3)));
        assert_eq!(std::fs::read_to_string(&path).unwrap(), record.to_json_line());
    }
}
