//! Property suites that check the engine's analytic guarantees at desk
//! scale.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::config::{Baseline, ExperimentConfig};
use super::episode::Episode;
use crate::attribution::{compute_rho, Attributor};
use crate::causal::{h0_for_alpha, GrangerState, ThresholdSchedule, DEFAULT_LAGS, DEFAULT_WINDOW};
use crate::detection::{cusum_step, BudgetAllocator, DetectorState, NormKind, NormSpec, DEFAULT_INITIAL_THRESHOLD};
use crate::environment::{PolicyKind, Script};
use crate::error::{Error, Result};
use crate::hash::HashAlgorithm;
use crate::intervention::{eta_star, lambda_min};
use crate::ledger::{bytes_per_step_bound, Event, LedgerDag};

/// Suite names accepted by [`verify`], in the order `all` runs them.
pub const SUITES: [&str; 9] = [
    "normalisation",
    "convergence",
    "edge-fp",
    "calibration",
    "delay",
    "compromise",
    "penalty",
    "bandwidth",
    "regret",
];

/// Outcome of one property check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub property: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub bound: f64,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} (measured {}, bound {}; {}; {:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.property,
            self.measured,
            self.bound,
            self.detail,
            self.seconds
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {failed} failed", self.checks.len())
    }
}

/// Runs one named suite, or every suite for `all`.
pub fn verify(name: &str) -> Result<VerifyReport> {
    let names: Vec<&str> = match name {
        "all" => SUITES.to_vec(),
        n if SUITES.contains(&n) => vec![n],
        _ => {
            return Err(Error::UnknownSuite {
                name: name.to_string(),
                available: format!("{}, all", SUITES.join(", ")),
            })
        }
    };
    let mut report = VerifyReport::default();
    for n in names {
        report.checks.extend(run_suite(n)?);
    }
    Ok(report)
}

fn run_suite(name: &str) -> Result<Vec<Check>> {
    Ok(match name {
        "normalisation" => vec![normalisation(100, &ExperimentConfig::default())?],
        "convergence" => vec![convergence_under_loss(200, 0.2, 0)?],
        "edge-fp" => vec![edge_false_positives(20_000, 2000, 1e-3, 0)?],
        "calibration" => vec![alarm_calibration(20, 50_000, 0.05)?],
        "delay" => vec![detection_delay(500, 1.0, 0.1, 0.05)?],
        "compromise" => vec![bounded_compromise(50, 5000)?],
        "penalty" => vec![penalty_round_trip(100, 0)?],
        "bandwidth" => bandwidth(100, 10_000)?,
        "regret" => vec![budget_regret(3, 10_000, 0.05)?],
        _ => unreachable!("suite list checked by caller"),
    })
}

fn finish(
    suite: &'static str,
    property: &'static str,
    start: Instant,
    passed: bool,
    measured: f64,
    bound: f64,
    detail: String,
) -> Check {
    Check {
        suite,
        property,
        passed,
        measured,
        bound,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Every attributed event of every episode has responsibilities summing to
/// one within 1e-9. Episodes use seeds `0..episodes`.
pub fn normalisation(episodes: u64, config: &ExperimentConfig) -> Result<Check> {
    let start = Instant::now();
    let per: Vec<(usize, f64)> = (0..episodes)
        .into_par_iter()
        .map(|seed| -> Result<(usize, f64)> {
            let mut ep = Episode::new(config.clone(), seed)?;
            while !ep.is_done() {
                ep.step()?;
            }
            let Some(ledger) = ep.ledger() else {
                return Ok((0, 0.0));
            };
            let mut attributor = Attributor::new(config.causal.beta)?;
            let mut attributed = 0;
            let mut worst: f64 = 0.0;
            for idx in 0..ledger.len() {
                let rho = attributor.scores(ledger, idx)?;
                if rho.iter().any(|&r| r > 0.0) {
                    attributed += 1;
                    worst = worst.max((rho.iter().sum::<f64>() - 1.0).abs());
                }
            }
            Ok((attributed, worst))
        })
        .collect::<Result<_>>()?;
    let attributed: usize = per.iter().map(|p| p.0).sum();
    let worst = per.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(finish(
        "normalisation",
        "responsibilities of each attributed event sum to one",
        start,
        attributed > 0 && worst <= 1e-9,
        worst,
        1e-9,
        format!("{episodes} episodes, {attributed} attributed events"),
    ))
}

/// Random small DAGs whose edges are delivered through a lossy channel,
/// retried until every edge has arrived: the final responsibilities equal
/// the lossless ones.
pub fn convergence_under_loss(trials: usize, loss: f64, seed: u64) -> Result<Check> {
    const AGENTS: usize = 4;
    const STEPS: u32 = 8;
    let start = Instant::now();
    let alg = HashAlgorithm::Sha256;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut rounds_total = 0u64;
    let mut partial_differs = 0usize;
    for trial in 0..trials {
        let mut events = Vec::new();
        for step in 0..STEPS {
            for agent in 0..AGENTS as u16 {
                let tag = [trial.to_le_bytes().as_slice(), &step.to_le_bytes()].concat();
                events.push(Event::new(alg, step, agent, &tag, &agent.to_le_bytes(), 0.0));
            }
        }
        let edges: Vec<(usize, usize)> = (0..events.len())
            .flat_map(|t| (0..events.len()).map(move |s| (s, t)))
            .filter(|&(s, t)| events[s].step < events[t].step)
            .filter(|_| rng.random::<f64>() < 0.08)
            .collect();
        let mut full = LedgerDag::new(alg, AGENTS);
        let mut lossy = LedgerDag::new(alg, AGENTS);
        for e in &events {
            full.commit(*e);
            lossy.commit(*e);
        }
        for &(s, t) in &edges {
            full.insert_edge(s, t, 0.0, 0)?;
        }
        let last = events.len() - 1;
        let target = compute_rho(&full, last, 0.8)?;
        let mut pending = edges.clone();
        let mut rounds = 0;
        while !pending.is_empty() {
            rounds += 1;
            let mut kept = Vec::new();
            for (s, t) in pending {
                if rng.random::<f64>() >= loss {
                    lossy.insert_edge(s, t, 0.0, rounds)?;
                } else {
                    kept.push((s, t));
                }
            }
            pending = kept;
            if rounds == 1 && !pending.is_empty() {
                let partial = compute_rho(&lossy, last, 0.8)?;
                if partial.scores != target.scores {
                    partial_differs += 1;
                }
            }
        }
        rounds_total += u64::from(rounds);
        for idx in 0..events.len() {
            let a = compute_rho(&full, idx, 0.8)?;
            let b = compute_rho(&lossy, idx, 0.8)?;
            for (x, y) in a.scores.iter().zip(&b.scores) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    Ok(finish(
        "convergence",
        "responsibilities under loss converge to the lossless values",
        start,
        worst <= 1e-9,
        worst,
        1e-9,
        format!(
            "{trials} DAGs, loss {loss}, mean {:.2} delivery rounds, {partial_differs} differed after one round",
            rounds_total as f64 / trials.max(1) as f64
        ),
    ))
}

/// Independent Gaussian pair streams: the fraction with any edge over the
/// whole stream stays within `alpha + 3` binomial standard errors.
pub fn edge_false_positives(pairs: usize, steps: u64, alpha: f64, seed: u64) -> Result<Check> {
    let start = Instant::now();
    let schedule = ThresholdSchedule::for_alpha(alpha)?;
    let thresholds: Vec<f64> = (1..=steps).map(|t| schedule.threshold_at(t)).collect::<Result<_>>()?;
    let hits: usize = (0..pairs)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64 + 1);
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            let mut g = GrangerState::new(DEFAULT_LAGS, DEFAULT_WINDOW);
            let mut hit = false;
            for h in &thresholds {
                let f = g.update(normal.sample(&mut rng), normal.sample(&mut rng));
                hit |= g.is_ready() && f > *h;
            }
            usize::from(hit)
        })
        .sum();
    let rate = hits as f64 / pairs as f64;
    let bound = alpha + 3.0 * (alpha * (1.0 - alpha) / pairs as f64).sqrt();
    let h0 = h0_for_alpha(alpha)?;
    Ok(finish(
        "edge-fp",
        "null pair streams rarely gain an edge",
        start,
        rate <= bound,
        rate,
        bound,
        format!("{pairs} pairs x {steps} steps, {hits} with an edge, h0 = {h0:.4}"),
    ))
}

/// Adaptive CUSUM on a stationary standard normal stream: each seed's alarm
/// frequency lands within 0.01 of `alpha`.
pub fn alarm_calibration(seeds: u64, steps: u64, alpha: f64) -> Result<Check> {
    let start = Instant::now();
    let spec = NormSpec::new(0, NormKind::Load, 0.0, 0.1, alpha)?;
    let rates: Vec<f64> = (0..seeds)
        .into_par_iter()
        .map(|seed| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            let mut st = DetectorState::new(DEFAULT_INITIAL_THRESHOLD)?;
            for _ in 0..steps {
                cusum_step(&mut st, normal.sample(&mut rng), &spec);
            }
            Ok(st.alarm_rate())
        })
        .collect::<Result<_>>()?;
    let worst = rates.iter().map(|r| (r - alpha).abs()).fold(0.0, f64::max);
    let (lo, hi) = rates
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &r| (l.min(r), h.max(r)));
    Ok(finish(
        "calibration",
        "long-run alarm frequency matches the target",
        start,
        worst <= 0.01,
        worst,
        0.01,
        format!("{seeds} seeds x {steps} steps, rates in [{lo:.4}, {hi:.4}]"),
    ))
}

/// Mean delay to the first alarm after a mean shift of `drift` stays within
/// `h* / (drift - slack)` plus two standard errors, with `h*` the threshold
/// at the change point. Delay counts post-change samples up to the alarm.
pub fn detection_delay(trials: u64, drift: f64, slack: f64, alpha: f64) -> Result<Check> {
    const BURN_IN: u64 = 20_000;
    let start = Instant::now();
    let spec = NormSpec::new(0, NormKind::Load, 0.0, slack, alpha)?;
    let runs: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|seed| -> Result<(f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            let mut st = DetectorState::new(DEFAULT_INITIAL_THRESHOLD)?;
            for _ in 0..BURN_IN {
                cusum_step(&mut st, normal.sample(&mut rng), &spec);
            }
            let h_star = st.h;
            let mut delay = 0u64;
            loop {
                delay += 1;
                if cusum_step(&mut st, drift + normal.sample(&mut rng), &spec).alert {
                    break;
                }
            }
            Ok((h_star, delay as f64))
        })
        .collect::<Result<_>>()?;
    let n = runs.len() as f64;
    let h_star = runs.iter().map(|r| r.0).sum::<f64>() / n;
    let mean = runs.iter().map(|r| r.1).sum::<f64>() / n;
    let var = runs.iter().map(|r| (r.1 - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let bound = crate::detection::lorden_delay_bound(h_star, drift, slack)? + 2.0 * (var / n).sqrt();
    Ok(finish(
        "delay",
        "mean detection delay within the worst-case bound",
        start,
        mean <= bound,
        mean,
        bound,
        format!("{trials} trials, drift {drift}, slack {slack}, mean h* {h_star:.4}"),
    ))
}

/// The scripted-adversary scenario: ten agents whose honest members are
/// guarded, non-exploring learners, and agent 0 requesting `q_max` from step
/// 501 whenever it is not under intervention. Gain ceiling 1, H = 25,
/// shaping weight 0.2, global alarm budget 0.05.
pub fn adversary_fixture() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.world.honest_policy = PolicyKind::StaticGuardedLearner;
    c.world.guard_cap = Some(50.0);
    c.world.exploration = false;
    c.detection.warmup = 500;
    c.steps = 10_000;
    c.script = Some(Script::Adversary {
        agent: 0,
        active_from: 501,
        g_max: 1.0,
        harm: 3.0,
    });
    c
}

/// Four-agent cartel activating at step 301 among ten agents with guarded
/// honest learners.
pub fn cartel_fixture(baseline: Baseline) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.world.honest_policy = PolicyKind::StaticGuardedLearner;
    c.world.guard_cap = Some(50.0);
    c.detection.warmup = 300;
    c.baseline = baseline;
    c.script = Some(Script::Cartel {
        size: 4,
        active_from: 301,
        low: 0.8,
        high: 1.0,
    });
    c
}

/// Largest `C_T / T` over `T >= from` for one episode.
pub fn compromise_suffix_max(config: &ExperimentConfig, seed: u64, from: u32) -> Result<f64> {
    let mut ep = Episode::new(config.clone(), seed)?;
    let mut violations = 0u64;
    let mut worst: f64 = 0.0;
    while !ep.is_done() {
        let r = ep.step()?;
        violations += u64::from(r.outcome.violation);
        if r.outcome.t >= from {
            worst = worst.max(violations as f64 / f64::from(r.outcome.t));
        }
    }
    Ok(worst)
}

/// Every seed's suffix maximum of `C_T / T` from `from` on stays within
/// 0.02 of the analytic ceiling.
pub fn bounded_compromise(seeds: u64, from: u32) -> Result<Check> {
    let start = Instant::now();
    let config = adversary_fixture();
    let iv = &config.intervention;
    let ceiling = eta_star(
        config.detection.global_budget,
        f64::from(iv.window),
        config.supervisor().playbook.lambda(),
        iv.g_max,
    )?;
    let ratios: Vec<f64> = (0..seeds)
        .into_par_iter()
        .map(|s| compromise_suffix_max(&config, s, from))
        .collect::<Result<_>>()?;
    let bound = ceiling + 0.02;
    let within = ratios.iter().filter(|&&r| r <= bound).count();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    let mean = ratios.iter().sum::<f64>() / ratios.len().max(1) as f64;
    Ok(finish(
        "compromise",
        "compromise ratio stays under the analytic ceiling",
        start,
        within == ratios.len(),
        worst,
        bound,
        format!(
            "ceiling {ceiling:.4}, {within}/{seeds} seeds within, mean suffix max {mean:.4}, T from {from} to {}",
            config.steps
        ),
    ))
}

/// `eta_star(lambda_min(eta)) = eta` on random parameter draws.
pub fn penalty_round_trip(draws: usize, seed: u64) -> Result<Check> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let alpha = rng.random_range(0.001..0.2);
        let window = f64::from(rng.random_range(1u32..=200));
        let g_max = rng.random_range(0.0..5.0);
        let eta = rng.random_range(0.01..1.0);
        let lambda = lambda_min(g_max, alpha, window, eta)?;
        worst = worst.max((eta_star(alpha, window, lambda, g_max)? - eta).abs());
    }
    Ok(finish(
        "penalty",
        "minimal penalty reproduces the target ceiling",
        start,
        worst <= 1e-12,
        worst,
        1e-12,
        format!("{draws} draws"),
    ))
}

/// Live ledger bytes never exceed the per-step bound on a long run, and the
/// formula gives 6048 B for the reference parameters.
pub fn bandwidth(agents: usize, steps: u32) -> Result<Vec<Check>> {
    let start = Instant::now();
    let formula = bytes_per_step_bound(100, 8, 8);
    let formula_check = finish(
        "bandwidth",
        "reference bound is 6048 bytes per step",
        start,
        formula == 6048,
        formula as f64,
        6048.0,
        "N = 100, d_max = 8, h = 8".into(),
    );
    let start = Instant::now();
    let mut config = ExperimentConfig::default();
    config.world.n_agents = agents;
    config.steps = steps;
    let mut ep = Episode::new(config, 0)?;
    let bound = ep
        .byte_bound()
        .ok_or_else(|| Error::InvalidArgument("bandwidth check needs the full supervision stack".into()))?;
    let mut worst = 0u64;
    let mut over = 0u64;
    while !ep.is_done() {
        let r = ep.step()?;
        worst = worst.max(r.ledger_bytes);
        over += u64::from(r.ledger_bytes > bound);
    }
    let live_check = finish(
        "bandwidth",
        "live bytes per step never exceed the bound",
        start,
        over == 0,
        worst as f64,
        bound as f64,
        format!("N = {agents}, {steps} steps, {over} steps over"),
    );
    Ok(vec![formula_check, live_check])
}

/// One norm fires every step: admitted alerts stay within
/// `budget T + 2 sqrt(T ln M)`.
pub fn budget_regret(norms: usize, steps: u64, budget: f64) -> Result<Check> {
    let start = Instant::now();
    let mut allocator = BudgetAllocator::new(norms, budget, steps)?;
    for _ in 0..steps {
        allocator.allocate_alert(&[0])?;
    }
    let admitted = allocator.admitted() as f64;
    let t = steps as f64;
    let bound = budget * t + 2.0 * (t * (norms as f64).ln()).sqrt();
    Ok(finish(
        "regret",
        "admitted alerts within budget plus regret",
        start,
        admitted <= bound,
        admitted,
        bound,
        format!("{norms} norms, {steps} steps, final weight of the firing norm {:.3e}", allocator.weights()[0]),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_lists_names() {
        match verify("nope") {
            Err(Error::UnknownSuite { available, .. }) => {
                assert!(available.contains("compromise") && available.ends_with("all"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn quick_suites_pass() {
        assert!(penalty_round_trip(100, 0).unwrap().passed);
        assert!(budget_regret(3, 10_000, 0.05).unwrap().passed);
        assert!(convergence_under_loss(20, 0.2, 1).unwrap().passed);
    }

    #[test]
    fn fixtures_validate() {
        adversary_fixture().validate().unwrap();
        cartel_fixture(Baseline::LearnerOnly).validate().unwrap();
    }
}
