//! Seeded multi-trial experiments, summaries, sweeps and engine comparisons.
//!
//! Trial `i` of an experiment always draws from the stream
//! `(spec.seed, trial = i)`, so records do not depend on how trials are
//! scheduled across threads.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent;
use crate::aggregate::{self, SyncProtocol};
use crate::error::{Error, Result};
use crate::model::{check_colors, AgentPopulation, Configuration, ProtocolParams};
use crate::oracle::{self, split_evenly};
use crate::report::{RoundKind, RoundReport};
use crate::rng::RngStream;
use crate::stats::{self, TestResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    TwoChoices,
    Memory,
    Async,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::TwoChoices => "two-choices",
            Protocol::Memory => "memory",
            Protocol::Async => "async",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-choices" => Ok(Protocol::TwoChoices),
            "memory" => Ok(Protocol::Memory),
            "async" => Ok(Protocol::Async),
            other => Err(Error::Parse(format!("unknown protocol '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Agent,
    Aggregate,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Agent => "agent",
            Engine::Aggregate => "aggregate",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "agent" => Ok(Engine::Agent),
            "aggregate" => Ok(Engine::Aggregate),
            other => Err(Error::Parse(format!("unknown engine '{other}'"))),
        }
    }
}

/// How the initial configuration of every trial is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Initializer {
    /// Leader at `ceil(n/k) + bias`, the rest split as evenly as possible.
    EqualPlusBias { n: u64, k: usize, bias: u64 },
    Theorem3 { n: u64, k: usize, z_prime: f64 },
    Theorem4 { n: u64, k: usize, z: f64 },
    Custom(Vec<u64>),
}

impl Initializer {
    pub fn configuration(&self) -> Result<Configuration> {
        match self {
            Initializer::EqualPlusBias { n, k, bias } => equal_plus_bias(*n, *k, *bias),
            Initializer::Theorem3 { n, k, z_prime } => oracle::theorem3_configuration(*n, *k, *z_prime),
            Initializer::Theorem4 { n, k, z } => oracle::theorem4_configuration(*n, *k, *z),
            Initializer::Custom(counts) => Configuration::new(counts.clone()),
        }
    }

    /// The additive bias, for initializers that have one.
    pub fn bias(&self) -> Option<u64> {
        match self {
            Initializer::EqualPlusBias { bias, .. } => Some(*bias),
            _ => None,
        }
    }
}

/// `c_1 = ceil(n/k) + bias`, remaining `n - c_1` split evenly over `k - 1` colors.
pub fn equal_plus_bias(n: u64, k: usize, bias: u64) -> Result<Configuration> {
    if n == 0 || k == 0 {
        return Err(Error::Infeasible("needs n >= 1 and k >= 1".into()));
    }
    check_colors(k)?;
    let lead = n
        .div_ceil(k as u64)
        .checked_add(bias)
        .filter(|&l| l <= n)
        .ok_or_else(|| Error::Infeasible(format!("leader ceil(n/k)+{bias} exceeds n={n}")))?;
    if k == 1 {
        return Configuration::new(vec![n]);
    }
    let mut counts = vec![lead];
    counts.extend(split_evenly(n - lead, k - 1));
    Configuration::new(counts)
}

/// Leader exactly `gap` ahead of the runner-up; the other colors split the
/// remainder evenly without exceeding the runner-up.
pub fn gap_configuration(n: u64, k: usize, gap: u64) -> Result<Configuration> {
    if k < 2 {
        return Err(Error::Infeasible("a gap needs k >= 2".into()));
    }
    check_colors(k)?;
    if gap > n {
        return Err(Error::Infeasible(format!("gap {gap} exceeds n={n}")));
    }
    let second = (n - gap).div_ceil(k as u64);
    let lead = second + gap;
    let rest = n
        .checked_sub(lead + second)
        .ok_or_else(|| Error::Infeasible(format!("gap {gap} infeasible for n={n}, k={k}")))?;
    let mut counts = vec![lead, second];
    counts.extend(split_evenly(rest, k - 2));
    if k == 2 && rest > 0 {
        return Err(Error::Infeasible(format!("n - gap = {} is odd for k = 2", n - gap)));
    }
    Configuration::new(counts)
}

/// Largest population the agent engine will allocate.
pub const MAX_AGENT_POPULATION: u64 = 1 << 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub protocol: Protocol,
    pub engine: Engine,
    pub initializer: Initializer,
    pub trials: u64,
    pub seed: u64,
    pub params: ProtocolParams,
    pub record_trajectory: bool,
}

impl ExperimentSpec {
    pub fn new(protocol: Protocol, engine: Engine, initializer: Initializer) -> Self {
        ExperimentSpec {
            protocol,
            engine,
            initializer,
            trials: 1,
            seed: 0,
            params: ProtocolParams::default(),
            record_trajectory: false,
        }
    }

    pub fn trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn params(mut self, params: ProtocolParams) -> Self {
        self.params = params;
        self
    }

    pub fn with_trajectory(mut self) -> Self {
        self.record_trajectory = true;
        self
    }

    /// Checks the spec and builds the initial configuration.
    pub fn validate(&self) -> Result<Configuration> {
        if self.protocol == Protocol::Async && self.engine != Engine::Agent {
            return Err(Error::InvalidParameter(
                "the async protocol requires the agent engine".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        self.params.validate()?;
        let cfg = self.initializer.configuration()?;
        if self.engine == Engine::Agent && cfg.n() > MAX_AGENT_POPULATION {
            return Err(Error::InvalidParameter(format!(
                "n={} exceeds the agent engine limit of {MAX_AGENT_POPULATION}",
                cfg.n()
            )));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub protocol: Protocol,
    pub engine: Engine,
    pub n: u64,
    pub k: usize,
    /// Synchronous rounds, or activations for the async protocol.
    pub rounds: u64,
    /// Activations divided by `n`; async only.
    pub time_units: Option<f64>,
    pub winner: Option<usize>,
    pub converged: bool,
    /// Largest color of the initial configuration.
    pub initial_leader: usize,
    pub phases: Option<u32>,
    pub trajectory: Option<Vec<RoundReport>>,
}

impl TrialRecord {
    /// Rounds for synchronous protocols, time units for the async one.
    pub fn duration(&self) -> f64 {
        self.time_units.unwrap_or(self.rounds as f64)
    }

    pub fn leader_won(&self) -> bool {
        self.winner == Some(self.initial_leader)
    }
}

/// Runs one trial from `cfg` on the stream `(spec.seed, trial)`.
pub fn run_trial(spec: &ExperimentSpec, cfg: &Configuration, trial: u64) -> TrialRecord {
    let stream = RngStream::new(spec.seed).for_trial(trial);
    let mut trajectory = spec.record_trajectory.then(Vec::new);
    let mut observe = |r: &RoundReport| {
        if let Some(t) = trajectory.as_mut() {
            t.push(r.clone());
        }
    };
    let (rounds, time_units, winner, converged, phases) = match (spec.protocol, spec.engine) {
        (Protocol::Async, _) => {
            let pop = AgentPopulation::from_configuration(cfg);
            let (_, out) = agent::run_async_protocol(pop, &spec.params, &stream);
            (out.activations, Some(out.time_units), out.winner, out.converged, None)
        }
        (Protocol::TwoChoices, Engine::Agent) => {
            let pop = AgentPopulation::from_configuration(cfg);
            let (_, out) = agent::run_two_choices(pop, &spec.params, &stream, &mut observe);
            (out.rounds, None, out.winner, out.converged, out.phases)
        }
        (Protocol::Memory, Engine::Agent) => {
            let pop = AgentPopulation::from_configuration(cfg);
            let (_, out) = agent::run_memory_protocol(pop, &spec.params, &stream, &mut observe);
            (out.rounds, None, out.winner, out.converged, out.phases)
        }
        (p, Engine::Aggregate) => {
            let sync = if p == Protocol::Memory {
                SyncProtocol::Memory
            } else {
                SyncProtocol::TwoChoices
            };
            let out = aggregate::run_protocol_agg(cfg.clone(), sync, &spec.params, &stream, &mut observe);
            (out.rounds, None, out.winner, out.converged, out.phases)
        }
    };
    TrialRecord {
        trial,
        seed: spec.seed,
        protocol: spec.protocol,
        engine: spec.engine,
        n: cfg.n(),
        k: cfg.k(),
        rounds,
        time_units,
        winner: winner.map(|w| w.index()),
        converged,
        initial_leader: cfg.leader().index(),
        phases,
        trajectory,
    }
}

/// Runs every trial of `spec` on the global rayon pool.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<TrialRecord>> {
    let cfg = spec.validate()?;
    Ok((0..spec.trials)
        .into_par_iter()
        .map(|t| run_trial(spec, &cfg, t))
        .collect())
}

/// Like [`run_experiment`] on a dedicated pool of `threads` workers.
pub fn run_experiment_with_threads(spec: &ExperimentSpec, threads: usize) -> Result<Vec<TrialRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| run_experiment(spec))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub trials: u64,
    pub mean_rounds: f64,
    pub median_rounds: f64,
    pub std_rounds: f64,
    /// Fraction of trials won by the initially largest color.
    pub win_rate: f64,
    pub win_ci_lo: f64,
    pub win_ci_hi: f64,
}

pub fn summarize(records: &[TrialRecord]) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::Empty("no trial records to summarize".into()));
    }
    let durations: Vec<f64> = records.iter().map(TrialRecord::duration).collect();
    let wins = records.iter().filter(|r| r.leader_won()).count() as u64;
    let trials = records.len() as u64;
    let (lo, hi) = stats::wilson_interval(wins, trials, stats::Z95);
    Ok(Summary {
        trials,
        mean_rounds: stats::mean(&durations).expect("non-empty"),
        median_rounds: stats::median(&durations).expect("non-empty"),
        std_rounds: stats::std_dev(&durations).expect("non-empty"),
        win_rate: wins as f64 / trials as f64,
        win_ci_lo: lo,
        win_ci_hi: hi,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub protocol: Protocol,
    pub engine: Engine,
    pub n: u64,
    pub k: usize,
    pub bias: Option<u64>,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
}

/// Runs and summarizes each spec in order, one cell per spec.
pub fn sweep(specs: &[ExperimentSpec], threads: Option<usize>) -> Result<SweepResult> {
    if specs.is_empty() {
        return Err(Error::Empty("sweep grid has no cells".into()));
    }
    let mut configs = Vec::with_capacity(specs.len());
    for s in specs {
        configs.push(s.validate()?);
    }
    let run = |spec: &ExperimentSpec| match threads {
        Some(t) => run_experiment_with_threads(spec, t),
        None => run_experiment(spec),
    };
    let mut cells = Vec::with_capacity(specs.len());
    for (spec, cfg) in specs.iter().zip(&configs) {
        let records = run(spec)?;
        cells.push(SweepCell {
            protocol: spec.protocol,
            engine: spec.engine,
            n: cfg.n(),
            k: cfg.k(),
            bias: spec.initializer.bias(),
            summary: summarize(&records)?,
        });
    }
    Ok(SweepResult { cells })
}

/// Statistical agreement between the agent and aggregate engines.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineComparison {
    /// Homogeneity of the one-round next-configuration distributions.
    pub one_round: TestResult,
    /// Goodness of fit of each engine against the exact kernel, when enumerable.
    pub agent_vs_exact: Option<TestResult>,
    pub aggregate_vs_exact: Option<TestResult>,
    /// Two-sample KS on rounds to convergence of the two-choices protocol.
    pub rounds_ks: TestResult,
}

impl EngineComparison {
    pub fn min_p_value(&self) -> f64 {
        [
            Some(self.one_round.p_value),
            self.agent_vs_exact.map(|r| r.p_value),
            self.aggregate_vs_exact.map(|r| r.p_value),
            Some(self.rounds_ks.p_value),
        ]
        .into_iter()
        .flatten()
        .fold(1.0, f64::min)
    }
}

pub const COMPARE_MAX_N: u64 = 10_000;

const AGGREGATE_SALT: u64 = 0x5bd1_e995_0000_0001;

/// One-round distributions of both engines.
pub fn one_round_histograms(
    cfg: &Configuration,
    trials: u64,
    seed: u64,
) -> (BTreeMap<Vec<u64>, u64>, BTreeMap<Vec<u64>, u64>) {
    let pop = AgentPopulation::from_configuration(cfg);
    let agent_hist = (0..trials)
        .into_par_iter()
        .fold(BTreeMap::new, |mut h: BTreeMap<Vec<u64>, u64>, t| {
            let s = RngStream::new(seed).for_trial(t).for_round(1);
            *h.entry(agent::two_choices_round(&pop, &s, true).color_counts()).or_insert(0) += 1;
            h
        })
        .reduce(BTreeMap::new, merge_hist);
    let agg_hist = (0..trials)
        .into_par_iter()
        .fold(BTreeMap::new, |mut h: BTreeMap<Vec<u64>, u64>, t| {
            let s = RngStream::new(seed ^ AGGREGATE_SALT).for_trial(t).for_round(1);
            let next = aggregate::two_choices_round_agg(cfg, &s, true);
            *h.entry(next.into_counts()).or_insert(0) += 1;
            h
        })
        .reduce(BTreeMap::new, merge_hist);
    (agent_hist, agg_hist)
}

fn merge_hist(mut a: BTreeMap<Vec<u64>, u64>, b: BTreeMap<Vec<u64>, u64>) -> BTreeMap<Vec<u64>, u64> {
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    a
}

fn gof_against_exact(
    hist: &BTreeMap<Vec<u64>, u64>,
    exact: &oracle::TransitionDistribution,
) -> Result<TestResult> {
    let mut observed = Vec::new();
    let mut probs = Vec::new();
    for (cfg, p) in exact.iter() {
        observed.push(*hist.get(cfg.counts()).unwrap_or(&0));
        probs.push(p);
    }
    let unexplained: u64 = hist
        .iter()
        .filter(|(k, _)| exact.probability(k) == 0.0)
        .map(|(_, v)| v)
        .sum();
    observed.push(unexplained);
    probs.push(0.0);
    stats::chi_square_gof(&observed, &probs, 5.0)
}

/// Rounds to convergence of the two-choices protocol for each engine.
pub fn convergence_rounds(cfg: &Configuration, trials: u64, seed: u64, engine: Engine) -> Vec<f64> {
    let params = ProtocolParams::default();
    (0..trials)
        .into_par_iter()
        .map(|t| match engine {
            Engine::Agent => {
                let s = RngStream::new(seed).for_trial(t);
                let pop = AgentPopulation::from_configuration(cfg);
                agent::run_two_choices(pop, &params, &s, |_| {}).1.rounds as f64
            }
            Engine::Aggregate => {
                let s = RngStream::new(seed ^ AGGREGATE_SALT).for_trial(t);
                aggregate::run_two_choices_agg(cfg.clone(), &params, &s, |_| {}).rounds as f64
            }
        })
        .collect()
}

/// Chi-square on one-round outcomes and KS on rounds to convergence between
/// the engines, plus goodness of fit against the exact kernel when `cfg` is
/// small enough to enumerate.
pub fn compare_engines(cfg: &Configuration, trials: u64, seed: u64) -> Result<EngineComparison> {
    if cfg.n() > COMPARE_MAX_N {
        return Err(Error::TooLarge(format!(
            "engine comparison supports n <= {COMPARE_MAX_N}, got {}",
            cfg.n()
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let (agent_hist, agg_hist) = one_round_histograms(cfg, trials, seed);
    let keys: Vec<&Vec<u64>> = agent_hist.keys().chain(agg_hist.keys()).collect();
    let mut union: Vec<&Vec<u64>> = keys;
    union.sort();
    union.dedup();
    let a: Vec<u64> = union.iter().map(|k| *agent_hist.get(*k).unwrap_or(&0)).collect();
    let b: Vec<u64> = union.iter().map(|k| *agg_hist.get(*k).unwrap_or(&0)).collect();
    let one_round = stats::chi_square_two_sample(&a, &b, 10)?;

    let (agent_vs_exact, aggregate_vs_exact) = match oracle::exact_transition(cfg) {
        Ok(exact) => (
            Some(gof_against_exact(&agent_hist, &exact)?),
            Some(gof_against_exact(&agg_hist, &exact)?),
        ),
        Err(_) => (None, None),
    };

    let ra = convergence_rounds(cfg, trials, seed, Engine::Agent);
    let rb = convergence_rounds(cfg, trials, seed, Engine::Aggregate);
    let rounds_ks = stats::ks_two_sample(&ra, &rb)?;
    Ok(EngineComparison {
        one_round,
        agent_vs_exact,
        aggregate_vs_exact,
        rounds_ks,
    })
}

/// One row of the bit trajectory of a memory run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BitRow {
    pub t: u64,
    pub phase: Option<u32>,
    pub kind: RoundKind,
    /// `x_1(t) / x(t)` for the initially largest color; `None` when `x(t) = 0`.
    pub x1_over_x: Option<f64>,
    /// Relative size of the initially largest color.
    pub a_over_n: f64,
    /// `x(t) / n`.
    pub x_over_n: f64,
}

/// Converts memory-protocol round reports into bit-share rows for `leader`.
pub fn bit_rows(reports: &[RoundReport], leader: usize) -> Vec<BitRow> {
    reports
        .iter()
        .map(|r| {
            let n = r.configuration.n() as f64;
            let set = r.set_counts.as_deref();
            let x = set.map_or(0, |s| s.iter().sum::<u64>());
            let x1 = set.map_or(0, |s| s[leader]);
            BitRow {
                t: r.round,
                phase: r.phase,
                kind: r.kind,
                x1_over_x: (x > 0).then(|| x1 as f64 / x as f64),
                a_over_n: r.configuration.counts()[leader] as f64 / n,
                x_over_n: x as f64 / n,
            }
        })
        .collect()
}

/// Bit-share trajectory of trial 0 of a memory-protocol spec.
pub fn trajectory_bits(spec: &ExperimentSpec) -> Result<Vec<BitRow>> {
    if spec.protocol != Protocol::Memory {
        return Err(Error::InvalidParameter("bit trajectories need the memory protocol".into()));
    }
    if !spec.record_trajectory {
        return Err(Error::InvalidParameter("trajectory recording is disabled".into()));
    }
    let cfg = spec.validate()?;
    let record = run_trial(spec, &cfg, 0);
    let reports = record.trajectory.expect("recording enabled");
    Ok(bit_rows(&reports, record.initial_leader))
}

/// `ceil(sqrt(n ln n))`.
pub fn sqrt_n_ln_n(n: u64) -> u64 {
    let nf = n as f64;
    (nf * nf.ln()).sqrt().ceil() as u64
}

/// `ceil(sqrt(n ln^3 n))`.
pub fn sqrt_n_ln3_n(n: u64) -> u64 {
    let nf = n as f64;
    (nf * nf.ln().powi(3)).sqrt().ceil() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(winner: Option<usize>, rounds: u64) -> TrialRecord {
        TrialRecord {
            trial: 0,
            seed: 0,
            protocol: Protocol::TwoChoices,
            engine: Engine::Aggregate,
            n: 10,
            k: 2,
            rounds,
            time_units: None,
            winner,
            converged: winner.is_some(),
            initial_leader: 0,
            phases: None,
            trajectory: None,
        }
    }

    #[test]
    fn equal_plus_bias_layout() {
        let c = equal_plus_bias(100, 3, 10).unwrap();
        assert_eq!(c.counts(), &[44, 28, 28]);
        let c = equal_plus_bias(10, 1, 0).unwrap();
        assert_eq!(c.counts(), &[10]);
        assert!(equal_plus_bias(10, 2, 6).is_err());
        assert!(equal_plus_bias(10, 1, 1).is_err());
    }

    #[test]
    fn gap_configuration_layout() {
        let c = gap_configuration(100_000, 10, 34_368).unwrap();
        let (a, b) = c.top_two();
        assert_eq!(a - b, 34_368);
        assert_eq!(c.n(), 100_000);
        assert!(c.counts()[2..].iter().all(|&x| x <= b));
        let c = gap_configuration(100_000, 2, 34_368).unwrap();
        assert_eq!(c.counts(), &[67_184, 32_816]);
        assert!(gap_configuration(11, 2, 4).is_err());
    }

    #[test]
    fn bias_formulas() {
        // sqrt(1e5 ln 1e5) = 1072.99...
        assert_eq!(sqrt_n_ln_n(100_000), 1073);
        assert_eq!(sqrt_n_ln3_n(100_000), 12_354);
    }

    #[test]
    fn spec_validation() {
        let init = Initializer::Custom(vec![5, 5]);
        let s = ExperimentSpec::new(Protocol::Async, Engine::Aggregate, init.clone());
        assert!(s.validate().is_err());
        let s = ExperimentSpec::new(Protocol::Memory, Engine::Aggregate, init.clone()).trials(0);
        assert!(s.validate().is_err());
        let s = ExperimentSpec::new(
            Protocol::TwoChoices,
            Engine::Aggregate,
            Initializer::EqualPlusBias { n: 10, k: 2, bias: 9 },
        );
        assert!(matches!(s.validate(), Err(Error::Infeasible(_))));
        assert!(run_experiment(&s).is_err());
    }

    #[test]
    fn unanimous_single_trial() {
        for protocol in [Protocol::TwoChoices, Protocol::Memory, Protocol::Async] {
            let s = ExperimentSpec::new(protocol, Engine::Agent, Initializer::Custom(vec![0, 8]));
            let recs = run_experiment(&s).unwrap();
            assert_eq!(recs.len(), 1);
            assert_eq!(recs[0].rounds, 0);
            assert!(recs[0].converged);
            assert_eq!(recs[0].winner, Some(1));
        }
    }

    #[test]
    fn summarize_constant_rounds() {
        let recs: Vec<_> = (0..5).map(|_| record(Some(0), 7)).collect();
        let s = summarize(&recs).unwrap();
        assert_eq!((s.mean_rounds, s.median_rounds, s.std_rounds), (7.0, 7.0, 0.0));
        assert_eq!(s.win_rate, 1.0);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn summarize_split_winners() {
        let recs: Vec<_> = (0..1000)
            .map(|i| record(Some(i % 2), 3 + (i as u64 % 4)))
            .collect();
        let s = summarize(&recs).unwrap();
        assert_eq!(s.win_rate, 0.5);
        assert!(s.win_ci_lo >= 0.46 && s.win_ci_hi <= 0.54);
        assert!(s.win_ci_lo <= s.win_rate && s.win_rate <= s.win_ci_hi);
        let raw: f64 = recs.iter().map(|r| r.rounds as f64).sum::<f64>() / 1000.0;
        assert_eq!(s.mean_rounds, raw);
    }

    #[test]
    fn sweep_rejects_empty_grid() {
        assert!(sweep(&[], None).is_err());
    }

    #[test]
    fn trajectory_bits_requires_memory_and_recording() {
        let s = ExperimentSpec::new(Protocol::TwoChoices, Engine::Aggregate, Initializer::Custom(vec![3, 2]))
            .with_trajectory();
        assert!(trajectory_bits(&s).is_err());
        let s = ExperimentSpec::new(Protocol::Memory, Engine::Aggregate, Initializer::Custom(vec![3, 2]));
        assert!(trajectory_bits(&s).is_err());
    }

    #[test]
    fn trajectory_bits_unanimous() {
        let s = ExperimentSpec::new(Protocol::Memory, Engine::Aggregate, Initializer::Custom(vec![9]))
            .with_trajectory();
        let rows = trajectory_bits(&s).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].a_over_n, 1.0);
        // no bits yet at t = 0
        assert_eq!(rows[0].x1_over_x, None);
    }

    #[test]
    fn compare_engines_guard() {
        let big = Configuration::new(vec![6000, 5000]).unwrap();
        assert!(matches!(compare_engines(&big, 10, 1), Err(Error::TooLarge(_))));
    }

    #[test]
    fn compare_engines_unanimous() {
        let c = Configuration::new(vec![4, 0]).unwrap();
        let r = compare_engines(&c, 1000, 3).unwrap();
        assert!(r.min_p_value() > 0.999);
    }
}
