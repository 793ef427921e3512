//! The acceptance suite: each criterion runs a seeded experiment and compares
//! it with a fixed threshold. Shared by the `acceptance` test target and the
//! CLI `validate` command.

use std::fmt;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use crate::agent;
use crate::aggregate;
use crate::harness::{
    self, equal_plus_bias, gap_configuration, sqrt_n_ln3_n, sqrt_n_ln_n, Engine, ExperimentSpec,
    Initializer, Protocol,
};
use crate::model::{AgentPopulation, AggregateState, Configuration, ProtocolParams};
use crate::oracle;
use crate::report::{RoundKind, RoundReport};
use crate::rng::RngStream;
use crate::sampling::sample_multinomial;
use crate::stats;

/// Full runs every criterion at its stated size; Fast trims trial counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Full,
    Fast,
}

impl Mode {
    fn pick<T>(self, full: T, fast: T) -> T {
        match self {
            Mode::Full => full,
            Mode::Fast => fast,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

pub type Criterion = fn(Mode, u64) -> CriterionResult;

/// Every criterion in order, with its id.
pub const CRITERIA: [(u32, Criterion); 10] = [
    (1, majority_wins),
    (2, near_tie_overtake),
    (3, rounds_scale_with_k),
    (4, memory_protocol_wins_fast),
    (5, memory_beats_two_choices),
    (6, oracle_agreement),
    (7, brute_force_equivalence),
    (8, invariant_suites),
    (9, gap_growth),
    (10, bit_saturation),
];

pub const DEFAULT_SEED: u64 = 20_151_202;

pub fn run_all(mode: Mode, seed: u64) -> Vec<CriterionResult> {
    CRITERIA.iter().map(|(_, c)| c(mode, seed)).collect()
}

fn timed(
    id: u32,
    name: &'static str,
    body: impl FnOnce() -> (bool, String),
) -> CriterionResult {
    let start = Instant::now();
    let (passed, detail) = body();
    CriterionResult {
        id,
        name,
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

fn within_budget(start: Instant, limit: Duration) -> (bool, String) {
    let e = start.elapsed();
    (e < limit, format!("{:.1}s of {}s budget", e.as_secs_f64(), limit.as_secs()))
}

fn run(spec: &ExperimentSpec) -> Vec<harness::TrialRecord> {
    harness::run_experiment(spec).expect("acceptance specs are valid")
}

/// Criterion 1: Two-choices with bias `ceil(4 sqrt(n ln n))` elects the leader.
pub fn majority_wins(mode: Mode, seed: u64) -> CriterionResult {
    timed(1, "two-choices majority wins", || {
        let start = Instant::now();
        let n = 100_000u64;
        let bias = (4.0 * ((n as f64) * (n as f64).ln()).sqrt()).ceil() as u64;
        let trials = mode.pick(100, 40);
        let need = mode.pick(95, 38);
        let spec = ExperimentSpec::new(
            Protocol::TwoChoices,
            Engine::Aggregate,
            Initializer::EqualPlusBias { n, k: 10, bias },
        )
        .trials(trials)
        .seed(seed);
        let wins = run(&spec).iter().filter(|r| r.leader_won()).count() as u64;
        let (fast_enough, budget) = within_budget(start, Duration::from_secs(120));
        (
            wins >= need && fast_enough,
            format!("bias {bias}: leader won {wins}/{trials} (need {need}); {budget}"),
        )
    })
}

/// Criterion 2: From the near-tie construction the runner-up overtakes after one round
/// with constant probability.
pub fn near_tie_overtake(mode: Mode, seed: u64) -> CriterionResult {
    timed(2, "near-tie overtake after one round", || {
        let start = Instant::now();
        let trials = mode.pick(2000, 2000);
        let spec = ExperimentSpec::new(
            Protocol::TwoChoices,
            Engine::Aggregate,
            Initializer::Theorem3 { n: 10_000, k: 3, z_prime: 1.0 },
        )
        .trials(trials)
        .seed(seed)
        .with_trajectory();
        let records = run(&spec);
        let overtaken = records
            .iter()
            .filter(|r| {
                let t = r.trajectory.as_ref().expect("trajectory recorded");
                let c = t[1].configuration.counts();
                c[0] < c[1]
            })
            .count();
        let frac = overtaken as f64 / trials as f64;
        let (fast_enough, budget) = within_budget(start, Duration::from_secs(60));
        (
            frac >= 0.02 && fast_enough,
            format!("a' < b' in {overtaken}/{trials} = {frac:.4} (need >= 0.02); {budget}"),
        )
    })
}

/// Criterion 3: Mean two-choices rounds grow roughly linearly in `k` at fixed `n`.
pub fn rounds_scale_with_k(mode: Mode, seed: u64) -> CriterionResult {
    timed(3, "two-choices rounds scale with k", || {
        let start = Instant::now();
        let n = 100_000u64;
        let bias = sqrt_n_ln_n(n);
        let trials = mode.pick(50, 15);
        let mut means = Vec::new();
        for k in [8usize, 16, 32] {
            let spec = ExperimentSpec::new(
                Protocol::TwoChoices,
                Engine::Aggregate,
                Initializer::EqualPlusBias { n, k, bias },
            )
            .trials(trials)
            .seed(seed);
            let s = harness::summarize(&run(&spec)).expect("non-empty");
            means.push(s.mean_rounds);
        }
        let ratio = means[2] / means[0];
        let (fast_enough, budget) = within_budget(start, Duration::from_secs(300));
        (
            (2.5..=6.0).contains(&ratio) && fast_enough,
            format!(
                "mean rounds k=8/16/32: {:.1}/{:.1}/{:.1}, ratio {ratio:.2} (need [2.5, 6]); {budget}",
                means[0], means[1], means[2]
            ),
        )
    })
}

/// Criterion 4: The memory protocol with bias `ceil(sqrt(n ln^3 n))` elects the leader
/// within `3 (log2 n)^2` rounds.
pub fn memory_protocol_wins_fast(mode: Mode, seed: u64) -> CriterionResult {
    timed(4, "memory protocol wins in polylog rounds", || {
        let start = Instant::now();
        let n = 100_000u64;
        let bias = sqrt_n_ln3_n(n);
        let trials = mode.pick(100, 40);
        let need = mode.pick(95, 38);
        let spec = ExperimentSpec::new(
            Protocol::Memory,
            Engine::Aggregate,
            Initializer::EqualPlusBias { n, k: 10, bias },
        )
        .trials(trials)
        .seed(seed);
        let records = run(&spec);
        let wins = records.iter().filter(|r| r.leader_won()).count() as u64;
        let median = harness::summarize(&records).expect("non-empty").median_rounds;
        let limit = 3.0 * (n as f64).log2().powi(2);
        let (fast_enough, budget) = within_budget(start, Duration::from_secs(120));
        (
            wins >= need && median <= limit && fast_enough,
            format!(
                "leader won {wins}/{trials} (need {need}), median rounds {median} (limit {limit:.1}); {budget}"
            ),
        )
    })
}

/// Criterion 5: At `n = 10^6`, `k = 100` the memory protocol needs at most half the
/// rounds of two-choices.
pub fn memory_beats_two_choices(mode: Mode, seed: u64) -> CriterionResult {
    timed(5, "memory protocol vs two-choices run time", || {
        let n = 1_000_000u64;
        let init = Initializer::EqualPlusBias {
            n,
            k: 100,
            bias: sqrt_n_ln_n(n),
        };
        let trials = mode.pick(20, 5);
        let median = |p: Protocol| {
            let spec = ExperimentSpec::new(p, Engine::Aggregate, init.clone())
                .trials(trials)
                .seed(seed);
            harness::summarize(&run(&spec)).expect("non-empty").median_rounds
        };
        let memory = median(Protocol::Memory);
        let two = median(Protocol::TwoChoices);
        (
            memory <= 0.5 * two,
            format!("median rounds memory {memory} vs two-choices {two}"),
        )
    })
}

/// Random configuration with `2 <= k <= max_k` colors and `k <= n <= max_n`.
pub fn random_configuration<R: Rng>(rng: &mut R, max_n: u64, max_k: usize) -> Configuration {
    let k = rng.random_range(2..=max_k);
    let n = rng.random_range(k as u64..=max_n);
    // uneven weights so that the colors differ in size
    let w: Vec<f64> = (0..k).map(|_| rng.random::<f64>().powi(2) + 1e-3).collect();
    let total: f64 = w.iter().sum();
    let mut probs: Vec<f64> = w.iter().map(|x| x / total).collect();
    let head: f64 = probs[..k - 1].iter().sum();
    probs[k - 1] = (1.0 - head).max(0.0);
    let counts = sample_multinomial(n, &probs, rng).expect("normalized weights");
    Configuration::new(counts).expect("n >= 2")
}

/// Running sums for one scalar statistic.
#[derive(Default, Clone, Copy)]
struct Moments {
    sum: f64,
    count: u64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.count += 1;
    }

    fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }
}

/// Worst standardized deviation `|mean - expected| / sqrt(var / trials)` over
/// every statistic of one configuration.
fn oracle_deviation(cfg: &Configuration, trials: u64, stream: RngStream) -> (f64, String) {
    let k = cfg.k();
    let n = cfg.n();
    let nf = n as f64;
    let c = cfg.counts();
    let q: Vec<f64> = c.iter().map(|&x| (x as f64 / nf).powi(2)).collect();

    // a bit state for the propagation step: roughly half of each color set
    let mut pick = stream.for_round(u64::MAX).rng();
    let set: Vec<u64> = c.iter().map(|&x| pick.random_range(0..=x)).collect();
    let unset: Vec<u64> = c.iter().zip(&set).map(|(x, s)| x - s).collect();
    let bit_state = AggregateState::new(set.clone(), unset).expect("valid split");
    let x_total: u64 = set.iter().sum();

    let mut flows = vec![vec![Moments::default(); k]; k];
    let mut next = vec![Moments::default(); k];
    let mut x1 = Moments::default();
    let mut x1_j = vec![Moments::default(); k];
    let mut xp = Moments::default();
    let mut xp_j = vec![Moments::default(); k];

    for t in 0..trials {
        let s = stream.for_trial(t);
        let f = aggregate::two_choices_flows(cfg, &s.for_round(1), true);
        for i in 0..k {
            for j in 0..k {
                flows[i][j].push(f.get(i, j) as f64);
            }
        }
        for (j, &v) in f.destination_counts().iter().enumerate() {
            next[j].push(v as f64);
        }
        let m = aggregate::memory_two_choices_round_agg(&AggregateState::from_configuration(cfg), &s.for_round(2), true);
        x1.push(m.set_total() as f64);
        for j in 0..k {
            x1_j[j].push(m.set_counts()[j] as f64);
        }
        let p = aggregate::bit_propagation_round_agg(&bit_state, &s.for_round(3), true);
        xp.push(p.set_total() as f64);
        for j in 0..k {
            xp_j[j].push(p.set_counts()[j] as f64);
        }
    }

    let mut worst = (0.0f64, String::new());
    let mut check = |label: String, m: &Moments, expected: f64, var: f64| {
        let z = if var <= 0.0 {
            if (m.mean() - expected).abs() < 1e-9 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (m.mean() - expected).abs() / (var / trials as f64).sqrt()
        };
        if z > worst.0 || worst.1.is_empty() {
            worst = (z, label);
        }
    };

    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            check(
                format!("f[{i}][{j}]"),
                &flows[i][j],
                oracle::expected_flow(cfg, i, j).expect("i != j"),
                oracle::flow_variance(cfg, i, j).expect("i != j"),
            );
        }
        // out-flow of i and in-flows from other sources are independent
        let out_p: f64 = (0..k).filter(|&j| j != i).map(|j| q[j]).sum();
        let var_out = c[i] as f64 * out_p * (1.0 - out_p);
        let var_in: f64 = (0..k)
            .filter(|&j| j != i)
            .map(|j| c[j] as f64 * q[i] * (1.0 - q[i]))
            .sum();
        check(
            format!("c'[{i}]"),
            &next[i],
            oracle::expected_next(cfg, i).expect("in range"),
            var_out + var_in,
        );
        check(
            format!("x_{i}(1)"),
            &x1_j[i],
            oracle::per_color_bit_expectation(cfg, i).expect("in range"),
            nf * q[i] * (1.0 - q[i]),
        );
        // a set node of color i stays unless it pulls another color's bit;
        // any other node joins with probability x_i / n
        let xi = set[i] as f64;
        let stay = 1.0 - (x_total as f64 - xi) / nf;
        let join = xi / nf;
        let var = xi * stay * (1.0 - stay) + (nf - xi) * join * (1.0 - join);
        let (_, e_j) = oracle::bit_propagation_expectation(x_total, set[i], n).expect("x_j <= x");
        check(format!("x_{i}(t+1)"), &xp_j[i], e_j, var);
    }
    let s: f64 = q.iter().sum();
    check("x(1)".into(), &x1, oracle::expected_bits_after_two_choices(cfg), nf * s * (1.0 - s));
    let (e_x, _) = oracle::bit_propagation_expectation(x_total, 0, n).expect("valid");
    let pull = x_total as f64 / nf;
    check(
        "x(t+1)".into(),
        &xp,
        e_x,
        (nf - x_total as f64) * pull * (1.0 - pull),
    );
    worst
}

/// Criterion 6: Engine means of one-round statistics agree with the closed forms within
/// 4 standard errors.
pub fn oracle_agreement(mode: Mode, seed: u64) -> CriterionResult {
    timed(6, "oracle agreement of one-round moments", || {
        let configs = mode.pick(50, 10);
        let trials = mode.pick(100_000, 20_000);
        let mut rng = RngStream::new(seed).for_round(6).rng();
        let cfgs: Vec<Configuration> = (0..configs)
            .map(|_| random_configuration(&mut rng, 1000, 8))
            .collect();
        let results: Vec<(f64, String)> = cfgs
            .par_iter()
            .enumerate()
            .map(|(i, cfg)| oracle_deviation(cfg, trials, RngStream::new(seed ^ 0x6a09_e667).for_trial(i as u64 * trials)))
            .collect();
        let (idx, (z, label)) = results
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
            .expect("at least one configuration");
        (
            *z <= 4.0,
            format!(
                "{configs} configurations x {trials} trials; worst |z| = {z:.2} at {label} of {} (limit 4)",
                cfgs[idx]
            ),
        )
    })
}

/// Criterion 7: Both engines reproduce the exact one-round kernel on enumerable
/// instances and agree with each other on rounds to convergence.
pub fn brute_force_equivalence(mode: Mode, seed: u64) -> CriterionResult {
    timed(7, "engines match exact kernel and each other", || {
        let trials = mode.pick(100_000, 20_000);
        let mut ok = true;
        let mut parts = Vec::new();
        for counts in [vec![1u64, 1], vec![2, 1, 1]] {
            let cfg = Configuration::new(counts).expect("valid");
            let r = harness::compare_engines(&cfg, trials, seed).expect("small instance");
            let pa = r.agent_vs_exact.expect("enumerable").p_value;
            let pg = r.aggregate_vs_exact.expect("enumerable").p_value;
            ok &= pa > 0.001 && pg > 0.001;
            parts.push(format!("{cfg}: p(agent)={pa:.3} p(aggregate)={pg:.3}"));
        }
        let cfg = Configuration::new(vec![120, 60, 20]).expect("valid");
        let ks_trials = mode.pick(10_000, 2_000);
        let ra = harness::convergence_rounds(&cfg, ks_trials, seed, Engine::Agent);
        let rb = harness::convergence_rounds(&cfg, ks_trials, seed, Engine::Aggregate);
        let ks = stats::ks_two_sample(&ra, &rb).expect("non-empty");
        ok &= ks.p_value > 0.001;
        parts.push(format!("{cfg} rounds KS p={:.3}", ks.p_value));
        (ok, parts.join("; "))
    })
}

#[derive(Default)]
struct Violations {
    conservation: u64,
    monotonicity: u64,
    bit_monotonicity: u64,
    absorption: u64,
    determinism: u64,
}

impl Violations {
    fn total(&self) -> u64 {
        self.conservation + self.monotonicity + self.bit_monotonicity + self.absorption + self.determinism
    }
}

fn check_reports(reports: &[RoundReport], n: u64, v: &mut Violations) {
    for r in reports {
        if r.configuration.n() != n || r.configuration.counts().iter().sum::<u64>() != n {
            v.conservation += 1;
        }
    }
    for w in reports.windows(2) {
        if w[1].kind == RoundKind::Propagation && w[1].set_total() < w[0].set_total() {
            v.bit_monotonicity += 1;
        }
        if w[0].converged && w[1].configuration != w[0].configuration {
            v.absorption += 1;
        }
    }
}

/// Criterion 8: Conservation, monotonicity of expectations, bit monotonicity,
/// absorption and thread-count determinism hold without exception.
pub fn invariant_suites(mode: Mode, seed: u64) -> CriterionResult {
    timed(8, "invariant suites", || {
        let mut v = Violations::default();
        let mut rng = RngStream::new(seed).for_round(8).rng();

        let configs = mode.pick(10_000, 2_000);
        for _ in 0..configs {
            let cfg = random_configuration(&mut rng, 1_000_000, 100);
            if !oracle::monotonicity_check(&cfg) {
                v.monotonicity += 1;
            }
        }

        let runs = mode.pick(40, 10);
        let params = ProtocolParams::default();
        for t in 0..runs {
            let cfg = random_configuration(&mut rng, 400, 6);
            let n = cfg.n();
            let s = RngStream::new(seed).for_trial(t);
            let mut reports = Vec::new();
            aggregate::run_two_choices_agg(cfg.clone(), &params, &s, |r| reports.push(r.clone()));
            check_reports(&reports, n, &mut v);
            reports.clear();
            aggregate::run_memory_agg(cfg.clone(), &params, &s, |r| reports.push(r.clone()));
            check_reports(&reports, n, &mut v);
            reports.clear();
            let pop = AgentPopulation::from_configuration(&cfg);
            agent::run_two_choices(pop.clone(), &params, &s, |r| reports.push(r.clone()));
            check_reports(&reports, n, &mut v);
            reports.clear();
            agent::run_memory_protocol(pop.clone(), &params, &s, |r| reports.push(r.clone()));
            check_reports(&reports, n, &mut v);
            let (p, out) = agent::run_async_protocol(pop, &params, &s);
            if p.n() as u64 != n || out.final_configuration.n() != n {
                v.conservation += 1;
            }
        }

        // unanimous inputs stay put for many rounds under every kernel
        let cfg = Configuration::new(vec![0, 300, 0]).expect("valid");
        let pop = AgentPopulation::from_configuration(&cfg);
        let state = AggregateState::from_configuration(&cfg);
        for r in 0..50 {
            let s = RngStream::new(seed).for_round(r);
            let mem_pop = agent::memory_two_choices_round(&pop, &s, true);
            let mem_state = aggregate::memory_two_choices_round_agg(&state, &s, true);
            let unchanged = agent::two_choices_round(&pop, &s, true).configuration() == cfg
                && mem_pop.configuration() == cfg
                && agent::bit_propagation_round(&mem_pop, &s, true).configuration() == cfg
                && aggregate::two_choices_round_agg(&cfg, &s, true) == cfg
                && mem_state.configuration() == cfg
                && aggregate::bit_propagation_round_agg(&mem_state, &s, true).configuration() == cfg;
            if !unchanged {
                v.absorption += 1;
            }
        }
        let (_, out) = agent::run_async_protocol_with(
            pop,
            &ProtocolParams::default(),
            &RngStream::new(seed),
            agent::AsyncStop::AllHalted,
        );
        if out.final_configuration != cfg {
            v.absorption += 1;
        }

        let specs = [
            ExperimentSpec::new(Protocol::TwoChoices, Engine::Agent, Initializer::Custom(vec![50, 30, 20])),
            ExperimentSpec::new(Protocol::Memory, Engine::Aggregate, Initializer::Custom(vec![500, 300, 200])),
            ExperimentSpec::new(Protocol::Async, Engine::Agent, Initializer::Custom(vec![50, 30, 20])),
        ];
        for spec in specs {
            let spec = spec.trials(mode.pick(24, 8)).seed(seed).with_trajectory();
            let one = harness::run_experiment_with_threads(&spec, 1).expect("valid");
            let many = harness::run_experiment_with_threads(&spec, 4).expect("valid");
            if one != many {
                v.determinism += 1;
            }
        }

        (
            v.total() == 0,
            format!(
                "violations: conservation {}, monotonicity {} of {configs}, bit monotonicity {}, absorption {}, determinism {}",
                v.conservation, v.monotonicity, v.bit_monotonicity, v.absorption, v.determinism
            ),
        )
    })
}

/// Fraction of one-round trials in which the gap between the initial top two
/// colors reaches `(a - b)(1 + a/4n)`.
pub fn gap_growth_fraction(cfg: &Configuration, trials: u64, seed: u64) -> f64 {
    let bound = oracle::gap_growth_bound(cfg).expect("k >= 2");
    let mut order: Vec<usize> = (0..cfg.k()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(cfg.counts()[i]));
    let (ia, ib) = (order[0], order[1]);
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let next = aggregate::two_choices_round_agg(cfg, &RngStream::new(seed).for_trial(t).for_round(1), true);
            let c = next.counts();
            u64::from(c[ia] as f64 - c[ib] as f64 >= bound)
        })
        .sum();
    hits as f64 / trials as f64
}

/// Criterion 9: One round from a gap of `32 ceil(sqrt(n ln n))` grows the gap by the
/// factor `1 + a/4n` almost always.
pub fn gap_growth(mode: Mode, seed: u64) -> CriterionResult {
    timed(9, "gap growth in one round", || {
        let n = 100_000u64;
        let gap = 32 * sqrt_n_ln_n(n);
        let trials = mode.pick(10_000, 2_000);
        let mut ok = true;
        let mut parts = Vec::new();
        for k in [2usize, 10] {
            let cfg = gap_configuration(n, k, gap).expect("feasible");
            let frac = gap_growth_fraction(&cfg, trials, seed);
            ok &= frac >= 0.99;
            parts.push(format!("k={k}: {frac:.4}"));
        }
        (ok, format!("gap {gap}, {trials} trials, fraction meeting bound {} (need >= 0.99)", parts.join(", ")))
    })
}

/// Phases that ran every propagation round, and how many of them ended with
/// all bits set.
pub fn saturated_phases(reports: &[RoundReport], propagation_rounds: u32) -> (u64, u64) {
    let mut complete = 0;
    let mut saturated = 0;
    let mut in_phase = 0u32;
    for r in reports {
        match r.kind {
            RoundKind::TwoChoices => in_phase = 0,
            RoundKind::Propagation => {
                in_phase += 1;
                if in_phase == propagation_rounds {
                    complete += 1;
                    if r.set_total() == Some(r.configuration.n()) {
                        saturated += 1;
                    }
                }
            }
            RoundKind::Initial => {}
        }
    }
    (complete, saturated)
}

/// Criterion 10: Bits saturate by the end of the propagation rounds.
pub fn bit_saturation(mode: Mode, seed: u64) -> CriterionResult {
    timed(10, "bit saturation within a phase", || {
        let n = 1_000_000u64;
        let k = 100;
        let cfg = equal_plus_bias(n, k, sqrt_n_ln_n(n)).expect("feasible");
        let params = ProtocolParams::default();
        let rounds = crate::schedule::memory_schedule(&cfg, &params).propagation_rounds;
        let trials = mode.pick(20, 5);
        let (complete, saturated) = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut reports = Vec::new();
                let s = RngStream::new(seed).for_trial(t);
                aggregate::run_memory_agg(cfg.clone(), &params, &s, |r| reports.push(r.clone()));
                saturated_phases(&reports, rounds)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        let frac = if complete == 0 { 0.0 } else { saturated as f64 / complete as f64 };
        (
            complete > 0 && frac >= 0.95,
            format!("{saturated}/{complete} complete phases saturated = {frac:.3} (need >= 0.95, R = {rounds})"),
        )
    })
}
