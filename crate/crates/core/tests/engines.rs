//! End-to-end runs of both engines and the three protocols at desk scale.

use std::time::Instant;

use plurality_core::harness::{
    self, equal_plus_bias, sqrt_n_ln3_n, sqrt_n_ln_n, Engine, ExperimentSpec, Initializer, Protocol,
};
use plurality_core::model::ProtocolParams;
use plurality_core::oracle;
use plurality_core::report::RoundKind;
use plurality_core::schedule;
use plurality_core::stats;
use plurality_core::{aggregate, Configuration, RngStream};

fn wins(spec: &ExperimentSpec) -> usize {
    harness::run_experiment(spec)
        .unwrap()
        .iter()
        .filter(|r| r.leader_won())
        .count()
}

#[test]
fn agent_two_choices_majority_wins() {
    let n = 100_000;
    let bias = (4.0 * ((n as f64) * (n as f64).ln()).sqrt()).ceil() as u64;
    let spec = ExperimentSpec::new(
        Protocol::TwoChoices,
        Engine::Agent,
        Initializer::EqualPlusBias { n, k: 10, bias },
    )
    .trials(100)
    .seed(11);
    assert!(wins(&spec) >= 95);
}

#[test]
fn agent_memory_protocol_wins() {
    let n = 100_000;
    let spec = ExperimentSpec::new(
        Protocol::Memory,
        Engine::Agent,
        Initializer::EqualPlusBias { n, k: 10, bias: sqrt_n_ln3_n(n) },
    )
    .trials(100)
    .seed(12);
    assert!(wins(&spec) >= 95);
}

#[test]
fn async_protocol_wins_within_time_cap() {
    // c1 = 2900 >= 1.2 * 2400
    let params = ProtocolParams {
        async_time_cap: Some(200.0),
        ..ProtocolParams::default()
    };
    let spec = ExperimentSpec::new(
        Protocol::Async,
        Engine::Agent,
        Initializer::Custom(vec![2900, 2400, 2350, 2350]),
    )
    .params(params)
    .trials(100)
    .seed(13);
    let records = harness::run_experiment(&spec).unwrap();
    let good = records
        .iter()
        .filter(|r| r.leader_won() && r.time_units.unwrap() <= 200.0)
        .count();
    assert!(good >= 90, "{good}/100");
}

#[test]
fn near_tie_overtake_on_agent_engine() {
    let spec = ExperimentSpec::new(
        Protocol::TwoChoices,
        Engine::Agent,
        Initializer::Theorem3 { n: 10_000, k: 3, z_prime: 1.0 },
    )
    .trials(2000)
    .seed(14)
    .with_trajectory();
    let overtaken = harness::run_experiment(&spec)
        .unwrap()
        .iter()
        .filter(|r| {
            let c = r.trajectory.as_ref().unwrap()[1].configuration.counts().to_vec();
            c[0] < c[1]
        })
        .count();
    assert!(overtaken >= 40, "{overtaken}/2000");
}

#[test]
fn engines_agree_on_exact_kernel_and_round_counts() {
    for counts in [vec![1u64, 1], vec![2, 1, 1]] {
        let cfg = Configuration::new(counts).unwrap();
        let r = harness::compare_engines(&cfg, 100_000, 15).unwrap();
        assert!(r.agent_vs_exact.unwrap().p_value > 0.001);
        assert!(r.aggregate_vs_exact.unwrap().p_value > 0.001);
        assert!(r.one_round.p_value > 0.001);
    }
    let cfg = Configuration::new(vec![120, 60, 20]).unwrap();
    let a = harness::convergence_rounds(&cfg, 10_000, 16, Engine::Agent);
    let b = harness::convergence_rounds(&cfg, 10_000, 16, Engine::Aggregate);
    assert!(stats::ks_two_sample(&a, &b).unwrap().p_value > 0.001);
}

#[test]
fn unanimous_inputs_converge_immediately() {
    for protocol in [Protocol::TwoChoices, Protocol::Memory, Protocol::Async] {
        let engines: &[Engine] = if protocol == Protocol::Async {
            &[Engine::Agent]
        } else {
            &[Engine::Agent, Engine::Aggregate]
        };
        for &engine in engines {
            let spec = ExperimentSpec::new(protocol, engine, Initializer::Custom(vec![0, 25, 0]));
            let records = harness::run_experiment(&spec).unwrap();
            assert_eq!(records.len(), 1);
            assert_eq!(records[0].winner, Some(1));
            assert!(records[0].converged);
            if protocol != Protocol::Async {
                assert_eq!(records[0].rounds, 0);
            }
        }
    }
}

#[test]
fn bit_trajectory_grows_leader_share() {
    let n = 1_000_000;
    let spec = ExperimentSpec::new(
        Protocol::Memory,
        Engine::Aggregate,
        Initializer::EqualPlusBias { n, k: 1000, bias: sqrt_n_ln_n(n) },
    )
    .seed(17)
    .with_trajectory();
    let rows = harness::trajectory_bits(&spec).unwrap();
    assert_eq!(rows.last().unwrap().a_over_n, 1.0);

    // within a phase the leader's bit share only drifts down by noise
    let mut drops = 0;
    let mut steps = 0;
    for w in rows.windows(2) {
        if w[1].kind != RoundKind::Propagation {
            continue;
        }
        if let (Some(a), Some(b)) = (w[0].x1_over_x, w[1].x1_over_x) {
            steps += 1;
            if b < a - 0.02 {
                drops += 1;
            }
        }
    }
    assert!(steps > 20);
    assert_eq!(drops, 0);

    // and across phases the share rises
    let phase_end: Vec<f64> = rows
        .windows(2)
        .filter(|w| w[1].kind == RoundKind::TwoChoices && w[0].kind == RoundKind::Propagation)
        .filter_map(|w| w[0].x1_over_x)
        .collect();
    assert!(phase_end.windows(2).all(|p| p[1] >= p[0]));
}

#[test]
fn bits_saturate_each_phase() {
    let cfg = equal_plus_bias(1_000_000, 100, sqrt_n_ln_n(1_000_000)).unwrap();
    let params = ProtocolParams::default();
    let r = schedule::memory_schedule(&cfg, &params).propagation_rounds;
    let mut reports = Vec::new();
    aggregate::run_memory_agg(cfg, &params, &RngStream::new(18), |rep| reports.push(rep.clone()));
    let ends: Vec<_> = reports
        .iter()
        .filter(|rep| rep.kind == RoundKind::Propagation)
        .collect();
    let complete = ends.len() as u32 / r;
    assert!(complete >= 3);
    let saturated = ends
        .chunks(r as usize)
        .filter(|c| c.len() == r as usize && c.last().unwrap().set_total() == Some(1_000_000))
        .count() as u32;
    assert_eq!(saturated, complete);
}

#[test]
fn memory_outpaces_two_choices_when_k_is_sqrt_n() {
    let n = 1_000_000;
    let init = Initializer::EqualPlusBias { n, k: 1000, bias: sqrt_n_ln_n(n) };
    let median = |p| {
        let spec = ExperimentSpec::new(p, Engine::Aggregate, init.clone()).trials(3).seed(19);
        harness::summarize(&harness::run_experiment(&spec).unwrap())
            .unwrap()
            .median_rounds
    };
    let memory = median(Protocol::Memory);
    let two = median(Protocol::TwoChoices);
    assert!(memory * 1.5 < two, "memory {memory} vs two-choices {two}");
}

#[test]
fn huge_population_memory_run() {
    let n = 100_000_000;
    let bias = (4.0 * ((n as f64) * (n as f64).ln()).sqrt()).ceil() as u64;
    let cfg = equal_plus_bias(n, 100, bias).unwrap();
    let start = Instant::now();
    let out = aggregate::run_memory_agg(cfg, &ProtocolParams::default(), &RngStream::new(20), |_| {});
    assert!(out.converged);
    assert_eq!(out.winner.map(|c| c.index()), Some(0));
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn one_round_mean_matches_oracle_on_random_configurations() {
    let mut rng = RngStream::new(21).rng();
    for c in 0..20 {
        let cfg = plurality_core::validation::random_configuration(&mut rng, 500, 6);
        let trials = 20_000;
        let mut sums = vec![0.0; cfg.k()];
        for t in 0..trials {
            let next = aggregate::two_choices_round_agg(&cfg, &RngStream::new(22).for_trial(c * trials + t), true);
            for (s, &x) in sums.iter_mut().zip(next.counts()) {
                *s += x as f64;
            }
        }
        let expected = oracle::expected_next_all(&cfg);
        let n = cfg.n() as f64;
        for (i, (s, e)) in sums.iter().zip(&expected).enumerate() {
            // c'_i is a sum of independent binomials with total variance below n/4
            let se = (n / 4.0 / trials as f64).sqrt();
            assert!((s / trials as f64 - e).abs() < 5.0 * se, "{cfg} color {i}");
        }
    }
}

#[test]
fn summary_of_constant_runs() {
    let spec = ExperimentSpec::new(Protocol::TwoChoices, Engine::Aggregate, Initializer::Custom(vec![7]))
        .trials(5);
    let s = harness::summarize(&harness::run_experiment(&spec).unwrap()).unwrap();
    assert_eq!(s.mean_rounds, 0.0);
    assert_eq!(s.median_rounds, 0.0);
    assert_eq!(s.win_rate, 1.0);
    let (lo, hi) = stats::wilson_interval(500, 1000, stats::Z95);
    assert!(lo >= 0.46 && hi <= 0.54);
}
