//! Per-node simulation on the complete graph.
//!
//! Synchronous rounds read an immutable snapshot of round `t` and write round
//! `t + 1` into fresh buffers. Each node draws from its own substream of the
//! round's [`RngStream`], so the outcome does not depend on processing order.
//! The asynchronous protocol activates one uniformly chosen node at a time
//! against the live state.

use rand::Rng;

use crate::model::{AgentPopulation, ColorId, ProgramCounter, ProtocolParams};
use crate::report::{AsyncOutcome, RoundKind, RoundReport, RunOutcome};
use crate::rng::{RngStream, StreamRng};
use crate::schedule::{self, ASYNC_STEPS_PER_PHASE};

/// Uniform neighbor of `v` among `n` nodes.
#[inline]
fn pick<R: Rng>(rng: &mut R, v: usize, n: usize, include_self: bool) -> usize {
    if include_self {
        rng.random_range(0..n)
    } else {
        let u = rng.random_range(0..n - 1);
        if u >= v {
            u + 1
        } else {
            u
        }
    }
}

#[derive(Clone, Copy)]
enum Kernel {
    TwoChoices,
    MemoryTwoChoices,
    Propagation,
}

#[derive(Clone, Copy)]
enum Order {
    Forward,
    #[cfg_attr(not(test), allow(dead_code))]
    Reverse,
}

fn synchronous_round(
    pop: &AgentPopulation,
    stream: &RngStream,
    include_self: bool,
    kernel: Kernel,
    order: Order,
) -> AgentPopulation {
    let n = pop.n();
    if !include_self && n < 2 {
        // no neighbors to sample
        return pop.clone();
    }
    let key = stream.node_key();
    let colors = &pop.colors;
    let bits = &pop.bits;
    let mut next_colors = colors.clone();
    let mut next_bits = bits.clone();

    let mut step = |v: usize| {
        let mut rng: StreamRng = stream.node_rng_from_key(key, v as u64);
        match kernel {
            Kernel::TwoChoices => {
                let u1 = pick(&mut rng, v, n, include_self);
                let u2 = pick(&mut rng, v, n, include_self);
                if colors[u1] == colors[u2] {
                    next_colors[v] = colors[u1];
                }
            }
            Kernel::MemoryTwoChoices => {
                let u1 = pick(&mut rng, v, n, include_self);
                let u2 = pick(&mut rng, v, n, include_self);
                if colors[u1] == colors[u2] {
                    next_colors[v] = colors[u1];
                    next_bits[v] = true;
                } else {
                    next_bits[v] = false;
                }
            }
            Kernel::Propagation => {
                let u = pick(&mut rng, v, n, include_self);
                if bits[u] {
                    next_colors[v] = colors[u];
                    next_bits[v] = true;
                }
            }
        }
    };
    match order {
        Order::Forward => (0..n).for_each(&mut step),
        Order::Reverse => (0..n).rev().for_each(&mut step),
    }

    AgentPopulation {
        k: pop.k,
        colors: next_colors,
        bits: next_bits,
        pcs: pop.pcs.clone(),
    }
}

/// One round of the two-choices protocol: every node samples two nodes with
/// replacement and adopts their color if the samples agree.
pub fn two_choices_round(
    pop: &AgentPopulation,
    stream: &RngStream,
    include_self: bool,
) -> AgentPopulation {
    synchronous_round(pop, stream, include_self, Kernel::TwoChoices, Order::Forward)
}

/// First round of a memory phase. Colors update as in [`two_choices_round`];
/// each bit is reassigned to whether the node's two samples agreed.
pub fn memory_two_choices_round(
    pop: &AgentPopulation,
    stream: &RngStream,
    include_self: bool,
) -> AgentPopulation {
    synchronous_round(
        pop,
        stream,
        include_self,
        Kernel::MemoryTwoChoices,
        Order::Forward,
    )
}

/// Pull round: a node whose single sample has its bit set copies the
/// sample's color and sets its own bit. Bits are never cleared here.
pub fn bit_propagation_round(
    pop: &AgentPopulation,
    stream: &RngStream,
    include_self: bool,
) -> AgentPopulation {
    synchronous_round(pop, stream, include_self, Kernel::Propagation, Order::Forward)
}

fn report(
    pop: &AgentPopulation,
    round: u64,
    phase: Option<u32>,
    kind: RoundKind,
    with_bits: bool,
) -> RoundReport {
    let bits = with_bits.then(|| pop.set_counts());
    RoundReport::new(round, phase, kind, pop.configuration(), bits)
}

/// Repeats [`two_choices_round`] until unanimity or the round cap.
pub fn run_two_choices<F>(
    pop: AgentPopulation,
    params: &ProtocolParams,
    stream: &RngStream,
    mut observer: F,
) -> (AgentPopulation, RunOutcome)
where
    F: FnMut(&RoundReport),
{
    let cap = schedule::two_choices_cap(pop.n() as u64, pop.k(), params);
    let mut pop = pop;
    let initial = report(&pop, 0, None, RoundKind::Initial, false);
    let mut converged = initial.converged;
    observer(&initial);
    let mut rounds = 0;
    while !converged && rounds < cap {
        rounds += 1;
        pop = two_choices_round(&pop, &stream.for_round(rounds), params.sample_includes_self);
        let r = report(&pop, rounds, None, RoundKind::TwoChoices, false);
        converged = r.converged;
        observer(&r);
    }
    let outcome = RunOutcome::from_final(rounds, None, pop.configuration());
    (pop, outcome)
}

/// Runs phases of one memory two-choices round followed by the propagation
/// rounds, stopping at unanimity or at the phase cap.
pub fn run_memory_protocol<F>(
    pop: AgentPopulation,
    params: &ProtocolParams,
    stream: &RngStream,
    mut observer: F,
) -> (AgentPopulation, RunOutcome)
where
    F: FnMut(&RoundReport),
{
    let sched = schedule::memory_schedule(&pop.configuration(), params);
    let include_self = params.sample_includes_self;
    let mut pop = pop;
    let initial = report(&pop, 0, None, RoundKind::Initial, true);
    let mut converged = initial.converged;
    observer(&initial);
    let mut round = 0;
    let mut phases_run = 0;
    'phases: for phase in 1..=sched.phases {
        if converged {
            break;
        }
        phases_run = phase;
        round += 1;
        pop = memory_two_choices_round(&pop, &stream.for_round(round), include_self);
        let r = report(&pop, round, Some(phase), RoundKind::TwoChoices, true);
        converged = r.converged;
        observer(&r);
        for _ in 0..sched.propagation_rounds {
            if converged {
                break 'phases;
            }
            round += 1;
            pop = bit_propagation_round(&pop, &stream.for_round(round), include_self);
            let r = report(&pop, round, Some(phase), RoundKind::Propagation, true);
            converged = r.converged;
            observer(&r);
        }
    }
    let outcome = RunOutcome::from_final(round, Some(phases_run), pop.configuration());
    (pop, outcome)
}

/// When the sequential asynchronous loop stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsyncStop {
    /// Unanimity, every node halted, or the time cap.
    Unanimity,
    /// Every node halted or the time cap; unanimity does not end the run.
    AllHalted,
}

pub fn run_async_protocol(
    pop: AgentPopulation,
    params: &ProtocolParams,
    stream: &RngStream,
) -> (AgentPopulation, AsyncOutcome) {
    run_async_protocol_with(pop, params, stream, AsyncStop::Unanimity)
}

/// Sequential asynchronous memory protocol: each iteration activates one
/// uniform node, which executes the next instruction of its program against
/// the live state. A program is `10 ceil(log2 n)` phases of one two-choices
/// step and two bit-propagation ticks.
pub fn run_async_protocol_with(
    pop: AgentPopulation,
    params: &ProtocolParams,
    stream: &RngStream,
    stop: AsyncStop,
) -> (AgentPopulation, AsyncOutcome) {
    let mut pop = if pop.pcs.is_some() {
        pop
    } else {
        pop.with_program_counters()
    };
    let n = pop.n();
    let include_self = params.sample_includes_self;
    let phases = schedule::async_phases(n as u64);
    let activation_cap = params
        .async_time_cap
        .map(|t| (t * n as f64).ceil() as u64)
        .unwrap_or(u64::MAX);

    let mut counts = pop.color_counts();
    let n64 = n as u64;
    let mut unanimous = counts.contains(&n64);
    let mut halted = pop
        .pcs
        .as_ref()
        .map(|p| p.iter().filter(|pc| pc.phase >= phases).count())
        .unwrap_or(0);
    let mut activations = 0u64;
    let mut instructions = 0u64;
    let mut rng = stream.rng();
    let has_neighbor = include_self || n > 1;

    let AgentPopulation {
        colors, bits, pcs, ..
    } = &mut pop;
    let pcs = pcs.as_mut().expect("program counters attached above");

    loop {
        if stop == AsyncStop::Unanimity && unanimous {
            break;
        }
        if halted == n || activations >= activation_cap {
            break;
        }
        let v = rng.random_range(0..n);
        activations += 1;
        let pc: &mut ProgramCounter = &mut pcs[v];
        if pc.phase >= phases {
            continue;
        }
        instructions += 1;
        if has_neighbor {
            let before = colors[v];
            if pc.step == 0 {
                let u1 = pick(&mut rng, v, n, include_self);
                let u2 = pick(&mut rng, v, n, include_self);
                if colors[u1] == colors[u2] {
                    colors[v] = colors[u1];
                    bits[v] = true;
                } else {
                    bits[v] = false;
                }
            } else {
                let u = pick(&mut rng, v, n, include_self);
                if bits[u] {
                    colors[v] = colors[u];
                    bits[v] = true;
                }
            }
            let after: ColorId = colors[v];
            if after != before {
                counts[before.index()] -= 1;
                counts[after.index()] += 1;
                unanimous = counts[after.index()] == n64;
            }
        }
        pc.step += 1;
        if pc.step == ASYNC_STEPS_PER_PHASE {
            pc.step = 0;
            pc.phase += 1;
            if pc.phase == phases {
                halted += 1;
            }
        }
    }

    let cfg = pop.configuration();
    let winner = cfg.unanimous();
    let outcome = AsyncOutcome {
        activations,
        time_units: activations as f64 / n as f64,
        instructions,
        all_halted: halted == n,
        converged: winner.is_some(),
        winner,
        final_configuration: cfg,
    };
    (pop, outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Configuration;
    use crate::oracle;

    fn pop(counts: &[u64]) -> AgentPopulation {
        AgentPopulation::from_configuration(&Configuration::new(counts.to_vec()).unwrap())
    }

    fn scrambled(counts: &[u64], seed: u64) -> AgentPopulation {
        // interleave colors and bits so position carries no information
        let base = pop(counts);
        let mut rng = RngStream::new(seed).rng();
        let mut colors = base.colors().to_vec();
        for i in (1..colors.len()).rev() {
            colors.swap(i, rng.random_range(0..=i));
        }
        let bits = (0..colors.len()).map(|_| rng.random_bool(0.4)).collect();
        AgentPopulation::from_parts(counts.len(), colors, bits).unwrap()
    }

    #[test]
    fn unanimous_is_absorbing() {
        let p = pop(&[0, 12, 0]);
        let s = RngStream::new(1);
        for include_self in [true, false] {
            assert_eq!(two_choices_round(&p, &s, include_self).colors(), p.colors());
            let m = memory_two_choices_round(&p, &s, include_self);
            assert_eq!(m.colors(), p.colors());
            assert!(m.bits().iter().all(|&b| b));
            let b = bit_propagation_round(&m, &s, include_self);
            assert_eq!(b.configuration(), p.configuration());
        }
    }

    #[test]
    fn propagation_without_bits_is_identity() {
        let p = scrambled(&[5, 4, 3], 3);
        let cleared = AgentPopulation::from_parts(3, p.colors().to_vec(), vec![false; 12]).unwrap();
        let next = bit_propagation_round(&cleared, &RngStream::new(9), true);
        assert_eq!(next, cleared);
    }

    #[test]
    fn propagation_saturated_keeps_all_bits() {
        let p = scrambled(&[5, 4, 3], 3);
        let full = AgentPopulation::from_parts(3, p.colors().to_vec(), vec![true; 12]).unwrap();
        for r in 0..50 {
            let next = bit_propagation_round(&full, &RngStream::new(9).for_round(r), true);
            assert_eq!(next.set_total(), 12);
            assert_eq!(next.n(), 12);
        }
    }

    #[test]
    fn rounds_ignore_processing_order() {
        let p = scrambled(&[30, 20, 10, 1], 5);
        for (r, include_self) in [(1, true), (2, false), (3, true)] {
            let s = RngStream::new(77).for_trial(4).for_round(r);
            for kernel in [Kernel::TwoChoices, Kernel::MemoryTwoChoices, Kernel::Propagation] {
                let fwd = synchronous_round(&p, &s, include_self, kernel, Order::Forward);
                let rev = synchronous_round(&p, &s, include_self, kernel, Order::Reverse);
                assert_eq!(fwd, rev);
            }
        }
    }

    #[test]
    fn no_self_sampling_never_reads_own_state() {
        // n = 2 without self-sampling: both samples are the other node, so the
        // nodes swap colors every round
        let p = pop(&[1, 1]);
        for r in 0..20 {
            let next = two_choices_round(&p, &RngStream::new(3).for_round(r), false);
            assert_eq!(next.colors(), &[ColorId(1), ColorId(0)]);
        }
        let single = pop(&[1]);
        assert_eq!(two_choices_round(&single, &RngStream::new(3), false), single);
    }

    #[test]
    fn two_node_transition_frequencies() {
        // exact law: (2,0) 3/16, (0,2) 3/16, (1,1) 10/16
        let exact = oracle::exact_transition(&Configuration::new(vec![1, 1]).unwrap()).unwrap();
        let p = pop(&[1, 1]);
        let trials = 100_000u64;
        let mut hits = std::collections::HashMap::new();
        for t in 0..trials {
            let next = two_choices_round(&p, &RngStream::new(21).for_trial(t), true);
            *hits.entry(next.color_counts()).or_insert(0u64) += 1;
        }
        for (cfg, prob) in exact.iter() {
            let f = *hits.get(cfg.counts()).unwrap_or(&0) as f64 / trials as f64;
            assert!((f - prob).abs() <= 0.01, "{cfg}: {f} vs {prob}");
        }
    }

    fn mean_over<F: Fn(u64) -> f64>(trials: u64, f: F) -> f64 {
        (0..trials).map(f).sum::<f64>() / trials as f64
    }

    #[test]
    fn two_choices_mean_matches_expected_next() {
        let p = pop(&[6, 3, 1]);
        let m = mean_over(100_000, |t| {
            two_choices_round(&p, &RngStream::new(5).for_trial(t), true).color_counts()[0] as f64
        });
        assert!((m - 6.84).abs() <= 0.02, "{m}");
    }

    #[test]
    fn memory_round_bit_mean() {
        let p = pop(&[6, 3, 1]);
        let m = mean_over(100_000, |t| {
            memory_two_choices_round(&p, &RngStream::new(6).for_trial(t), true).set_total() as f64
        });
        assert!((m - 4.6).abs() <= 0.02, "{m}");
    }

    #[test]
    fn memory_round_equal_colors_sets_n_over_k_bits() {
        // x(1) ~ B(n, 1/k) when all k colors are equal
        let (n, k) = (60u64, 4u64);
        let p = pop(&[15, 15, 15, 15]);
        let trials = 20_000;
        let m = mean_over(trials, |t| {
            memory_two_choices_round(&p, &RngStream::new(7).for_trial(t), true).set_total() as f64
        });
        let pk = 1.0 / k as f64;
        let sd = (n as f64 * pk * (1.0 - pk) / trials as f64).sqrt();
        assert!((m - n as f64 / k as f64).abs() <= 3.0 * sd, "{m}");
    }

    #[test]
    fn propagation_mean_matches_recurrence() {
        // n = 10, x = 4 with x_0 = 2
        let colors: Vec<ColorId> = [0, 0, 1, 1, 0, 0, 1, 1, 2, 2].map(ColorId).to_vec();
        let bits = vec![true, true, true, true, false, false, false, false, false, false];
        let p = AgentPopulation::from_parts(3, colors, bits).unwrap();
        let trials = 100_000;
        let mut x0 = 0.0;
        for t in 0..trials {
            let next = bit_propagation_round(&p, &RngStream::new(8).for_trial(t), true);
            assert!(next.set_total() >= 4);
            x0 += next.set_counts()[0] as f64;
        }
        let m = x0 / trials as f64;
        assert!((m - 3.2).abs() <= 0.02, "{m}");
    }

    #[test]
    fn run_two_choices_single_color() {
        let (_, out) = run_two_choices(pop(&[9]), &ProtocolParams::default(), &RngStream::new(1), |_| {});
        assert_eq!(out.rounds, 0);
        assert!(out.converged);
        assert_eq!(out.winner, Some(ColorId(0)));
    }

    #[test]
    fn run_two_choices_reports_every_round() {
        let mut reports = Vec::new();
        let (p, out) = run_two_choices(
            pop(&[40, 25, 15]),
            &ProtocolParams::default(),
            &RngStream::new(2),
            |r| reports.push(r.clone()),
        );
        assert!(out.converged);
        assert_eq!(reports.len() as u64, out.rounds + 1);
        assert_eq!(p.configuration(), out.final_configuration);
        for w in reports.windows(2) {
            assert_eq!(w[1].round, w[0].round + 1);
            assert_eq!(w[1].configuration.n(), 80);
            for (before, after) in w[0].configuration.counts().iter().zip(w[1].configuration.counts()) {
                if *before == 0 {
                    assert_eq!(*after, 0);
                }
            }
        }
        assert!(reports.last().unwrap().converged);
        assert!(reports[..reports.len() - 1].iter().all(|r| !r.converged));
    }

    #[test]
    fn run_two_choices_flags_cap() {
        let params = ProtocolParams {
            max_rounds: 1,
            sample_includes_self: false,
            ..Default::default()
        };
        // two nodes that only see each other swap colors forever;
        // cap = max(1, ceil(2 log2 2)) = 2
        let (_, out) = run_two_choices(pop(&[1, 1]), &params, &RngStream::new(3), |_| {});
        assert_eq!(out.rounds, 2);
        assert!(!out.converged);
        assert_eq!(out.winner, None);
    }

    #[test]
    fn memory_protocol_unanimous_input() {
        let mut reports = 0;
        let (_, out) = run_memory_protocol(pop(&[10, 0, 0]), &ProtocolParams::default(), &RngStream::new(1), |_| reports += 1);
        assert_eq!(out.rounds, 0);
        assert!(out.converged);
        assert_eq!(reports, 1);
    }

    #[test]
    fn memory_protocol_phase_structure() {
        let params = ProtocolParams {
            propagation_rounds_override: Some(3),
            ..Default::default()
        };
        let mut reports = Vec::new();
        let (_, out) = run_memory_protocol(pop(&[60, 30, 30]), &params, &RngStream::new(4), |r| reports.push(r.clone()));
        assert!(out.converged);
        for r in &reports[1..] {
            let expect = if (r.round - 1) % 4 == 0 {
                RoundKind::TwoChoices
            } else {
                RoundKind::Propagation
            };
            assert_eq!(r.kind, expect, "round {}", r.round);
            assert_eq!(r.phase, Some(((r.round - 1) / 4 + 1) as u32));
        }
        for w in reports.windows(2) {
            if w[1].kind == RoundKind::Propagation {
                assert!(w[1].set_total() >= w[0].set_total());
            }
        }
    }

    #[test]
    fn async_two_nodes_run_thirty_instructions_each() {
        let (p, out) = run_async_protocol_with(
            pop(&[1, 1]),
            &ProtocolParams::default(),
            &RngStream::new(5),
            AsyncStop::AllHalted,
        );
        assert!(out.all_halted);
        assert_eq!(out.instructions, 2 * 30);
        for pc in p.program_counters().unwrap() {
            assert_eq!(*pc, ProgramCounter { phase: 10, step: 0 });
        }
    }

    #[test]
    fn async_unanimous_input_stops_immediately() {
        let (_, out) = run_async_protocol(pop(&[0, 7]), &ProtocolParams::default(), &RngStream::new(5));
        assert_eq!(out.activations, 0);
        assert!(out.converged);
        assert_eq!(out.winner, Some(ColorId(1)));
    }

    #[test]
    fn async_time_cap_is_respected() {
        let params = ProtocolParams {
            async_time_cap: Some(2.0),
            ..Default::default()
        };
        let (p, out) = run_async_protocol(pop(&[500, 500]), &params, &RngStream::new(6));
        assert!(out.activations <= 2000);
        assert_eq!(p.n(), 1000);
    }
}
