//! Count-level simulation.
//!
//! On the complete graph nodes of the same (color, bit) class are
//! exchangeable, so the number of them landing in each successor class is
//! exactly multinomial. A round therefore costs `O(k^2)` binomial draws no
//! matter how large `n` is.

use serde::{Deserialize, Serialize};

use crate::model::{AggregateState, Configuration, ProtocolParams};
use crate::report::{RoundKind, RoundReport, RunOutcome};
use crate::rng::RngStream;
use crate::sampling::multinomial_into;
use crate::schedule;

/// Which synchronous protocol a runner executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyncProtocol {
    TwoChoices,
    Memory,
}

/// `flows[i][j]`: nodes moving from color `i` to color `j` in one
/// two-choices round; the diagonal holds the nodes that kept their color.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowMatrix {
    flows: Vec<Vec<u64>>,
}

impl FlowMatrix {
    pub fn get(&self, from: usize, to: usize) -> u64 {
        self.flows[from][to]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.flows
    }

    /// Column sums: the next configuration.
    pub fn destination_counts(&self) -> Vec<u64> {
        let k = self.flows.len();
        (0..k)
            .map(|j| self.flows.iter().map(|row| row[j]).sum())
            .collect()
    }
}

/// Probability that a node of color `source` draws two samples of color
/// `target`.
#[inline]
fn pair_probability(counts: &[u64], n: u64, source: usize, target: usize, include_self: bool) -> f64 {
    if include_self {
        let f = counts[target] as f64 / n as f64;
        f * f
    } else {
        let c = counts[target] - u64::from(source == target);
        let f = c as f64 / (n - 1) as f64;
        f * f
    }
}

fn no_neighbors(n: u64, include_self: bool) -> bool {
    !include_self && n < 2
}

/// Samples the full flow matrix of one two-choices round.
pub fn two_choices_flows(cfg: &Configuration, stream: &RngStream, include_self: bool) -> FlowMatrix {
    let counts = cfg.counts();
    let k = counts.len();
    let n = cfg.n();
    let mut flows = vec![vec![0u64; k]; k];
    if no_neighbors(n, include_self) {
        for (i, row) in flows.iter_mut().enumerate() {
            row[i] = counts[i];
        }
        return FlowMatrix { flows };
    }
    let mut rng = stream.rng();
    let live: Vec<usize> = (0..k).filter(|&j| counts[j] > 0).collect();
    // live destinations other than the source, then the stay slot
    let mut probs = Vec::with_capacity(live.len());
    let mut draws = Vec::with_capacity(live.len());
    for &i in &live {
        probs.clear();
        let mut moved = 0.0;
        for &j in &live {
            if j != i {
                let p = pair_probability(counts, n, i, j, include_self);
                moved += p;
                probs.push(p);
            }
        }
        probs.push((1.0 - moved).max(0.0));
        draws.clear();
        draws.resize(probs.len(), 0);
        multinomial_into(counts[i], &probs, &mut rng, &mut draws);
        let mut slot = 0;
        for &j in &live {
            if j != i {
                flows[i][j] = draws[slot];
                slot += 1;
            }
        }
        flows[i][i] = draws[slot];
    }
    FlowMatrix { flows }
}

/// One two-choices round over color counts.
pub fn two_choices_round_agg(cfg: &Configuration, stream: &RngStream, include_self: bool) -> Configuration {
    let next = two_choices_flows(cfg, stream, include_self).destination_counts();
    Configuration::new(next).expect("flows conserve the population")
}

/// First round of a memory phase over (color, bit) classes. A node of color
/// `i` ends in `(j, set)` when both samples have color `j`, otherwise in
/// `(i, unset)`.
pub fn memory_two_choices_round_agg(
    state: &AggregateState,
    stream: &RngStream,
    include_self: bool,
) -> AggregateState {
    let counts = state.color_counts();
    let k = counts.len();
    let n = state.n();
    if no_neighbors(n, include_self) {
        return AggregateState::from_raw(vec![0; k], counts, n);
    }
    let mut rng = stream.rng();
    let live: Vec<usize> = (0..k).filter(|&j| counts[j] > 0).collect();
    let mut set = vec![0u64; k];
    let mut unset = vec![0u64; k];
    let mut probs = Vec::with_capacity(live.len() + 1);
    let mut draws = Vec::with_capacity(live.len() + 1);
    for &i in &live {
        probs.clear();
        let mut matched = 0.0;
        for &j in &live {
            let p = pair_probability(&counts, n, i, j, include_self);
            matched += p;
            probs.push(p);
        }
        probs.push((1.0 - matched).max(0.0));
        draws.clear();
        draws.resize(probs.len(), 0);
        multinomial_into(counts[i], &probs, &mut rng, &mut draws);
        for (slot, &j) in live.iter().enumerate() {
            set[j] += draws[slot];
        }
        unset[i] += draws[live.len()];
    }
    AggregateState::from_raw(set, unset, n)
}

/// One bit-propagation round over (color, bit) classes. A node whose sample
/// is set moves to `(color of sample, set)`; every other node keeps its class.
pub fn bit_propagation_round_agg(
    state: &AggregateState,
    stream: &RngStream,
    include_self: bool,
) -> AggregateState {
    let k = state.k();
    let n = state.n();
    let x = state.set_total();
    if x == 0 || no_neighbors(n, include_self) {
        return state.clone();
    }
    let mut rng = stream.rng();
    let src_set = state.set_counts();
    let src_unset = state.unset_counts();
    let live: Vec<usize> = (0..k).filter(|&j| src_set[j] > 0).collect();
    let mut set = vec![0u64; k];
    let mut unset = vec![0u64; k];
    let mut probs = Vec::with_capacity(live.len() + 1);
    let mut draws = Vec::with_capacity(live.len() + 1);

    for i in 0..k {
        for (bit, m) in [(true, src_set[i]), (false, src_unset[i])] {
            if m == 0 {
                continue;
            }
            probs.clear();
            let mut hit = 0.0;
            for &j in &live {
                let p = if include_self {
                    src_set[j] as f64 / n as f64
                } else {
                    let own = u64::from(bit && i == j);
                    (src_set[j] - own) as f64 / (n - 1) as f64
                };
                hit += p;
                probs.push(p);
            }
            probs.push((1.0 - hit).max(0.0));
            draws.clear();
            draws.resize(probs.len(), 0);
            multinomial_into(m, &probs, &mut rng, &mut draws);
            for (slot, &j) in live.iter().enumerate() {
                set[j] += draws[slot];
            }
            let stay = draws[live.len()];
            if bit {
                set[i] += stay;
            } else {
                unset[i] += stay;
            }
        }
    }
    AggregateState::from_raw(set, unset, n)
}

fn report(state: &AggregateState, round: u64, phase: Option<u32>, kind: RoundKind) -> RoundReport {
    RoundReport::new(
        round,
        phase,
        kind,
        state.configuration(),
        Some(state.set_counts().to_vec()),
    )
}

/// Two-choices protocol over counts, same stopping rules as the agent runner.
pub fn run_two_choices_agg<F>(
    cfg: Configuration,
    params: &ProtocolParams,
    stream: &RngStream,
    mut observer: F,
) -> RunOutcome
where
    F: FnMut(&RoundReport),
{
    let cap = schedule::two_choices_cap(cfg.n(), cfg.k(), params);
    let mut cfg = cfg;
    let initial = RoundReport::new(0, None, RoundKind::Initial, cfg.clone(), None);
    let mut converged = initial.converged;
    observer(&initial);
    let mut rounds = 0;
    while !converged && rounds < cap {
        rounds += 1;
        cfg = two_choices_round_agg(&cfg, &stream.for_round(rounds), params.sample_includes_self);
        let r = RoundReport::new(rounds, None, RoundKind::TwoChoices, cfg.clone(), None);
        converged = r.converged;
        observer(&r);
    }
    RunOutcome::from_final(rounds, None, cfg)
}

/// Memory protocol over (color, bit) classes, same phase schedule as the
/// agent runner.
pub fn run_memory_agg<F>(
    cfg: Configuration,
    params: &ProtocolParams,
    stream: &RngStream,
    mut observer: F,
) -> RunOutcome
where
    F: FnMut(&RoundReport),
{
    let sched = schedule::memory_schedule(&cfg, params);
    let include_self = params.sample_includes_self;
    let mut state = AggregateState::from_configuration(&cfg);
    let initial = report(&state, 0, None, RoundKind::Initial);
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
        state = memory_two_choices_round_agg(&state, &stream.for_round(round), include_self);
        let r = report(&state, round, Some(phase), RoundKind::TwoChoices);
        converged = r.converged;
        observer(&r);
        for _ in 0..sched.propagation_rounds {
            if converged {
                break 'phases;
            }
            round += 1;
            state = bit_propagation_round_agg(&state, &stream.for_round(round), include_self);
            let r = report(&state, round, Some(phase), RoundKind::Propagation);
            converged = r.converged;
            observer(&r);
        }
    }
    RunOutcome::from_final(round, Some(phases_run), state.configuration())
}

pub fn run_protocol_agg<F>(
    cfg: Configuration,
    protocol: SyncProtocol,
    params: &ProtocolParams,
    stream: &RngStream,
    observer: F,
) -> RunOutcome
where
    F: FnMut(&RoundReport),
{
    match protocol {
        SyncProtocol::TwoChoices => run_two_choices_agg(cfg, params, stream, observer),
        SyncProtocol::Memory => run_memory_agg(cfg, params, stream, observer),
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ColorId;

    fn cfg(c: &[u64]) -> Configuration {
        Configuration::new(c.to_vec()).unwrap()
    }

    #[test]
    fn unanimous_is_fixed() {
        let c = cfg(&[0, 0, 50]);
        for include_self in [true, false] {
            for r in 0..20 {
                let s = RngStream::new(1).for_round(r);
                assert_eq!(two_choices_round_agg(&c, &s, include_self), c);
                let m = memory_two_choices_round_agg(&AggregateState::from_configuration(&c), &s, include_self);
                assert_eq!(m.set_counts(), &[0, 0, 50]);
                let b = bit_propagation_round_agg(&m, &s, include_self);
                assert_eq!(b, m);
            }
        }
    }

    #[test]
    fn single_color_sets_every_bit() {
        let s = AggregateState::from_configuration(&cfg(&[13]));
        let m = memory_two_choices_round_agg(&s, &RngStream::new(2), true);
        assert_eq!(m.set_total(), 13);
    }

    #[test]
    fn flow_moments() {
        let c = cfg(&[6, 3, 1]);
        let trials = 100_000u64;
        let (mut f01, mut f10) = (0u64, 0u64);
        for t in 0..trials {
            let f = two_choices_flows(&c, &RngStream::new(3).for_trial(t), true);
            assert_eq!(f.rows().iter().flatten().sum::<u64>(), 10);
            f01 += f.get(0, 1);
            f10 += f.get(1, 0);
        }
        let m01 = f01 as f64 / trials as f64;
        let m10 = f10 as f64 / trials as f64;
        assert!((m01 - 0.54).abs() <= 0.01, "{m01}");
        assert!((m10 - 1.08).abs() <= 0.015, "{m10}");
    }

    #[test]
    fn flow_variance() {
        let c = cfg(&[6, 3, 1]);
        let trials = 1_000_000u64;
        let (mut s, mut sq) = (0.0, 0.0);
        for t in 0..trials {
            let f = two_choices_flows(&c, &RngStream::new(4).for_trial(t), true).get(0, 1) as f64;
            s += f;
            sq += f * f;
        }
        let mean = s / trials as f64;
        let var = sq / trials as f64 - mean * mean;
        assert!((var - 0.4914).abs() <= 0.05 * 0.4914, "{var}");
    }

    #[test]
    fn memory_round_bit_means() {
        let s = AggregateState::from_configuration(&cfg(&[6, 3, 1]));
        let trials = 100_000u64;
        let mut x0 = 0u64;
        for t in 0..trials {
            let m = memory_two_choices_round_agg(&s, &RngStream::new(5).for_trial(t), true);
            x0 += m.set_counts()[0];
        }
        let mean = x0 as f64 / trials as f64;
        assert!((mean - 3.6).abs() <= 0.02, "{mean}");

        let eq = AggregateState::from_configuration(&cfg(&[4, 4, 4]));
        let trials = 100_000u64;
        let mut x = 0u64;
        for t in 0..trials {
            x += memory_two_choices_round_agg(&eq, &RngStream::new(6).for_trial(t), true).set_total();
        }
        // x(1) ~ B(12, 1/3)
        let mean = x as f64 / trials as f64;
        let sd = (12.0 * (1.0 / 3.0) * (2.0 / 3.0) / trials as f64).sqrt();
        assert!((mean - 4.0).abs() <= 3.0 * sd, "{mean}");
    }

    #[test]
    fn propagation_means() {
        let s = AggregateState::new(vec![2, 2, 0], vec![2, 2, 2]).unwrap();
        let trials = 100_000u64;
        let (mut x0, mut x) = (0u64, 0u64);
        for t in 0..trials {
            let next = bit_propagation_round_agg(&s, &RngStream::new(7).for_trial(t), true);
            assert!(next.set_total() >= 4);
            assert_eq!(next.n(), 10);
            x0 += next.set_counts()[0];
            x += next.set_total();
        }
        let m0 = x0 as f64 / trials as f64;
        let m = x as f64 / trials as f64;
        assert!((m0 - 3.2).abs() <= 0.02, "{m0}");
        assert!((m - 6.4).abs() <= 0.02, "{m}");
    }

    #[test]
    fn saturated_propagation_redistributes() {
        let s = AggregateState::new(vec![6, 3, 1], vec![0, 0, 0]).unwrap();
        let trials = 50_000u64;
        let mut x0 = 0u64;
        for t in 0..trials {
            let next = bit_propagation_round_agg(&s, &RngStream::new(8).for_trial(t), true);
            assert_eq!(next.set_total(), 10);
            x0 += next.set_counts()[0];
        }
        // expectation proportional to x_j: stays 6
        let m = x0 as f64 / trials as f64;
        assert!((m - 6.0).abs() < 0.05, "{m}");
    }

    #[test]
    fn runners_stop_on_unanimity() {
        let out = run_two_choices_agg(cfg(&[5, 0]), &ProtocolParams::default(), &RngStream::new(1), |_| {});
        assert_eq!(out.rounds, 0);
        assert_eq!(out.winner, Some(ColorId(0)));
        let out = run_memory_agg(cfg(&[0, 5]), &ProtocolParams::default(), &RngStream::new(1), |_| {});
        assert_eq!(out.rounds, 0);
        assert_eq!(out.winner, Some(ColorId(1)));
    }

    #[test]
    fn extinct_colors_stay_extinct() {
        let mut c = cfg(&[300, 200, 100, 2]);
        let mut dead = [false; 4];
        for r in 0..200 {
            c = two_choices_round_agg(&c, &RngStream::new(9).for_round(r), true);
            for (j, &cnt) in c.counts().iter().enumerate() {
                if dead[j] {
                    assert_eq!(cnt, 0);
                }
                dead[j] |= cnt == 0;
            }
        }
    }

    #[test]
    fn without_self_sampling_two_nodes_swap() {
        let c = cfg(&[1, 1]);
        for r in 0..10 {
            let next = two_choices_round_agg(&c, &RngStream::new(10).for_round(r), false);
            assert_eq!(next.counts(), &[1, 1]);
        }
    }
}
