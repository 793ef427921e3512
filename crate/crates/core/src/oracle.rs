//! Closed-form moments of one protocol round, adversarial starting
//! configurations, and the exact one-round kernel of the two-choices protocol
//! for tiny instances.
//!
//! Every formula assumes self-inclusive sampling: a node sees color `j` with
//! probability `c_j / n`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_colors, Configuration};

fn check_color(cfg: &Configuration, i: usize) -> Result<()> {
    if i >= cfg.k() {
        return Err(Error::InvalidParameter(format!(
            "color {i} out of range for k={}",
            cfg.k()
        )));
    }
    Ok(())
}

fn fractions(cfg: &Configuration) -> Vec<f64> {
    let n = cfg.n() as f64;
    cfg.counts().iter().map(|&c| c as f64 / n).collect()
}

/// `E[f_ij] = c_i c_j^2 / n^2`.
pub fn expected_flow(cfg: &Configuration, i: usize, j: usize) -> Result<f64> {
    check_color(cfg, i)?;
    check_color(cfg, j)?;
    if i == j {
        return Err(Error::InvalidParameter("flow needs two distinct colors".into()));
    }
    let fj = cfg.counts()[j] as f64 / cfg.n() as f64;
    Ok(cfg.counts()[i] as f64 * fj * fj)
}

/// `Var[f_ij] = c_i c_j^2 (n - c_j)(n + c_j) / n^4`.
pub fn flow_variance(cfg: &Configuration, i: usize, j: usize) -> Result<f64> {
    check_color(cfg, i)?;
    check_color(cfg, j)?;
    if i == j {
        return Err(Error::InvalidParameter("flow needs two distinct colors".into()));
    }
    let fj = cfg.counts()[j] as f64 / cfg.n() as f64;
    Ok(cfg.counts()[i] as f64 * fj * fj * (1.0 - fj) * (1.0 + fj))
}

/// `E[c_i'] = c_i + (n - c_i) c_i^2 / n^2 - (c_i / n^2) sum_{j != i} c_j^2`.
pub fn expected_next(cfg: &Configuration, i: usize) -> Result<f64> {
    check_color(cfg, i)?;
    let f = fractions(cfg);
    let others: f64 = f
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, x)| x * x)
        .sum();
    let fi = f[i];
    let n = cfg.n() as f64;
    Ok(cfg.counts()[i] as f64 + n * ((1.0 - fi) * fi * fi - fi * others))
}

pub fn expected_next_all(cfg: &Configuration) -> Vec<f64> {
    (0..cfg.k())
        .map(|i| expected_next(cfg, i).expect("index in range"))
        .collect()
}

/// `(a - b)(1 + a / 4n)` over the two largest counts: the gap the leader is
/// expected to hold after one round once the initial gap is large enough.
pub fn gap_growth_bound(cfg: &Configuration) -> Result<f64> {
    if cfg.k() < 2 {
        return Err(Error::InvalidParameter("gap needs at least two colors".into()));
    }
    let (a, b) = cfg.top_two();
    Ok(gap_growth_formula(a, b, cfg.n()))
}

/// `(a - b)(1 + a / 4n)` for explicit counts, `a >= b`.
pub fn gap_growth_formula(a: u64, b: u64, n: u64) -> f64 {
    (a as f64 - b as f64) * (1.0 + a as f64 / (4.0 * n as f64))
}

/// `E[x(1)] = sum_j c_j^2 / n`.
pub fn expected_bits_after_two_choices(cfg: &Configuration) -> f64 {
    let n = cfg.n() as f64;
    fractions(cfg).iter().map(|f| n * f * f).sum()
}

/// `E[x_j(1)] = c_j^2 / n`.
pub fn per_color_bit_expectation(cfg: &Configuration, j: usize) -> Result<f64> {
    check_color(cfg, j)?;
    let f = cfg.counts()[j] as f64 / cfg.n() as f64;
    Ok(cfg.n() as f64 * f * f)
}

/// `(E[x(t+1)], E[x_j(t+1)])` after one propagation round from `x` set bits,
/// `x_j` of them on color `j`: each grows by the factor `1 + (n - x)/n`.
pub fn bit_propagation_expectation(x: u64, x_j: u64, n: u64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if x > n {
        return Err(Error::InvalidParameter(format!("x={x} exceeds n={n}")));
    }
    if x_j > x {
        return Err(Error::InvalidParameter(format!("x_j={x_j} exceeds x={x}")));
    }
    let growth = (n - x) as f64 / n as f64;
    Ok((x as f64 * (1.0 + growth), x_j as f64 * (1.0 + growth)))
}

/// Splits `total` into `parts` counts differing by at most one, larger first.
pub(crate) fn split_evenly(total: u64, parts: usize) -> Vec<u64> {
    if parts == 0 {
        return Vec::new();
    }
    let p = parts as u64;
    let base = total / p;
    let extra = (total % p) as usize;
    (0..parts)
        .map(|i| base + u64::from(i < extra))
        .collect()
}

/// The two-way near-tie that the two-choices protocol loses with constant
/// probability: with `n' = (n - k + 2)/2` and `z = z'/2`, counts
/// `(floor(n') + floor(z sqrt n), ceil(n') - floor(z sqrt n), 1, ..., 1)`.
pub fn theorem3_configuration(n: u64, k: usize, z_prime: f64) -> Result<Configuration> {
    if k < 2 {
        return Err(Error::Infeasible("needs k >= 2".into()));
    }
    check_colors(k)?;
    if n < k as u64 {
        return Err(Error::Infeasible(format!("n={n} smaller than k={k}")));
    }
    if !(z_prime.is_finite() && z_prime >= 0.0) {
        return Err(Error::Infeasible(format!("z' must be non-negative, got {z_prime}")));
    }
    let two_n_prime = n - k as u64 + 2;
    let floor_np = two_n_prime / 2;
    let ceil_np = two_n_prime - floor_np;
    let shift = ((z_prime / 2.0) * (n as f64).sqrt()).floor() as u64;
    if shift >= ceil_np {
        return Err(Error::Infeasible(format!(
            "bias {shift} leaves the runner-up below one node"
        )));
    }
    let mut counts = vec![floor_np + shift, ceil_np - shift];
    counts.extend(std::iter::repeat_n(1, k - 2));
    Configuration::new(counts)
}

/// Leader at `ceil(n/k + z sqrt(n ln n))`, the rest of the population split as
/// evenly as possible over the other `k - 1` colors.
pub fn theorem4_configuration(n: u64, k: usize, z: f64) -> Result<Configuration> {
    if k == 0 || n == 0 {
        return Err(Error::Infeasible("needs n >= 1 and k >= 1".into()));
    }
    check_colors(k)?;
    if !(z.is_finite() && z >= 0.0) {
        return Err(Error::Infeasible(format!("z must be non-negative, got {z}")));
    }
    let nf = n as f64;
    let lead = (nf / k as f64 + z * (nf * nf.ln()).sqrt()).ceil();
    if lead > nf {
        return Err(Error::Infeasible(format!(
            "leader of {lead} exceeds n={n}"
        )));
    }
    let lead = lead as u64;
    if k == 1 {
        return Configuration::new(vec![n]);
    }
    let mut counts = vec![lead];
    counts.extend(split_evenly(n - lead, k - 1));
    Configuration::new(counts)
}

/// Exact law of the next configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionDistribution {
    outcomes: BTreeMap<Configuration, f64>,
}

#[derive(Serialize)]
struct OutcomeEntry<'a> {
    counts: &'a [u64],
    probability: f64,
}

impl TransitionDistribution {
    pub fn iter(&self) -> impl Iterator<Item = (&Configuration, f64)> {
        self.outcomes.iter().map(|(c, &p)| (c, p))
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn probability(&self, counts: &[u64]) -> f64 {
        self.outcomes
            .iter()
            .find(|(c, _)| c.counts() == counts)
            .map(|(_, &p)| p)
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.outcomes.values().sum()
    }

    /// Expected next count of each color.
    pub fn mean_counts(&self) -> Vec<f64> {
        let k = self.outcomes.keys().next().map_or(0, |c| c.k());
        let mut m = vec![0.0; k];
        for (c, p) in &self.outcomes {
            for (mi, &ci) in m.iter_mut().zip(c.counts()) {
                *mi += p * ci as f64;
            }
        }
        m
    }

    /// `[{counts, probability}, ...]` in configuration order.
    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<OutcomeEntry<'_>> = self
            .outcomes
            .iter()
            .map(|(c, &p)| OutcomeEntry {
                counts: c.counts(),
                probability: p,
            })
            .collect();
        serde_json::to_value(entries).expect("plain data serializes")
    }
}

pub const EXACT_MAX_N: u64 = 8;
pub const EXACT_MAX_K: usize = 3;

fn factorial(m: u64) -> f64 {
    (1..=m).map(|x| x as f64).product()
}

/// Every way to place `m` items into `slots` ordered bins.
fn compositions(m: u64, slots: usize) -> Vec<Vec<u64>> {
    if slots == 1 {
        return vec![vec![m]];
    }
    let mut out = Vec::new();
    for first in 0..=m {
        for mut rest in compositions(m - first, slots - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Law of the destination vector of the `c_i` nodes of color `i`:
/// multinomial with `p_j = c_j^2 / n^2` for `j != i` and the remainder on `i`.
pub fn source_flow_law(cfg: &Configuration, i: usize) -> Result<Vec<(Vec<u64>, f64)>> {
    check_color(cfg, i)?;
    let k = cfg.k();
    let f = fractions(cfg);
    let mut probs: Vec<f64> = f.iter().map(|x| x * x).collect();
    probs[i] = 0.0;
    probs[i] = 1.0 - probs.iter().sum::<f64>();
    let m = cfg.counts()[i];
    let m_fact = factorial(m);
    let law = compositions(m, k)
        .into_iter()
        .filter_map(|dest| {
            let mut p = m_fact;
            for (&d, &q) in dest.iter().zip(&probs) {
                if d > 0 && q == 0.0 {
                    return None;
                }
                p *= q.powi(d as i32) / factorial(d);
            }
            Some((dest, p))
        })
        .collect();
    Ok(law)
}

/// One-round kernel of the two-choices protocol by convolving the per-color
/// flow laws. Limited to `n <= 8`, `k <= 3`.
pub fn exact_transition(cfg: &Configuration) -> Result<TransitionDistribution> {
    if cfg.n() > EXACT_MAX_N || cfg.k() > EXACT_MAX_K {
        return Err(Error::TooLarge(format!(
            "exact transition supports n <= {EXACT_MAX_N} and k <= {EXACT_MAX_K}, got n={} k={}",
            cfg.n(),
            cfg.k()
        )));
    }
    let k = cfg.k();
    let mut acc: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
    acc.insert(vec![0; k], 1.0);
    for i in 0..k {
        let law = source_flow_law(cfg, i)?;
        let mut next: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
        for (partial, p) in &acc {
            for (dest, q) in &law {
                let v: Vec<u64> = partial.iter().zip(dest).map(|(a, b)| a + b).collect();
                *next.entry(v).or_insert(0.0) += p * q;
            }
        }
        acc = next;
    }
    let outcomes = acc
        .into_iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|(c, p)| (Configuration::new(c).expect("flows conserve n"), p))
        .collect();
    Ok(TransitionDistribution { outcomes })
}

/// Whether larger colors expect to stay at least as large after one round:
/// `c_r <= c_s` implies `E[c_r'] <= E[c_s']` for every pair.
pub fn monotonicity_check(cfg: &Configuration) -> bool {
    let expected = expected_next_all(cfg);
    let mut order: Vec<usize> = (0..cfg.k()).collect();
    order.sort_by_key(|&i| cfg.counts()[i]);
    let tol = 1e-9 * cfg.n() as f64;
    order.windows(2).all(|w| {
        let (r, s) = (w[0], w[1]);
        if cfg.counts()[r] == cfg.counts()[s] {
            (expected[r] - expected[s]).abs() <= tol
        } else {
            expected[r] <= expected[s] + tol
        }
    })
}
