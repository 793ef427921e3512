//! Categorical and multinomial draws.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};

/// Draws index `i` with probability `weights[i] / sum(weights)`.
pub fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let mut total = 0.0;
    for &w in weights {
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidDistribution(format!("bad weight {w}")));
        }
        total += w;
    }
    if total.is_nan() || total <= 0.0 {
        return Err(Error::InvalidDistribution("weights sum to zero".into()));
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        acc += w;
        last_positive = i;
        if target < acc {
            return Ok(i);
        }
    }
    // rounding left `target` at or past the final partial sum
    Ok(last_positive)
}

/// Draws counts distributed exactly as multinomial(`trials`; `probs`).
pub fn sample_multinomial<R: Rng + ?Sized>(
    trials: u64,
    probs: &[f64],
    rng: &mut R,
) -> Result<Vec<u64>> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("no categories".into()));
    }
    let mut sum = 0.0;
    for &p in probs {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidDistribution(format!(
                "probability {p} outside [0, 1]"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {sum}, not 1"
        )));
    }
    let mut out = vec![0; probs.len()];
    multinomial_into(trials, probs, rng, &mut out);
    Ok(out)
}

/// Sequential conditional binomials. `probs` must be a distribution; the last
/// category with positive mass absorbs whatever trials remain so the counts
/// always sum to `trials`. Adds into `out`.
pub(crate) fn multinomial_into<R: Rng + ?Sized>(
    trials: u64,
    probs: &[f64],
    rng: &mut R,
    out: &mut [u64],
) {
    debug_assert_eq!(probs.len(), out.len());
    let Some(last) = probs.iter().rposition(|&p| p > 0.0) else {
        return;
    };
    let mut remaining = trials;
    let mut mass = 1.0f64;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            return;
        }
        if i == last {
            out[i] += remaining;
            return;
        }
        if p <= 0.0 {
            continue;
        }
        let cond = if mass > 0.0 { (p / mass).min(1.0) } else { 1.0 };
        let draw = binomial(remaining, cond, rng);
        out[i] += draw;
        remaining -= draw;
        mass -= p;
    }
}

#[inline]
pub(crate) fn binomial<R: Rng + ?Sized>(trials: u64, p: f64, rng: &mut R) -> u64 {
    if trials == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return trials;
    }
    Binomial::new(trials, p)
        .expect("probability checked to lie in (0, 1)")
        .sample(rng)
}
