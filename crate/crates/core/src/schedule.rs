//! Round and phase budgets of the three protocols. Every logarithm is base 2,
//! rounded up, with `k` clamped to at least 2 and `n` to at least 4 so the
//! iterated logarithms stay defined.

use crate::model::{Configuration, ProtocolParams};

fn log2_log2(n: u64) -> f64 {
    (n.max(4) as f64).log2().log2()
}

/// Bit-propagation rounds per memory phase:
/// `ceil(2 log2 k + 2 log2 log2 n)`.
pub fn propagation_rounds(n: u64, k: usize) -> u32 {
    let k = k.max(2) as f64;
    (2.0 * k.log2() + 2.0 * log2_log2(n)).ceil() as u32
}

/// The default `U`: `c_2 / (c_1 - c_2)` over the sorted counts, clamped to `[2, n]`.
pub fn default_u(cfg: &Configuration) -> f64 {
    let (a, b) = cfg.top_two();
    let n = cfg.n() as f64;
    let upper = n.max(2.0);
    if a == b {
        return upper;
    }
    (b as f64 / (a - b) as f64).clamp(2.0, upper)
}

/// Phase cap of the memory protocol: `ceil(ell log2 U + log2 log2 n)`.
pub fn phase_cap(ell: u32, u: f64, n: u64) -> u32 {
    let raw = (ell as f64 * u.log2() + log2_log2(n)).ceil();
    raw.max(1.0) as u32
}

/// Phase cap and propagation rounds for a run starting at `cfg`.
pub fn memory_schedule(cfg: &Configuration, params: &ProtocolParams) -> MemorySchedule {
    let u = params.u_override.unwrap_or_else(|| default_u(cfg));
    MemorySchedule {
        phases: phase_cap(params.ell, u, cfg.n()),
        propagation_rounds: params
            .propagation_rounds_override
            .unwrap_or_else(|| propagation_rounds(cfg.n(), cfg.k())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemorySchedule {
    pub phases: u32,
    pub propagation_rounds: u32,
}

impl MemorySchedule {
    pub fn rounds_per_phase(&self) -> u64 {
        1 + self.propagation_rounds as u64
    }

    pub fn max_rounds(&self) -> u64 {
        self.phases as u64 * self.rounds_per_phase()
    }
}

/// Round cap of the two-choices protocol: `max(max_rounds, ceil(k log2 n))`.
pub fn two_choices_cap(n: u64, k: usize, params: &ProtocolParams) -> u64 {
    let listing = (k as f64 * (n.max(2) as f64).log2()).ceil() as u64;
    params.max_rounds.max(listing)
}

/// Phases each node runs in the asynchronous protocol: `10 ceil(log2 n)`.
pub fn async_phases(n: u64) -> u32 {
    10 * (n.max(2) as f64).log2().ceil() as u32
}

/// Two-choices step followed by two bit-propagation ticks.
pub const ASYNC_STEPS_PER_PHASE: u8 = 3;
