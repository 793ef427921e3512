//! Domain types shared by both engines: color configurations, per-node
//! populations, per-(color, bit) aggregate state and protocol parameters.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest population the engines accept. Keeps `c_i * c_j` style products
/// and sums of counts clear of 64-bit overflow.
pub const MAX_POPULATION: u64 = 1 << 62;

/// Largest number of colors any initializer will build.
pub const MAX_COLORS: usize = 1 << 20;

pub(crate) fn check_colors(k: usize) -> Result<()> {
    if k > MAX_COLORS {
        return Err(Error::InvalidConfiguration(format!("{k} colors exceeds the limit of {MAX_COLORS}")));
    }
    Ok(())
}

/// Index of a color within its configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColorId(pub u32);

impl ColorId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for ColorId {
    fn from(i: usize) -> Self {
        ColorId(u32::try_from(i).expect("color index exceeds u32"))
    }
}

impl fmt::Display for ColorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Color counts `c_1..c_k` summing to `n`.
///
/// Counts are kept in input order. Colors that reach zero stay in the vector
/// so `k` is fixed for the lifetime of a run.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    counts: Vec<u64>,
    n: u64,
}

impl Configuration {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidConfiguration("no colors given".into()));
        }
        check_colors(counts.len())?;
        let mut n: u64 = 0;
        for &c in &counts {
            n = n
                .checked_add(c)
                .filter(|&s| s <= MAX_POPULATION)
                .ok_or_else(|| Error::InvalidConfiguration("population exceeds 2^62".into()))?;
        }
        if n == 0 {
            return Err(Error::InvalidConfiguration("all counts are zero".into()));
        }
        Ok(Configuration { counts, n })
    }

    /// Builds a configuration from signed counts, rejecting negative entries.
    pub fn from_signed(counts: &[i64]) -> Result<Self> {
        let counts = counts
            .iter()
            .map(|&c| {
                u64::try_from(c).map_err(|_| {
                    Error::InvalidConfiguration(format!("negative count {c}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(counts)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, color: ColorId) -> u64 {
        self.counts[color.index()]
    }

    pub fn into_counts(self) -> Vec<u64> {
        self.counts
    }

    /// The color holding every node, if any.
    pub fn unanimous(&self) -> Option<ColorId> {
        self.counts
            .iter()
            .position(|&c| c == self.n)
            .map(ColorId::from)
    }

    pub fn is_unanimous(&self) -> bool {
        self.unanimous().is_some()
    }

    /// Index of the largest color; ties go to the lowest index.
    pub fn leader(&self) -> ColorId {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        ColorId::from(best)
    }

    /// Largest and second-largest counts `(a, b)`; `b = 0` when `k = 1`.
    pub fn top_two(&self) -> (u64, u64) {
        let mut a = 0;
        let mut b = 0;
        for &c in &self.counts {
            if c > a {
                b = a;
                a = c;
            } else if c > b {
                b = c;
            }
        }
        (a, b)
    }

    pub fn fraction(&self, color: ColorId) -> f64 {
        self.count(color) as f64 / self.n as f64
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Position of a node inside the asynchronous program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProgramCounter {
    /// Completed phases.
    pub phase: u32,
    /// 0 = two-choices step, 1..=2 = bit-propagation ticks.
    pub step: u8,
}

/// Per-node state: color, memory bit and, in asynchronous mode, a program counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentPopulation {
    pub(crate) k: usize,
    pub(crate) colors: Vec<ColorId>,
    pub(crate) bits: Vec<bool>,
    pub(crate) pcs: Option<Vec<ProgramCounter>>,
}

impl AgentPopulation {
    /// Lays nodes out color by color; all bits start unset.
    pub fn from_configuration(cfg: &Configuration) -> Self {
        let n = usize::try_from(cfg.n()).expect("population does not fit in memory");
        let mut colors = Vec::with_capacity(n);
        for (i, &c) in cfg.counts().iter().enumerate() {
            colors.extend(std::iter::repeat_n(ColorId::from(i), c as usize));
        }
        AgentPopulation {
            k: cfg.k(),
            colors,
            bits: vec![false; n],
            pcs: None,
        }
    }

    pub fn from_parts(k: usize, colors: Vec<ColorId>, bits: Vec<bool>) -> Result<Self> {
        if colors.is_empty() || k == 0 {
            return Err(Error::InvalidConfiguration("empty population".into()));
        }
        if colors.len() != bits.len() {
            return Err(Error::InvalidConfiguration(
                "colors and bits differ in length".into(),
            ));
        }
        if let Some(c) = colors.iter().find(|c| c.index() >= k) {
            return Err(Error::InvalidConfiguration(format!(
                "color {c} out of range for k={k}"
            )));
        }
        Ok(AgentPopulation {
            k,
            colors,
            bits,
            pcs: None,
        })
    }

    /// Attaches fresh program counters (phase 0, two-choices step) to every node.
    pub fn with_program_counters(mut self) -> Self {
        self.pcs = Some(vec![ProgramCounter::default(); self.colors.len()]);
        self
    }

    pub fn n(&self) -> usize {
        self.colors.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn colors(&self) -> &[ColorId] {
        &self.colors
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn program_counters(&self) -> Option<&[ProgramCounter]> {
        self.pcs.as_deref()
    }

    pub fn color_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.k];
        for c in &self.colors {
            counts[c.index()] += 1;
        }
        counts
    }

    /// Number of set bits per color.
    pub fn set_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.k];
        for (c, &b) in self.colors.iter().zip(&self.bits) {
            if b {
                counts[c.index()] += 1;
            }
        }
        counts
    }

    pub fn set_total(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    pub fn configuration(&self) -> Configuration {
        Configuration::new(self.color_counts()).expect("population is non-empty")
    }

    pub fn aggregate(&self) -> AggregateState {
        let cfg = self.configuration();
        let set = self.set_counts();
        let unset = cfg.counts().iter().zip(&set).map(|(c, s)| c - s).collect();
        AggregateState {
            set_counts: set,
            unset_counts: unset,
            n: cfg.n(),
        }
    }
}

/// Counts per (color, bit) class: the exact macroscopic state of both
/// synchronous protocols on the complete graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AggregateState {
    set_counts: Vec<u64>,
    unset_counts: Vec<u64>,
    n: u64,
}

impl AggregateState {
    /// All nodes start with their bit unset.
    pub fn from_configuration(cfg: &Configuration) -> Self {
        AggregateState {
            set_counts: vec![0; cfg.k()],
            unset_counts: cfg.counts().to_vec(),
            n: cfg.n(),
        }
    }

    pub fn new(set_counts: Vec<u64>, unset_counts: Vec<u64>) -> Result<Self> {
        if set_counts.len() != unset_counts.len() {
            return Err(Error::InvalidConfiguration(
                "set and unset vectors differ in length".into(),
            ));
        }
        let totals: Vec<u64> = set_counts
            .iter()
            .zip(&unset_counts)
            .map(|(s, u)| s.checked_add(*u))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::InvalidConfiguration("count overflow".into()))?;
        let cfg = Configuration::new(totals)?;
        Ok(AggregateState {
            set_counts,
            unset_counts,
            n: cfg.n(),
        })
    }

    pub(crate) fn from_raw(set_counts: Vec<u64>, unset_counts: Vec<u64>, n: u64) -> Self {
        debug_assert_eq!(
            set_counts.iter().sum::<u64>() + unset_counts.iter().sum::<u64>(),
            n
        );
        AggregateState {
            set_counts,
            unset_counts,
            n,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> usize {
        self.set_counts.len()
    }

    pub fn set_counts(&self) -> &[u64] {
        &self.set_counts
    }

    pub fn unset_counts(&self) -> &[u64] {
        &self.unset_counts
    }

    /// `x(t)`: total number of nodes with a set bit.
    pub fn set_total(&self) -> u64 {
        self.set_counts.iter().sum()
    }

    pub fn color_counts(&self) -> Vec<u64> {
        self.set_counts
            .iter()
            .zip(&self.unset_counts)
            .map(|(s, u)| s + u)
            .collect()
    }

    pub fn configuration(&self) -> Configuration {
        Configuration {
            counts: self.color_counts(),
            n: self.n,
        }
    }

    /// Same colors, every bit cleared.
    pub fn cleared(&self) -> Self {
        AggregateState::from_configuration(&self.configuration())
    }
}

/// Knobs shared by the protocol runners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Phase multiplier `ell` of the memory protocol.
    pub ell: u32,
    /// Upper bound `U` on `c_2 / (c_1 - c_2)`; derived from the input when absent.
    pub u_override: Option<f64>,
    pub propagation_rounds_override: Option<u32>,
    /// Round cap for the two-choices protocol (the runner never uses less
    /// than `ceil(k log2 n)`).
    pub max_rounds: u64,
    /// Whether a node may sample itself. `true` matches the `c_j / n`
    /// probabilities of the closed forms.
    pub sample_includes_self: bool,
    /// Optional time-unit cap for the asynchronous protocol.
    pub async_time_cap: Option<f64>,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            ell: 10,
            u_override: None,
            propagation_rounds_override: None,
            max_rounds: 100_000,
            sample_includes_self: true,
            async_time_cap: None,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        if self.ell == 0 {
            return Err(Error::InvalidParameter("ell must be at least 1".into()));
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidParameter("max_rounds must be at least 1".into()));
        }
        if let Some(u) = self.u_override {
            if !(u.is_finite() && u > 0.0) {
                return Err(Error::InvalidParameter(format!("U must be positive, got {u}")));
            }
        }
        if let Some(cap) = self.async_time_cap {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "async time cap must be positive, got {cap}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_configuration_examples() {
        let c = Configuration::new(vec![6, 3, 1]).unwrap();
        assert_eq!((c.n(), c.k()), (10, 3));
        let c = Configuration::new(vec![10]).unwrap();
        assert_eq!((c.n(), c.k()), (10, 1));
        let c = Configuration::new(vec![0, 5]).unwrap();
        assert_eq!((c.n(), c.k()), (5, 2));
        assert_eq!(c.counts()[0], 0);
    }

    #[test]
    fn make_configuration_rejects_bad_input() {
        assert!(Configuration::new(vec![]).is_err());
        assert!(Configuration::new(vec![0, 0]).is_err());
        assert!(Configuration::from_signed(&[3, -1]).is_err());
        assert!(Configuration::new(vec![MAX_POPULATION, 1]).is_err());
        assert!(Configuration::new(vec![1; MAX_COLORS + 1]).is_err());
    }

    #[test]
    fn leader_and_top_two_ignore_storage_order() {
        let c = Configuration::new(vec![2, 7, 7, 1]).unwrap();
        assert_eq!(c.leader(), ColorId(1));
        assert_eq!(c.top_two(), (7, 7));
        assert_eq!(Configuration::new(vec![4]).unwrap().top_two(), (4, 0));
    }

    #[test]
    fn population_round_trip() {
        let cfg = Configuration::new(vec![3, 0, 4, 1]).unwrap();
        let pop = AgentPopulation::from_configuration(&cfg);
        assert_eq!(pop.configuration(), cfg);
        assert_eq!(pop.set_total(), 0);
        assert_eq!(pop.aggregate(), AggregateState::from_configuration(&cfg));
    }

    #[test]
    fn aggregate_state_validation() {
        assert!(AggregateState::new(vec![1], vec![1, 2]).is_err());
        let s = AggregateState::new(vec![1, 0], vec![2, 3]).unwrap();
        assert_eq!(s.n(), 6);
        assert_eq!(s.set_total(), 1);
        assert_eq!(s.configuration().counts(), &[3, 3]);
    }

    #[test]
    fn params_validation() {
        assert!(ProtocolParams::default().validate().is_ok());
        let p = ProtocolParams {
            ell: 0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = ProtocolParams {
            max_rounds: 0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }
}
