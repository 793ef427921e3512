//! Text inputs: count lists, grid lists, bias and `k` rules, and the
//! key-value experiment files accepted by the CLI.
//!
//! Everything here takes untrusted text and must fail with an [`Error`]
//! rather than panic.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::{Engine, ExperimentSpec, Initializer, Protocol};
use crate::model::{ProtocolParams, MAX_POPULATION};

fn parse_u64(token: &str, what: &str) -> Result<u64> {
    let t = token.trim();
    if let Some(rest) = t.strip_prefix('-') {
        if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
            return Err(Error::Parse(format!("negative {what} '{t}'")));
        }
    }
    t.parse::<u64>()
        .map_err(|_| Error::Parse(format!("invalid {what} '{t}'")))
}

fn parse_f64(token: &str, what: &str) -> Result<f64> {
    let t = token.trim();
    let v = t
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("invalid {what} '{t}'")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("{what} must be finite, got '{t}'")));
    }
    Ok(v)
}

/// Comma-separated color counts such as `6,3,1`.
pub fn parse_counts(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty count list".into()));
    }
    let counts = s
        .split(',')
        .map(|t| parse_u64(t, "count"))
        .collect::<Result<Vec<_>>>()?;
    let mut total: u64 = 0;
    for &c in &counts {
        total = total
            .checked_add(c)
            .filter(|&t| t <= MAX_POPULATION)
            .ok_or_else(|| Error::Parse("counts sum past 2^62".into()))?;
    }
    if total == 0 {
        return Err(Error::Parse("counts are all zero".into()));
    }
    Ok(counts)
}

/// Comma-separated list of values parsed with `item`.
pub fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty list".into()));
    }
    s.split(',').map(|t| item(t.trim())).collect()
}

/// Population sizes; accepts plain integers and powers written `10^6` or `1e6`.
pub fn parse_population(token: &str) -> Result<u64> {
    let t = token.trim();
    let n = if let Some((base, exp)) = t.split_once('^') {
        let base = parse_u64(base, "base")?;
        let exp = u32::try_from(parse_u64(exp, "exponent")?)
            .map_err(|_| Error::Parse(format!("exponent too large in '{t}'")))?;
        base.checked_pow(exp)
            .ok_or_else(|| Error::Parse(format!("'{t}' overflows")))?
    } else if t.contains(['e', 'E']) {
        let v = parse_f64(t, "population")?;
        if v < 1.0 || v > MAX_POPULATION as f64 || v.fract() != 0.0 {
            return Err(Error::Parse(format!("population '{t}' is not a positive integer")));
        }
        v as u64
    } else {
        parse_u64(t, "population")?
    };
    if n == 0 || n > MAX_POPULATION {
        return Err(Error::Parse(format!("population '{t}' out of range")));
    }
    Ok(n)
}

/// Number of colors, either explicit or tied to the population size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ColorRule {
    Fixed(usize),
    /// `ceil(sqrt(n))`.
    SqrtN,
}

impl ColorRule {
    pub fn resolve(self, n: u64) -> usize {
        match self {
            ColorRule::Fixed(k) => k,
            ColorRule::SqrtN => (n as f64).sqrt().ceil().max(1.0) as usize,
        }
    }
}

impl FromStr for ColorRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t == "sqrt" || t == "sqrt-n" {
            return Ok(ColorRule::SqrtN);
        }
        let k = parse_u64(t, "color count")?;
        if k == 0 || k > u32::MAX as u64 {
            return Err(Error::Parse(format!("color count '{t}' out of range")));
        }
        Ok(ColorRule::Fixed(k as usize))
    }
}

/// Additive bias of the leader, explicit or as a multiple of a concentration
/// scale: `sqrt-n-ln-n` is `ceil(c sqrt(n ln n))`, `sqrt-n-ln3-n` is
/// `ceil(c sqrt(n ln^3 n))`, written `[c*]name`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BiasRule {
    Absolute(u64),
    SqrtNLnN(f64),
    SqrtNLn3N(f64),
}

impl BiasRule {
    pub fn resolve(self, n: u64) -> u64 {
        let nf = n as f64;
        let ln = nf.ln().max(0.0);
        match self {
            BiasRule::Absolute(b) => b,
            BiasRule::SqrtNLnN(c) => (c * (nf * ln).sqrt()).ceil() as u64,
            BiasRule::SqrtNLn3N(c) => (c * (nf * ln.powi(3)).sqrt()).ceil() as u64,
        }
    }
}

impl FromStr for BiasRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let (scale, name) = match t.split_once('*') {
            Some((c, name)) => (Some(parse_f64(c, "bias multiplier")?), name.trim()),
            None => (None, t),
        };
        let c = scale.unwrap_or(1.0);
        if c < 0.0 {
            return Err(Error::Parse(format!("negative bias multiplier in '{t}'")));
        }
        match name {
            "sqrt-n-ln-n" => Ok(BiasRule::SqrtNLnN(c)),
            "sqrt-n-ln3-n" => Ok(BiasRule::SqrtNLn3N(c)),
            _ if scale.is_none() => Ok(BiasRule::Absolute(parse_u64(name, "bias")?)),
            _ => Err(Error::Parse(format!("unknown bias rule '{name}'"))),
        }
    }
}

/// `key = value` lines; `#` starts a comment. Keys are case-sensitive and
/// `_` is read as `-`. Repeating a key is an error.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", lineno + 1)));
        }
        let value = value.trim().trim_matches('"').to_string();
        if out.insert(key.clone(), value).is_some() {
            return Err(Error::Parse(format!("line {}: duplicate key '{key}'", lineno + 1)));
        }
    }
    Ok(out)
}

/// Experiment settings gathered from flags or a config file. Unset fields
/// fall through to the next layer in [`SpecFields::overlay`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpecFields {
    pub protocol: Option<Protocol>,
    pub engine: Option<Engine>,
    pub init: Option<String>,
    pub n: Option<u64>,
    pub k: Option<ColorRule>,
    pub bias: Option<BiasRule>,
    pub counts: Option<Vec<u64>>,
    pub z_prime: Option<f64>,
    pub z: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub ell: Option<u32>,
    pub u: Option<f64>,
    pub propagation_rounds: Option<u32>,
    pub max_rounds: Option<u64>,
    pub no_self_sampling: Option<bool>,
    pub async_time_cap: Option<f64>,
    pub trajectory: Option<bool>,
    pub format: Option<String>,
    pub out: Option<String>,
    pub threads: Option<usize>,
}

fn parse_bool(v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(Error::Parse(format!("invalid boolean '{other}'"))),
    }
}

fn parse_u32(v: &str, what: &str) -> Result<u32> {
    u32::try_from(parse_u64(v, what)?).map_err(|_| Error::Parse(format!("{what} too large")))
}

impl SpecFields {
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut f = SpecFields::default();
        for (key, v) in map {
            match key.as_str() {
                "protocol" => f.protocol = Some(v.parse()?),
                "engine" => f.engine = Some(v.parse()?),
                "init" => f.init = Some(v.clone()),
                "n" => f.n = Some(parse_population(v)?),
                "k" => f.k = Some(v.parse()?),
                "bias" => f.bias = Some(v.parse()?),
                "counts" => f.counts = Some(parse_counts(v)?),
                "z-prime" => f.z_prime = Some(parse_f64(v, "z'")?),
                "z" => f.z = Some(parse_f64(v, "z")?),
                "trials" => f.trials = Some(parse_u64(v, "trials")?),
                "seed" => f.seed = Some(parse_u64(v, "seed")?),
                "ell" => f.ell = Some(parse_u32(v, "ell")?),
                "u" => f.u = Some(parse_f64(v, "U")?),
                "propagation-rounds" => f.propagation_rounds = Some(parse_u32(v, "propagation rounds")?),
                "max-rounds" => f.max_rounds = Some(parse_u64(v, "max rounds")?),
                "no-self-sampling" => f.no_self_sampling = Some(parse_bool(v)?),
                "async-time-cap" => f.async_time_cap = Some(parse_f64(v, "async time cap")?),
                "trajectory" => f.trajectory = Some(parse_bool(v)?),
                "format" => f.format = Some(v.clone()),
                "out" => f.out = Some(v.clone()),
                "threads" => {
                    f.threads = Some(
                        usize::try_from(parse_u64(v, "threads")?)
                            .map_err(|_| Error::Parse("threads too large".into()))?,
                    )
                }
                other => return Err(Error::Parse(format!("unknown key '{other}'"))),
            }
        }
        Ok(f)
    }

    /// Parses a key-value config file.
    pub fn from_config_text(text: &str) -> Result<Self> {
        Self::from_map(&parse_key_values(text)?)
    }

    /// Fields set in `self` win over those in `lower`.
    pub fn overlay(self, lower: SpecFields) -> SpecFields {
        SpecFields {
            protocol: self.protocol.or(lower.protocol),
            engine: self.engine.or(lower.engine),
            init: self.init.or(lower.init),
            n: self.n.or(lower.n),
            k: self.k.or(lower.k),
            bias: self.bias.or(lower.bias),
            counts: self.counts.or(lower.counts),
            z_prime: self.z_prime.or(lower.z_prime),
            z: self.z.or(lower.z),
            trials: self.trials.or(lower.trials),
            seed: self.seed.or(lower.seed),
            ell: self.ell.or(lower.ell),
            u: self.u.or(lower.u),
            propagation_rounds: self.propagation_rounds.or(lower.propagation_rounds),
            max_rounds: self.max_rounds.or(lower.max_rounds),
            no_self_sampling: self.no_self_sampling.or(lower.no_self_sampling),
            async_time_cap: self.async_time_cap.or(lower.async_time_cap),
            trajectory: self.trajectory.or(lower.trajectory),
            format: self.format.or(lower.format),
            out: self.out.or(lower.out),
            threads: self.threads.or(lower.threads),
        }
    }

    pub fn params(&self) -> ProtocolParams {
        let d = ProtocolParams::default();
        ProtocolParams {
            ell: self.ell.unwrap_or(d.ell),
            u_override: self.u,
            propagation_rounds_override: self.propagation_rounds,
            max_rounds: self.max_rounds.unwrap_or(d.max_rounds),
            sample_includes_self: !self.no_self_sampling.unwrap_or(false),
            async_time_cap: self.async_time_cap,
        }
    }

    fn need<T: Copy>(v: Option<T>, name: &str, init: &str) -> Result<T> {
        v.ok_or_else(|| Error::InvalidParameter(format!("--{name} is required for init '{init}'")))
    }

    pub fn initializer(&self) -> Result<Initializer> {
        let init = match (&self.init, &self.counts) {
            (Some(i), _) => i.as_str(),
            (None, Some(_)) => "custom",
            (None, None) => "equal-plus-bias",
        };
        match init {
            "custom" => {
                let counts = self.counts.clone().ok_or_else(|| {
                    Error::InvalidParameter("--counts is required for init 'custom'".into())
                })?;
                Ok(Initializer::Custom(counts))
            }
            "equal-plus-bias" => {
                let n = Self::need(self.n, "n", init)?;
                let k = Self::need(self.k, "k", init)?.resolve(n);
                let bias = self.bias.unwrap_or(BiasRule::Absolute(0)).resolve(n);
                Ok(Initializer::EqualPlusBias { n, k, bias })
            }
            "theorem3" => {
                let n = Self::need(self.n, "n", init)?;
                let k = Self::need(self.k, "k", init)?.resolve(n);
                let z_prime = Self::need(self.z_prime, "z-prime", init)?;
                Ok(Initializer::Theorem3 { n, k, z_prime })
            }
            "theorem4" => {
                let n = Self::need(self.n, "n", init)?;
                let k = Self::need(self.k, "k", init)?.resolve(n);
                let z = Self::need(self.z, "z", init)?;
                Ok(Initializer::Theorem4 { n, k, z })
            }
            other => Err(Error::Parse(format!("unknown initializer '{other}'"))),
        }
    }

    /// Fills defaults (two-choices, aggregate engine, 1 trial, seed 0) and
    /// validates the result.
    pub fn build(&self) -> Result<ExperimentSpec> {
        let protocol = self.protocol.unwrap_or(Protocol::TwoChoices);
        let engine = self.engine.unwrap_or(if protocol == Protocol::Async {
            Engine::Agent
        } else {
            Engine::Aggregate
        });
        let spec = ExperimentSpec {
            protocol,
            engine,
            initializer: self.initializer()?,
            trials: self.trials.unwrap_or(1),
            seed: self.seed.unwrap_or(0),
            params: self.params(),
            record_trajectory: self.trajectory.unwrap_or(false),
        };
        spec.validate()?;
        Ok(spec)
    }
}
