//! `plurality`: run plurality-consensus experiments from the command line.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plurality_core::harness::{self, ExperimentSpec, TrialRecord};
use plurality_core::parse::{self, BiasRule, ColorRule, SpecFields};
use plurality_core::validation::{self, Mode};
use plurality_core::{oracle, output, Configuration, Error, Protocol};

const THREADS_ENV: &str = "PLURALITY_THREADS";

#[derive(Parser)]
#[command(name = "plurality", version, about = "Plurality consensus simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run independent trials of one experiment.
    Simulate(SimulateArgs),
    /// Summarize a grid of experiments, one row per cell.
    Sweep(SweepArgs),
    /// Emit the data behind the simulation figures.
    Replicate {
        #[command(subcommand)]
        figure: Figure,
    },
    /// Evaluate closed-form and exact one-round quantities.
    Oracle {
        #[command(subcommand)]
        query: Query,
    },
    /// Run the acceptance suite.
    Validate {
        /// Reduced trial counts.
        #[arg(long)]
        fast: bool,
        #[arg(long, default_value_t = validation::DEFAULT_SEED)]
        seed: u64,
    },
}

/// Protocol parameters shared by every experiment command.
#[derive(Args, Default)]
struct ParamArgs {
    #[arg(long)]
    ell: Option<String>,
    /// Override for U in the phase cap.
    #[arg(long)]
    u: Option<String>,
    #[arg(long)]
    propagation_rounds: Option<String>,
    #[arg(long)]
    max_rounds: Option<String>,
    /// Async run length cap in time units.
    #[arg(long)]
    async_time_cap: Option<String>,
    /// Sample uniformly among the other n-1 nodes.
    #[arg(long)]
    no_self_sampling: bool,
}

#[derive(Args)]
struct OutputArgs {
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to $PLURALITY_THREADS, then all cores.
    #[arg(long)]
    threads: Option<String>,
    /// Key-value file with default settings; flags win over it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    engine: Option<String>,
    /// equal-plus-bias, theorem3, theorem4 or custom.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Number of colors, or `sqrt`.
    #[arg(long)]
    k: Option<String>,
    /// Absolute bias or `[c*]sqrt-n-ln-n` / `[c*]sqrt-n-ln3-n`.
    #[arg(long)]
    bias: Option<String>,
    #[arg(long)]
    counts: Option<String>,
    #[arg(long)]
    z_prime: Option<String>,
    #[arg(long)]
    z: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Include per-round reports (JSON only).
    #[arg(long)]
    trajectory: bool,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value = "two-choices")]
    protocols: String,
    #[arg(long)]
    engine: Option<String>,
    #[arg(long)]
    n: String,
    #[arg(long)]
    k: String,
    #[arg(long, default_value = "0")]
    bias: String,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Subcommand)]
enum Figure {
    /// Rounds to consensus over an n grid for all three protocols.
    Runtime {
        #[arg(long, default_value = "1000,10000,100000")]
        n_grid: String,
        #[arg(long, default_value_t = 10)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<String>,
    },
    /// Per-round bit shares of one memory-protocol run.
    Bits {
        #[arg(long, default_value = "10^6")]
        n: String,
        #[arg(long, default_value = "sqrt")]
        k: String,
        #[arg(long, default_value = "sqrt-n-ln-n")]
        bias: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        engine: Option<String>,
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Query {
    /// Expected counts after one two-choices round.
    ExpectedNext {
        #[arg(long)]
        counts: String,
    },
    /// Mean and variance of every flow f_ij.
    Flows {
        #[arg(long)]
        counts: String,
    },
    /// Expected set bits after the first round of a phase.
    Bits {
        #[arg(long)]
        counts: String,
    },
    Theorem3 {
        #[arg(long)]
        n: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        z_prime: f64,
    },
    Theorem4 {
        #[arg(long)]
        n: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        z: f64,
    },
    /// Full distribution of the next configuration (small n only).
    ExactTransition {
        #[arg(long)]
        counts: String,
    },
}

enum Failure {
    Core(Error),
    Io(String),
    Suite(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

#[derive(Clone, Copy, PartialEq)]
enum Format {
    Csv,
    Json,
}

fn format_of(s: Option<&str>) -> Result<Format, Error> {
    match s.map(str::trim) {
        None | Some("csv") => Ok(Format::Csv),
        Some("json") => Ok(Format::Json),
        Some(other) => Err(Error::Parse(format!("unknown format '{other}'"))),
    }
}

fn put(map: &mut BTreeMap<String, String>, key: &str, v: &Option<String>) {
    if let Some(v) = v {
        map.insert(key.to_string(), v.clone());
    }
}

impl ParamArgs {
    fn insert(&self, map: &mut BTreeMap<String, String>) {
        put(map, "ell", &self.ell);
        put(map, "u", &self.u);
        put(map, "propagation-rounds", &self.propagation_rounds);
        put(map, "max-rounds", &self.max_rounds);
        put(map, "async-time-cap", &self.async_time_cap);
        if self.no_self_sampling {
            map.insert("no-self-sampling".into(), "true".into());
        }
    }
}

impl OutputArgs {
    fn insert(&self, map: &mut BTreeMap<String, String>) {
        put(map, "format", &self.format);
        put(map, "out", &self.out.as_ref().map(|p| p.display().to_string()));
        put(map, "threads", &self.threads);
    }
}

/// Flags over config file over defaults.
fn layered(flags: BTreeMap<String, String>, config: Option<&Path>) -> Result<SpecFields, Failure> {
    let upper = SpecFields::from_map(&flags)?;
    let lower = match config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            SpecFields::from_config_text(&text)?
        }
        None => SpecFields::default(),
    };
    Ok(upper.overlay(lower))
}

fn threads(fields: &SpecFields) -> Result<Option<usize>, Error> {
    if fields.threads.is_some() {
        return Ok(fields.threads);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::Parse(format!("invalid {THREADS_ENV} '{v}'"))),
        Err(_) => Ok(None),
    }
}

fn emit(out: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> CliResult) -> CliResult {
    match out {
        Some(path) => {
            let file = fs::File::create(path)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            let mut w = io::BufWriter::new(file);
            body(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn write_json(w: &mut dyn Write, value: &serde_json::Value) -> CliResult {
    serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Failure::Io(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

fn run_spec(spec: &ExperimentSpec, threads: Option<usize>) -> Result<Vec<TrialRecord>, Error> {
    match threads {
        Some(t) => harness::run_experiment_with_threads(spec, t),
        None => harness::run_experiment(spec),
    }
}

fn simulate(args: SimulateArgs) -> CliResult {
    let mut map = BTreeMap::new();
    put(&mut map, "protocol", &args.protocol);
    put(&mut map, "engine", &args.engine);
    put(&mut map, "init", &args.init);
    put(&mut map, "n", &args.n);
    put(&mut map, "k", &args.k);
    put(&mut map, "bias", &args.bias);
    put(&mut map, "counts", &args.counts);
    put(&mut map, "z-prime", &args.z_prime);
    put(&mut map, "z", &args.z);
    put(&mut map, "trials", &args.trials);
    put(&mut map, "seed", &args.seed);
    if args.trajectory {
        map.insert("trajectory".into(), "true".into());
    }
    args.params.insert(&mut map);
    args.output.insert(&mut map);
    let fields = layered(map, args.output.config.as_deref())?;

    let format = format_of(fields.format.as_deref())?;
    let spec = fields.build()?;
    if spec.record_trajectory && format == Format::Csv {
        return Err(Error::InvalidParameter("trajectory output needs --format json".into()).into());
    }
    let records = run_spec(&spec, threads(&fields)?)?;
    emit(fields.out.as_deref().map(Path::new), |w| match format {
        Format::Csv => Ok(output::write_records_csv(w, &records)?),
        Format::Json => {
            let mut value = output::records_json(&records);
            if spec.record_trajectory {
                for (row, r) in value.as_array_mut().expect("array").iter_mut().zip(&records) {
                    row["trajectory"] = serde_json::to_value(&r.trajectory).expect("serializable");
                }
            }
            write_json(w, &value)
        }
    })
}

fn sweep(args: SweepArgs) -> CliResult {
    let mut map = BTreeMap::new();
    put(&mut map, "engine", &args.engine);
    put(&mut map, "trials", &args.trials);
    put(&mut map, "seed", &args.seed);
    args.params.insert(&mut map);
    args.output.insert(&mut map);
    let base = layered(map, args.output.config.as_deref())?;

    let protocols = parse::parse_list(&args.protocols, |s| s.parse::<Protocol>())?;
    let ns = parse::parse_list(&args.n, parse::parse_population)?;
    let ks = parse::parse_list(&args.k, |s| s.parse::<ColorRule>())?;
    let biases = parse::parse_list(&args.bias, |s| s.parse::<BiasRule>())?;

    let mut specs = Vec::new();
    for &protocol in &protocols {
        for &n in &ns {
            for &k in &ks {
                for &bias in &biases {
                    let cell = SpecFields {
                        protocol: Some(protocol),
                        init: Some("equal-plus-bias".into()),
                        n: Some(n),
                        k: Some(k),
                        bias: Some(bias),
                        counts: None,
                        ..base.clone()
                    };
                    specs.push(cell.build()?);
                }
            }
        }
    }
    let format = format_of(base.format.as_deref())?;
    let result = harness::sweep(&specs, threads(&base)?)?;
    emit(base.out.as_deref().map(Path::new), |w| match format {
        Format::Csv => Ok(output::write_sweep_csv(w, &result)?),
        Format::Json => write_json(w, &output::sweep_json(&result)),
    })
}

fn replicate(figure: Figure) -> CliResult {
    match figure {
        Figure::Runtime {
            n_grid,
            trials,
            seed,
            format,
            out,
            threads,
        } => sweep(SweepArgs {
            protocols: "two-choices,memory,async".into(),
            engine: None,
            n: n_grid,
            k: "sqrt".into(),
            bias: "sqrt-n-ln-n".into(),
            trials: Some(trials.to_string()),
            seed: Some(seed.to_string()),
            params: ParamArgs::default(),
            output: OutputArgs {
                format,
                out,
                threads,
                config: None,
            },
        }),
        Figure::Bits {
            n,
            k,
            bias,
            seed,
            engine,
            format,
            out,
        } => {
            let format = format_of(format.as_deref())?;
            let mut map = BTreeMap::new();
            map.insert("protocol".into(), "memory".into());
            map.insert("n".into(), n);
            map.insert("k".into(), k);
            map.insert("bias".into(), bias);
            map.insert("seed".into(), seed.to_string());
            map.insert("trajectory".into(), "true".into());
            put(&mut map, "engine", &engine);
            let spec = SpecFields::from_map(&map)?.build()?;
            let rows = harness::trajectory_bits(&spec)?;
            emit(out.as_deref(), |w| match format {
                Format::Csv => Ok(output::write_bits_csv(w, &rows)?),
                Format::Json => write_json(w, &serde_json::to_value(&rows).expect("serializable")),
            })
        }
    }
}

fn configuration(counts: &str) -> Result<Configuration, Error> {
    Configuration::new(parse::parse_counts(counts)?)
}

fn oracle_query(query: Query) -> CliResult {
    let value = match query {
        Query::ExpectedNext { counts } => {
            serde_json::json!(oracle::expected_next_all(&configuration(&counts)?))
        }
        Query::Flows { counts } => {
            let cfg = configuration(&counts)?;
            let k = cfg.k();
            let mut mean = vec![vec![0.0; k]; k];
            let mut var = vec![vec![0.0; k]; k];
            for i in 0..k {
                for j in (0..k).filter(|&j| j != i) {
                    mean[i][j] = oracle::expected_flow(&cfg, i, j)?;
                    var[i][j] = oracle::flow_variance(&cfg, i, j)?;
                }
            }
            serde_json::json!({ "mean": mean, "variance": var })
        }
        Query::Bits { counts } => {
            let cfg = configuration(&counts)?;
            let per_color = (0..cfg.k())
                .map(|j| oracle::per_color_bit_expectation(&cfg, j))
                .collect::<Result<Vec<_>, _>>()?;
            serde_json::json!({
                "total": oracle::expected_bits_after_two_choices(&cfg),
                "per_color": per_color,
            })
        }
        Query::Theorem3 { n, k, z_prime } => {
            let n = parse::parse_population(&n)?;
            serde_json::json!(oracle::theorem3_configuration(n, k, z_prime)?.counts())
        }
        Query::Theorem4 { n, k, z } => {
            let n = parse::parse_population(&n)?;
            serde_json::json!(oracle::theorem4_configuration(n, k, z)?.counts())
        }
        Query::ExactTransition { counts } => {
            oracle::exact_transition(&configuration(&counts)?)?.to_json()
        }
    };
    emit(None, |w| write_json(w, &value))
}

fn validate(fast: bool, seed: u64) -> CliResult {
    let mode = if fast { Mode::Fast } else { Mode::Full };
    let mut failed = 0;
    for (_, criterion) in validation::CRITERIA {
        let result = criterion(mode, seed);
        println!("{result}");
        failed += usize::from(!result.passed);
    }
    if failed > 0 {
        return Err(Failure::Suite(failed));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let line = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: usage: {}", line.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Sweep(args) => sweep(args),
        Command::Replicate { figure } => replicate(figure),
        Command::Oracle { query } => oracle_query(query),
        Command::Validate { fast, seed } => validate(fast, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {}: {}", e.kind(), e.message());
            ExitCode::from(if e.kind() == "parse" { 2 } else { 1 })
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: io: {}", msg.replace('\n', " "));
            ExitCode::from(1)
        }
        Err(Failure::Suite(n)) => {
            eprintln!("error: validation: {n} acceptance criteria failed");
            ExitCode::from(1)
        }
    }
}
