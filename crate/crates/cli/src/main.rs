//! `noma`: power allocation, sweeps, timing runs and self-checks for the
//! two-user massive-MIMO NOMA downlink.
//!
//! Exit status: 0 on success, 1 on a runtime failure (including an
//! infeasible rate floor), 2 on a usage or configuration error.

mod config;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use noma_core::bench::{self, grids, Axis, ResultRow, SweepSpec};
use noma_core::channel::db_to_linear;
use noma_core::optimizer::{bisect_allocate, Method};
use noma_core::{validate, AllocationProblem, SystemConfig};

use config::{ConfigError, ConfigFile, List};

#[derive(Debug, Parser)]
#[command(
    name = "noma",
    version,
    about = "Sum-SE power allocation for two-user massive-MIMO NOMA"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one allocation problem and print the split.
    Allocate(Opts),
    /// Solve along one parameter axis and write a CSV table.
    Sweep(Opts),
    /// Time the allocators across antenna counts and write a CSV table.
    Bench(Opts),
    /// Run the Marchenko-Pastur self-checks.
    Validate(Opts),
}

#[derive(Debug, Args, Default)]
struct Opts {
    /// key=value file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Transmit antennas
    #[arg(long)]
    ns: Option<usize>,
    /// Weak-user receive antennas
    #[arg(long)]
    n1: Option<usize>,
    /// Strong-user receive antennas
    #[arg(long)]
    n2: Option<usize>,
    /// Sets ns = n1 = n2
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    gain_weak_db: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gain_strong_db: Option<f64>,
    /// Total transmit power (W)
    #[arg(long)]
    pmax: Option<f64>,
    /// Minimum weak-user SE (bps/Hz)
    #[arg(long)]
    r0: Option<f64>,
    /// Bisection tolerance on per-antenna power (W)
    #[arg(long)]
    epsilon: Option<f64>,
    /// Monte-Carlo channel realizations
    #[arg(long)]
    trials: Option<usize>,
    /// mc, asym or both
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (CSV for sweep and bench)
    #[arg(long)]
    out: Option<PathBuf>,
    /// p_max, r_0, weak_gain_db or antenna_count
    #[arg(long)]
    axis: Option<String>,
    /// Comma-separated sweep values
    #[arg(long, allow_hyphen_values = true)]
    values: Option<List<f64>>,
    /// Comma-separated antenna counts for bench
    #[arg(long)]
    sizes: Option<List<usize>>,
    /// Timing repetitions per point
    #[arg(long)]
    reps: Option<usize>,
}

const DEFAULT_N: usize = 16;
const DEFAULT_GAIN_WEAK_DB: f64 = 5.0;
const DEFAULT_GAIN_STRONG_DB: f64 = 20.0;
const DEFAULT_PMAX: f64 = 4.0;
const DEFAULT_R0: f64 = 2.0;
const DEFAULT_REPS: usize = 5;

/// Flags merged with the config file and defaults.
struct Settings {
    problem: AllocationProblem,
    methods: Vec<Method>,
    out: Option<PathBuf>,
    axis: Option<String>,
    values: Option<Vec<f64>>,
    sizes: Option<Vec<usize>>,
    reps: usize,
}

fn parse_methods(s: &str) -> Result<Vec<Method>, ConfigError> {
    match s {
        "both" => Ok(Method::ALL.to_vec()),
        other => other
            .parse::<Method>()
            .map(|m| vec![m])
            .map_err(|e| ConfigError(format!("key `method`: {e} (expected mc, asym or both)"))),
    }
}

impl Settings {
    fn resolve(opts: Opts) -> Result<Self, ConfigError> {
        let file = match &opts.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let (ns, n1, n2) = match opts.n {
            // --n on the command line beats per-user counts from the file.
            Some(n) => (
                opts.ns.unwrap_or(n),
                opts.n1.unwrap_or(n),
                opts.n2.unwrap_or(n),
            ),
            None => {
                let n = file.resolve::<usize>("n", None)?.unwrap_or(DEFAULT_N);
                (
                    file.resolve("ns", opts.ns)?.unwrap_or(n),
                    file.resolve("n1", opts.n1)?.unwrap_or(n),
                    file.resolve("n2", opts.n2)?.unwrap_or(n),
                )
            }
        };
        let weak_db = file
            .resolve("gain_weak_db", opts.gain_weak_db)?
            .unwrap_or(DEFAULT_GAIN_WEAK_DB);
        let strong_db = file
            .resolve("gain_strong_db", opts.gain_strong_db)?
            .unwrap_or(DEFAULT_GAIN_STRONG_DB);
        let cfg = SystemConfig::new(ns, n1, n2, db_to_linear(weak_db), db_to_linear(strong_db))
            .map_err(|e| ConfigError(e.to_string()))?;

        let mut problem = AllocationProblem::new(
            cfg,
            file.resolve("pmax", opts.pmax)?.unwrap_or(DEFAULT_PMAX),
            file.resolve("r0", opts.r0)?.unwrap_or(DEFAULT_R0),
        );
        if let Some(eps) = file.resolve("epsilon", opts.epsilon)? {
            problem.epsilon = eps;
        }
        if let Some(k) = file.resolve("trials", opts.trials)? {
            problem.trials = k;
        }
        problem.seed = file.resolve("seed", opts.seed)?.unwrap_or(0);
        let methods = match file.resolve::<String>("method", opts.method)? {
            Some(m) => parse_methods(&m)?,
            None => vec![Method::Asymptotic],
        };
        problem.method = methods[0];
        problem.validate().map_err(|e| ConfigError(e.to_string()))?;

        Ok(Settings {
            problem,
            methods,
            out: file
                .resolve("out", opts.out.map(|p| p.display().to_string()))?
                .map(PathBuf::from),
            axis: file.resolve("axis", opts.axis)?,
            values: file.resolve("values", opts.values)?.map(|l| l.0),
            sizes: file.resolve("sizes", opts.sizes)?.map(|l| l.0),
            reps: file.resolve("reps", opts.reps)?.unwrap_or(DEFAULT_REPS),
        })
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<noma_core::Error> for Failure {
    fn from(e: noma_core::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn emit_table(rows: &[ResultRow], out: Option<&PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => bench::write_table_to_path(rows, path)?,
        None => bench::write_table(rows, io::stdout().lock())
            .map_err(|e| Failure::Runtime(e.to_string()))?,
    }
    Ok(())
}

fn allocate(s: Settings) -> Result<(), Failure> {
    let mut stdout = io::stdout().lock();
    let mut rows = Vec::new();
    for &method in &s.methods {
        let start = Instant::now();
        let r = bisect_allocate(&s.problem.with_method(method))?;
        let wall_time = start.elapsed().as_secs_f64().max(1e-9);
        let text = format!(
            "method={}\np_1={:.9e}\np_2={:.9e}\nc_1={:.9}\nc_2={:.9}\nsum={:.9}\nsum_std_error={:.9}\niterations={}\nsic_ok={}\n",
            method, r.p_1, r.p_2, r.c_1, r.c_2, r.sum, r.sum_std_error, r.iterations, r.sic_ok
        );
        stdout
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Runtime(e.to_string()))?;
        rows.push(ResultRow::from_result(s.problem.p_max, &r, wall_time));
    }
    if let Some(path) = &s.out {
        bench::write_table_to_path(&rows, path)?;
    }
    Ok(())
}

fn default_values(axis: Axis) -> Vec<f64> {
    match axis {
        Axis::PMax => grids::P_MAX.to_vec(),
        Axis::R0 => (1..=16).map(|k| 0.5 * k as f64).collect(),
        Axis::WeakGainDb => (-2..=4).map(|k| 5.0 * k as f64).collect(),
        Axis::AntennaCount => grids::ANTENNAS.iter().map(|&n| n as f64).collect(),
    }
}

fn sweep(s: Settings) -> Result<(), Failure> {
    let axis_name = s.axis.as_deref().unwrap_or("p_max");
    let axis = Axis::parse(axis_name).ok_or_else(|| {
        Failure::Usage(format!(
            "key `axis`: unknown axis `{axis_name}` (expected p_max, r_0, weak_gain_db or antenna_count)"
        ))
    })?;
    let spec = SweepSpec {
        base: s.problem,
        axis,
        values: s.values.unwrap_or_else(|| default_values(axis)),
        methods: s.methods,
    };
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let rows = bench::run_sweep(&spec)?;
    emit_table(&rows, s.out.as_ref())
}

fn bench_cmd(s: Settings) -> Result<(), Failure> {
    if s.reps < 3 {
        return Err(Failure::Usage(
            "key `reps`: at least 3 repetitions are required".into(),
        ));
    }
    let sizes = s.sizes.unwrap_or_else(|| grids::ANTENNAS.to_vec());
    if sizes.contains(&0) {
        return Err(Failure::Usage(
            "key `sizes`: antenna counts must be positive".into(),
        ));
    }
    let rows = bench::time_methods(&sizes, s.reps, &s.problem, &s.methods)?;
    emit_table(&rows, s.out.as_ref())
}

fn validate_cmd(s: Settings) -> Result<(), Failure> {
    let checks = validate::run_all(s.problem.seed)?;
    let mut failed = 0;
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        failed += usize::from(!c.pass);
    }
    if failed > 0 {
        return Err(Failure::Runtime(format!(
            "{failed} of {} checks failed",
            checks.len()
        )));
    }
    Ok(())
}

type Runner = fn(Settings) -> Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (opts, run): (Opts, Runner) = match cli.command {
        Command::Allocate(o) => (o, allocate),
        Command::Sweep(o) => (o, sweep),
        Command::Bench(o) => (o, bench_cmd),
        Command::Validate(o) => (o, validate_cmd),
    };
    let result = Settings::resolve(opts).map_err(Failure::from).and_then(run);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
