//! Parameter sweeps and timing runs over the allocator, with CSV output.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;
use std::time::Instant;

use crate::channel::{db_to_linear, DEFAULT_TRIALS};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::optimizer::{bisect_allocate, AllocationProblem, AllocationResult, Method};

/// The parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Total power budget (W).
    PMax,
    /// Minimum weak-user SE (bps/Hz).
    R0,
    /// Weak-user channel gain (dB).
    WeakGainDb,
    /// `n_s = n_1 = n_2`.
    AntennaCount,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::PMax => "p_max",
            Axis::R0 => "r_0",
            Axis::WeakGainDb => "weak_gain_db",
            Axis::AntennaCount => "antenna_count",
        }
    }

    pub fn parse(s: &str) -> Option<Axis> {
        match s.replace('-', "_").as_str() {
            "p_max" | "pmax" => Some(Axis::PMax),
            "r_0" | "r0" => Some(Axis::R0),
            "weak_gain_db" | "gain_weak_db" => Some(Axis::WeakGainDb),
            "antenna_count" | "n" => Some(Axis::AntennaCount),
            _ => None,
        }
    }

    /// Copy of `base` with this axis set to `value`.
    pub fn apply(self, base: &AllocationProblem, value: f64) -> Result<AllocationProblem> {
        let mut p = *base;
        match self {
            Axis::PMax => p.p_max = value,
            Axis::R0 => p.r_0 = value,
            Axis::WeakGainDb => p.cfg.gain_1 = db_to_linear(value),
            Axis::AntennaCount => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::invalid(
                        "antenna_count",
                        format!("not a positive integer: {value}"),
                    ));
                }
                let n = value as usize;
                p.cfg.n_s = n;
                p.cfg.n_1 = n;
                p.cfg.n_2 = n;
            }
        }
        Ok(p)
    }
}

/// Default sweep grids.
pub mod grids {
    pub const P_MAX: [f64; 6] = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
    pub const ANTENNAS: [usize; 7] = [4, 8, 16, 32, 64, 128, 256];
    /// Strong-user gain held fixed in the weak-gain sweep.
    pub const FIXED_STRONG_GAIN_DB: f64 = 20.0;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: AllocationProblem,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub methods: Vec<Method>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid("values", "sweep needs at least one value"));
        }
        if self
            .values
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::invalid(
                "values",
                "sweep values must be strictly increasing",
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("methods", "sweep needs at least one method"));
        }
        Ok(())
    }
}

/// One CSV line: a solved (or infeasible) sweep or timing point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub axis_value: f64,
    pub p_1: f64,
    pub p_2: f64,
    pub c_1: f64,
    pub c_2: f64,
    pub sum: f64,
    pub iterations: u32,
    /// Seconds.
    pub wall_time: f64,
    pub feasible: bool,
    pub sic_ok: bool,
    /// Monte-Carlo rows only.
    pub std_error: Option<f64>,
}

pub const HEADER: [&str; 12] = [
    "method",
    "axis_value",
    "p_1",
    "p_2",
    "c_1",
    "c_2",
    "sum",
    "iterations",
    "wall_time",
    "feasible",
    "sic_ok",
    "std_error",
];

impl ResultRow {
    pub fn from_result(axis_value: f64, r: &AllocationResult, wall_time: f64) -> Self {
        ResultRow {
            method: r.method.label().to_string(),
            axis_value,
            p_1: r.p_1,
            p_2: r.p_2,
            c_1: r.c_1,
            c_2: r.c_2,
            sum: r.sum,
            iterations: r.iterations,
            wall_time,
            feasible: r.feasible,
            sic_ok: r.sic_ok,
            std_error: (r.method == Method::MonteCarlo).then_some(r.sum_std_error),
        }
    }
}

/// Elapsed seconds, never reported as exactly zero.
fn seconds_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64().max(1e-9)
}

fn solve_point(problem: &AllocationProblem) -> Result<AllocationResult> {
    match bisect_allocate(problem) {
        Err(Error::InfeasibleRate { achievable, .. }) => {
            Ok(AllocationResult::infeasible(problem, achievable))
        }
        other => other,
    }
}

/// Solves every (method, value) pair; rows are ordered by method, then value.
///
/// Points run concurrently under `base.execution`; Monte-Carlo trials inside
/// each point then run sequentially. Every point uses the base seed, so all
/// numeric columns are reproducible.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let points: Vec<(Method, f64)> = spec
        .methods
        .iter()
        .flat_map(|&m| spec.values.iter().map(move |&v| (m, v)))
        .collect();
    let inner = if spec.base.execution.is_parallel() {
        Execution::Sequential
    } else {
        spec.base.execution
    };
    spec.base
        .execution
        .map_indexed(points.len(), |i| {
            let (method, value) = points[i];
            let problem = spec
                .axis
                .apply(&spec.base, value)?
                .with_method(method)
                .with_execution(inner);
            let start = Instant::now();
            let result = solve_point(&problem)
                .map_err(|e| e.at(format!("{} = {value} ({method})", spec.axis.name())))?;
            Ok(ResultRow::from_result(value, &result, seconds_since(start)))
        })
        .into_iter()
        .collect()
}

/// `epsilon` giving exactly `iterations` halvings of `[0, budget]`.
pub fn epsilon_for_iterations(budget: f64, iterations: u32) -> f64 {
    // budget / epsilon = 2^m / 1.5 lies strictly inside (2^(m-1), 2^m].
    1.5 * budget / 2f64.powi(iterations as i32)
}

/// Bisection count used for timing runs (`epsilon = 1e-3` on a unit-order budget).
pub const TIMING_ITERATIONS: u32 = 13;

/// Median wall time of a full allocation per (size, method).
///
/// Runs strictly sequentially, Monte-Carlo trials included. `epsilon` is
/// rescaled per size so every run performs [`TIMING_ITERATIONS`]
/// bisections, and the template's trial count applies (10 when unset).
pub fn time_methods(
    sizes: &[usize],
    repetitions: usize,
    template: &AllocationProblem,
    methods: &[Method],
) -> Result<Vec<ResultRow>> {
    if repetitions < 3 {
        return Err(Error::invalid(
            "repetitions",
            "timing needs at least 3 repetitions",
        ));
    }
    let mut rows = Vec::new();
    for &method in methods {
        for &n in sizes {
            let mut problem = Axis::AntennaCount
                .apply(template, n as f64)?
                .with_method(method)
                .with_execution(Execution::Sequential);
            if problem.trials == 0 {
                problem.trials = DEFAULT_TRIALS;
            }
            problem.epsilon = epsilon_for_iterations(problem.budget(), TIMING_ITERATIONS);

            let mut times = Vec::with_capacity(repetitions);
            let mut last = None;
            for _ in 0..repetitions {
                let start = Instant::now();
                let r = solve_point(&problem)?;
                times.push(seconds_since(start));
                last = Some(r);
            }
            times.sort_by(f64::total_cmp);
            let median = times[times.len() / 2];
            let r = last.expect("repetitions >= 3");
            rows.push(ResultRow::from_result(n as f64, &r, median));
        }
    }
    Ok(rows)
}

fn fmt_f64(v: f64) -> String {
    // 17 significant digits: exact round trip through the text form.
    format!("{v:.16e}")
}

/// Writes `rows` as CSV with [`HEADER`] as the first line.
pub fn write_table<W: Write>(rows: &[ResultRow], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            fmt_f64(r.axis_value),
            fmt_f64(r.p_1),
            fmt_f64(r.p_2),
            fmt_f64(r.c_1),
            fmt_f64(r.c_2),
            fmt_f64(r.sum),
            r.iterations.to_string(),
            fmt_f64(r.wall_time),
            r.feasible.to_string(),
            r.sic_ok.to_string(),
            r.std_error.map(fmt_f64).unwrap_or_default(),
        ])?;
    }
    w.flush()
}

pub fn write_table_to_path(rows: &[ResultRow], path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_table(rows, io::BufWriter::new(file)).map_err(io_err)
}

/// Parses a table produced by [`write_table`].
pub fn read_table(path: &Path) -> Result<Vec<ResultRow>> {
    let bad = |reason: String| Error::Table {
        path: path.to_path_buf(),
        reason,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(HEADER) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            field(i).parse::<f64>().map_err(|_| {
                bad(format!(
                    "row {}: column {} is not a number",
                    line + 1,
                    HEADER[i]
                ))
            })
        };
        let flag = |i: usize| -> Result<bool> {
            field(i).parse::<bool>().map_err(|_| {
                bad(format!(
                    "row {}: column {} is not a bool",
                    line + 1,
                    HEADER[i]
                ))
            })
        };
        rows.push(ResultRow {
            method: field(0).to_string(),
            axis_value: num(1)?,
            p_1: num(2)?,
            p_2: num(3)?,
            c_1: num(4)?,
            c_2: num(5)?,
            sum: num(6)?,
            iterations: field(7)
                .parse()
                .map_err(|_| bad(format!("row {}: bad iteration count", line + 1)))?,
            wall_time: num(8)?,
            feasible: flag(9)?,
            sic_ok: flag(10)?,
            std_error: if field(11).is_empty() {
                None
            } else {
                Some(num(11)?)
            },
        });
    }
    Ok(rows)
}
