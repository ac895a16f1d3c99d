//! Sum-SE maximization by bisection on the strong user's power.
//!
//! With the budget fully used (`p_1 + p_2 = p_max / n_s`) the sum SE grows
//! with `p_2` while the weak user's SE falls, so the optimum is the largest
//! `p_2` that still leaves the weak user at least `r_0`. [`bisect_allocate`]
//! brackets that point: the lower end of the bracket always satisfies the
//! rate constraint and the upper end never does.
//!
//! In Monte-Carlo mode every iterate is evaluated on the same channel
//! realizations, so the weak-user SE is a deterministic, monotone function
//! of `p_2` within one run.

use std::fmt;
use std::str::FromStr;

use crate::asymptotic::{asym_sic_bound, asym_strong_capacity, asym_weak_capacity};
use crate::channel::{
    CapacityEstimate, MonteCarlo, PowerSplit, SpectrumBank, SystemConfig, DEFAULT_TRIALS,
};
use crate::error::{Error, Result};
use crate::exec::Execution;

pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Tag for the strong user's channel streams, so the two users' channels
/// are independent draws.
const STRONG_STREAM_TAG: u64 = 2;

/// Which capacity evaluator drives the allocator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Method {
    MonteCarlo,
    #[default]
    Asymptotic,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::MonteCarlo, Method::Asymptotic];

    pub fn label(self) -> &'static str {
        match self {
            Method::MonteCarlo => "monte-carlo-bisection",
            Method::Asymptotic => "asymptotic-bisection",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mc" | "monte-carlo" | "monte-carlo-bisection" => Ok(Method::MonteCarlo),
            "asym" | "asymptotic" | "asymptotic-bisection" => Ok(Method::Asymptotic),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

/// One sum-SE maximization instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationProblem {
    pub cfg: SystemConfig,
    /// Total transmit power at the source (W), shared by all antennas.
    pub p_max: f64,
    /// Minimum weak-user SE (bps/Hz).
    pub r_0: f64,
    /// Final bracket width on the per-antenna power `p_2` (W).
    pub epsilon: f64,
    pub method: Method,
    /// Channel realizations per expectation (Monte-Carlo only).
    pub trials: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl AllocationProblem {
    pub fn new(cfg: SystemConfig, p_max: f64, r_0: f64) -> Self {
        AllocationProblem {
            cfg,
            p_max,
            r_0,
            epsilon: DEFAULT_EPSILON,
            method: Method::default(),
            trials: DEFAULT_TRIALS,
            seed: 0,
            execution: Execution::default(),
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        if !(self.p_max > 0.0 && self.p_max.is_finite()) {
            return Err(Error::invalid(
                "p_max",
                format!("must be positive, got {}", self.p_max),
            ));
        }
        if !(self.r_0 >= 0.0 && self.r_0.is_finite()) {
            return Err(Error::invalid(
                "r_0",
                format!("must be nonnegative, got {}", self.r_0),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(
                "epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        if self.method == Method::MonteCarlo && self.trials == 0 {
            return Err(Error::invalid("trials", "at least one trial is required"));
        }
        Ok(())
    }

    /// Per-antenna power budget `p_max / n_s`.
    pub fn budget(&self) -> f64 {
        self.p_max / self.cfg.n_s as f64
    }

    /// Number of halvings needed to shrink `[0, budget]` to width `epsilon`.
    pub fn expected_iterations(&self) -> u32 {
        let ratio = self.budget() / self.epsilon;
        if ratio <= 1.0 {
            0
        } else {
            ratio.log2().ceil() as u32
        }
    }

    fn monte_carlo(&self) -> MonteCarlo {
        MonteCarlo::new(self.trials, self.seed).with_execution(self.execution)
    }
}

/// Capacities of both users for a given split.
pub trait CapacityEvaluator {
    fn weak(&self, split: PowerSplit) -> Result<CapacityEstimate>;
    fn strong(&self, p_2: f64) -> Result<CapacityEstimate>;
    fn sic_bound(&self, split: PowerSplit) -> Result<CapacityEstimate>;

    /// Sum SE with its standard error.
    fn sum(&self, split: PowerSplit) -> Result<SumCapacity> {
        let c_1 = self.weak(split)?;
        let c_2 = self.strong(split.p_2)?;
        Ok(SumCapacity {
            sum: CapacityEstimate {
                value: c_1.value + c_2.value,
                std_error: c_1.std_error.hypot(c_2.std_error),
                trials: c_1.trials.min(c_2.trials),
            },
            c_1,
            c_2,
        })
    }

    /// Slack allowed when comparing two estimates from this evaluator.
    fn slack(&self, a: &CapacityEstimate, b: &CapacityEstimate) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumCapacity {
    pub c_1: CapacityEstimate,
    pub c_2: CapacityEstimate,
    pub sum: CapacityEstimate,
}

fn exact(value: f64) -> CapacityEstimate {
    CapacityEstimate {
        value,
        std_error: 0.0,
        trials: 1,
    }
}

/// Closed-form evaluator; its cost does not depend on the array size.
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticEvaluator {
    pub cfg: SystemConfig,
}

impl CapacityEvaluator for AsymptoticEvaluator {
    fn weak(&self, split: PowerSplit) -> Result<CapacityEstimate> {
        Ok(exact(asym_weak_capacity(split, &self.cfg)))
    }

    fn strong(&self, p_2: f64) -> Result<CapacityEstimate> {
        Ok(exact(asym_strong_capacity(p_2, &self.cfg)))
    }

    fn sic_bound(&self, split: PowerSplit) -> Result<CapacityEstimate> {
        Ok(exact(asym_sic_bound(split, &self.cfg)))
    }

    fn slack(&self, _: &CapacityEstimate, _: &CapacityEstimate) -> f64 {
        0.0
    }
}

/// Monte-Carlo evaluator over a fixed set of channel realizations.
#[derive(Debug, Clone)]
pub struct MonteCarloEvaluator {
    weak: SpectrumBank,
    strong: SpectrumBank,
}

impl MonteCarloEvaluator {
    pub fn sample(cfg: &SystemConfig, mc: &MonteCarlo) -> Result<Self> {
        let weak = SpectrumBank::sample(cfg.n_1, cfg.n_s, cfg.gain_1, mc)?;
        let strong_mc = MonteCarlo {
            streams: mc.streams.derive(STRONG_STREAM_TAG),
            ..*mc
        };
        let strong = SpectrumBank::sample(cfg.n_2, cfg.n_s, cfg.gain_2, &strong_mc)?;
        Ok(MonteCarloEvaluator { weak, strong })
    }
}

impl CapacityEvaluator for MonteCarloEvaluator {
    fn weak(&self, split: PowerSplit) -> Result<CapacityEstimate> {
        Ok(self.weak.difference(split.total(), split.p_2))
    }

    fn strong(&self, p_2: f64) -> Result<CapacityEstimate> {
        Ok(self.strong.logdet(p_2))
    }

    fn sic_bound(&self, split: PowerSplit) -> Result<CapacityEstimate> {
        Ok(self.strong.difference(split.total(), split.p_2))
    }

    // Pairs trial t of both users, so the sum's error reflects any
    // correlation between them.
    fn sum(&self, split: PowerSplit) -> Result<SumCapacity> {
        let w = self.weak.difference_samples(split.total(), split.p_2);
        let s = self.strong.logdet_samples(split.p_2);
        let both: Vec<f64> = w.iter().zip(&s).map(|(a, b)| a + b).collect();
        Ok(SumCapacity {
            c_1: CapacityEstimate::from_samples(&w),
            c_2: CapacityEstimate::from_samples(&s),
            sum: CapacityEstimate::from_samples(&both),
        })
    }

    fn slack(&self, a: &CapacityEstimate, b: &CapacityEstimate) -> f64 {
        3.0 * a.std_error.hypot(b.std_error)
    }
}

/// Builds the evaluator selected by `problem.method`.
pub fn evaluator_for(
    problem: &AllocationProblem,
) -> Result<Box<dyn CapacityEvaluator + Send + Sync>> {
    Ok(match problem.method {
        Method::Asymptotic => Box::new(AsymptoticEvaluator { cfg: problem.cfg }),
        Method::MonteCarlo => Box::new(MonteCarloEvaluator::sample(
            &problem.cfg,
            &problem.monte_carlo(),
        )?),
    })
}

/// Weak-user rate, strong-user rate and their sum at `split`.
pub fn sum_capacity_at(problem: &AllocationProblem, split: PowerSplit) -> Result<SumCapacity> {
    evaluator_for(problem)?.sum(split)
}

/// Margin of the SIC condition: how far the weak user's SE sits below the
/// rate the strong user can decode it at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SicCheck {
    pub margin: f64,
    pub ok: bool,
}

pub fn check_sic(problem: &AllocationProblem, split: PowerSplit) -> Result<SicCheck> {
    check_sic_with(evaluator_for(problem)?.as_ref(), split)
}

pub fn check_sic_with<E: CapacityEvaluator + ?Sized>(
    eval: &E,
    split: PowerSplit,
) -> Result<SicCheck> {
    let bound = eval.sic_bound(split)?;
    let rate = eval.weak(split)?;
    let margin = bound.value - rate.value;
    Ok(SicCheck {
        margin,
        ok: margin >= -eval.slack(&bound, &rate),
    })
}

/// The bracket after one bisection step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionStep {
    pub p_2_low: f64,
    pub p_2_high: f64,
    pub midpoint: f64,
    /// Weak-user SE at the midpoint.
    pub c_1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub method: Method,
    /// Returned per-antenna powers: the feasible (low) end of the final bracket.
    pub p_1: f64,
    pub p_2: f64,
    pub c_1: f64,
    pub c_2: f64,
    pub sum: f64,
    /// Standard error of `sum` (zero for the asymptotic evaluator).
    pub sum_std_error: f64,
    /// Loop iterations, one weak-user evaluation each.
    pub iterations: u32,
    pub feasible: bool,
    pub sic_ok: bool,
    pub sic_margin: f64,
    /// All capacity evaluations, including the up-front feasibility check and
    /// the final report at the returned split.
    pub evaluator_calls: u32,
    /// The last midpoint tested, i.e. the output of the textbook loop. Within
    /// `epsilon` of the returned split but possibly violating the rate floor.
    pub midpoint: Option<PowerSplit>,
    pub steps: Vec<BisectionStep>,
}

impl AllocationResult {
    pub fn split(&self) -> PowerSplit {
        PowerSplit {
            p_1: self.p_1,
            p_2: self.p_2,
        }
    }

    /// Row describing a problem whose rate floor cannot be met: all power to
    /// the weak user, reporting what that achieves.
    pub fn infeasible(problem: &AllocationProblem, achievable: f64) -> Self {
        AllocationResult {
            method: problem.method,
            p_1: problem.budget(),
            p_2: 0.0,
            c_1: achievable,
            c_2: 0.0,
            sum: achievable,
            sum_std_error: 0.0,
            iterations: 0,
            feasible: false,
            sic_ok: false,
            sic_margin: f64::NAN,
            evaluator_calls: 1,
            midpoint: None,
            steps: Vec::new(),
        }
    }
}

/// Maximizes the sum SE of `problem` with the evaluator it selects.
pub fn bisect_allocate(problem: &AllocationProblem) -> Result<AllocationResult> {
    problem.validate()?;
    let eval = evaluator_for(problem)?;
    bisect_with(problem, eval.as_ref())
}

/// Bisection against an explicit evaluator.
pub fn bisect_with<E: CapacityEvaluator + ?Sized>(
    problem: &AllocationProblem,
    eval: &E,
) -> Result<AllocationResult> {
    problem.validate()?;
    let budget = problem.budget();
    let r_0 = problem.r_0;
    let weak_at = |p_2: f64| -> Result<f64> {
        let split = PowerSplit {
            p_1: budget - p_2,
            p_2,
        };
        eval.weak(split)
            .map(|c| c.value)
            .map_err(|e| e.at(format!("p_2 = {p_2}")))
    };

    let mut calls = 1;
    let achievable = weak_at(0.0)?;
    if achievable < r_0 {
        return Err(Error::InfeasibleRate {
            required: r_0,
            achievable,
            budget,
        });
    }

    let (mut low, mut high) = (0.0, budget);
    let mut steps = Vec::with_capacity(problem.expected_iterations() as usize);
    while high - low > problem.epsilon {
        let mid = 0.5 * (low + high);
        let c_1 = weak_at(mid)?;
        calls += 1;
        if c_1 < r_0 {
            high = mid;
        } else {
            low = mid;
        }
        steps.push(BisectionStep {
            p_2_low: low,
            p_2_high: high,
            midpoint: mid,
            c_1,
        });
    }

    let split = PowerSplit {
        p_1: budget - low,
        p_2: low,
    };
    let report = eval.sum(split)?;
    let sic = check_sic_with(eval, split)?;
    calls += 4;
    Ok(AllocationResult {
        method: problem.method,
        p_1: split.p_1,
        p_2: split.p_2,
        c_1: report.c_1.value,
        c_2: report.c_2.value,
        sum: report.sum.value,
        sum_std_error: report.sum.std_error,
        iterations: steps.len() as u32,
        feasible: true,
        sic_ok: sic.ok,
        sic_margin: sic.margin,
        evaluator_calls: calls,
        midpoint: steps.last().map(|s| PowerSplit {
            p_1: budget - s.midpoint,
            p_2: s.midpoint,
        }),
        steps,
    })
}
