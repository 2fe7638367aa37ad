//! Error types shared across the library.

use thiserror::Error;

/// Errors produced by estimators, the optimizer, the simulator and the
/// sweep harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An estimator was given an empty sample log.
    #[error("empty log: {0}")]
    EmptyLog(&'static str),

    /// The availability log records zero failures, so the MTTF estimator
    /// is undefined. The caller must supply a failure rate directly.
    #[error("no failures recorded: MTTF estimator is undefined")]
    NoFailures,

    /// A mean time to failure must be positive and finite.
    #[error("non-positive MTTF: {0}")]
    NonPositiveMttf(f64),

    /// Survival probabilities are only defined for t >= 0.
    #[error("negative time: {0}")]
    NegativeTime(f64),

    /// A probability argument fell outside [0, 1].
    #[error("probability out of range: {0}")]
    ProbabilityOutOfRange(f64),

    /// Checkpoint intervals must be positive and finite.
    #[error("non-positive checkpoint interval: {0}")]
    NonPositiveInterval(f64),

    /// The principal Lambert W branch is real only for z >= -1/e.
    #[error("argument {0} below the W0 branch point -1/e")]
    BelowBranchPoint(f64),

    /// Optimizer inputs admit no interior optimum (e.g. zero failure rate
    /// or zero checkpoint cost).
    #[error("degenerate optimizer input: {0}")]
    DegenerateInput(&'static str),

    /// The root solver did not reach the requested residual.
    #[error("solver failed to converge after {iterations} iterations; residual {residual:e}")]
    NoConvergence { iterations: u32, residual: f64 },

    /// A baseline formula produced a non-positive interval, signalling
    /// inputs outside its validity regime.
    #[error("formula yields non-positive interval {0}")]
    NonPositiveResult(f64),

    /// In synchronized-interval mode the total work must be an integer
    /// number of checkpoint intervals; the caller rounds.
    #[error("total work of {work_seconds} s is not an integer number of {interval} s intervals")]
    WorkNotDivisible { work_seconds: f64, interval: f64 },

    /// The simulated clock passed the configured time budget.
    #[error("simulated time {elapsed} s exceeded budget {budget} s")]
    BudgetExceeded { elapsed: f64, budget: f64 },

    /// An interpolation query fell outside the swept interval range.
    #[error("interval {0} s is outside the swept range [{1}, {2}]")]
    OutOfSweepRange(f64, f64, f64),

    /// A malformed row in an input file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A configuration value violated its invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
