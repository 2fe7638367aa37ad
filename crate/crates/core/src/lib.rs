//! Checkpoint-interval planning for replicated, inter-dependent parallel
//! processes on failure-prone nodes.
//!
//! The crate has two halves that validate each other:
//!
//! * an analytic side — an exponential failure model, a checkpoint-cost
//!   model, the expected-overhead formulas for n processes with r replicas,
//!   and an optimizer that predicts the interval minimizing normalized
//!   overhead (closed forms via Lambert W where they exist, a bracketed
//!   root solve in general);
//! * a simulation side — a discrete-event simulator of the replicated
//!   execution protocol (server-side checkpoint acceptance, replica-aware
//!   restart, heartbeat failure detection) plus a sweep harness that
//!   reproduces the evaluation methodology: run grids of intervals,
//!   collect completion-time quartiles and compare best/worst/predicted.

pub mod checkpoint_cost;
pub mod error;
pub mod failure_model;
pub mod fmt;
pub mod optimizer;
pub mod overhead_model;
pub mod simulator;
pub mod sweep;

pub use checkpoint_cost::{
    parse_cost_samples, CheckpointCost, CostSampleLog, DEFAULT_TS_ITERATIONS,
};
pub use error::{Error, Result};
pub use failure_model::{
    estimate_mttf, parse_failure_log, ExponentialFailureModel, NodeUptimeRecord,
};
pub use optimizer::{
    baseline_daly, baseline_young, lambert_w0, predict_first_order, predict_general, predict_r1,
    predict_single, stationarity_residual, Method, PredictionResult,
};
pub use overhead_model::{
    expected_overhead, normalized_overhead, success_prob_all, success_prob_over_interval, JobSpec,
    OverheadPoint,
};
pub use simulator::{
    monte_carlo_overhead, run, CheckpointDecision, Mode, ServerCheckpointState, SimConfig,
    SimResult, TraceEvent, TraceKind,
};
pub use sweep::{ComparisonMetrics, IntervalStats, SweepReport};
