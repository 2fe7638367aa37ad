//! Argument definitions for the `ckptplan` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "ckptplan",
    version,
    about = "Plan checkpoint intervals for replicated parallel processes on failure-prone nodes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Estimate MTTF and failure rate from an availability log
    /// (CSV: node_id,operation_hours,failures).
    EstimateMttf {
        /// Availability log path.
        log: PathBuf,
    },
    /// Estimate the effective save cost from recorded save times
    /// (CSV: save_time_seconds) as the mean maximum over n*r draws.
    EstimateTs {
        /// Save-time samples path.
        samples: PathBuf,
        /// Number of processes.
        #[arg(long)]
        n: u64,
        /// Replicas per process.
        #[arg(long)]
        r: u64,
        /// Resampling iterations.
        #[arg(long)]
        iterations: Option<u64>,
        /// RNG seed (default: $CKPT_SEED, then 0).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Predict the optimal checkpoint interval.
    Predict(PredictArgs),
    /// Run one simulation of the execution protocol.
    Simulate(SimulateArgs),
    /// Sweep checkpoint intervals, write report CSVs and compare against
    /// the predicted interval.
    Sweep(SweepArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Numeric optimum of the general (n, r) overhead model.
    General,
    /// Closed-form single-process optimum.
    Single,
    /// First-order approximation sqrt(Ts/lambda).
    FirstOrder,
    /// Closed form for r = 1 with n processes.
    R1,
    /// Young's baseline sqrt(2 Ts Tf).
    Young,
    /// Daly's baseline sqrt(2 delta (M+R)) - delta.
    Daly,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Model,
    Volpex,
}

#[derive(Args)]
pub struct PredictArgs {
    /// Failure rate in 1/s (exactly one of --lambda / --mttf).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Mean time to failure in seconds.
    #[arg(long)]
    pub mttf: Option<f64>,
    /// Checkpoint save cost in seconds.
    #[arg(long)]
    pub ts: f64,
    /// Number of processes.
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    /// Replicas per process.
    #[arg(long, default_value_t = 1)]
    pub r: u32,
    #[arg(long, value_enum, default_value_t = MethodArg::General)]
    pub method: MethodArg,
    /// Restart overhead in seconds (Daly's baseline only).
    #[arg(long, default_value_t = 0.0)]
    pub restart_overhead: f64,
}

/// Simulation parameters shared by `simulate` and `sweep`. Every value may
/// also come from a `key=value` config file (`--config`); flags win.
#[derive(Args)]
pub struct SimFlags {
    /// Optional key=value config file; flags override file values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Checkpoint interval in seconds.
    #[arg(long)]
    pub tc: Option<f64>,
    /// Checkpoint save cost in seconds.
    #[arg(long)]
    pub ts: Option<f64>,
    /// Failure rate in 1/s (exactly one of --lambda / --mttf).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Mean time to failure in seconds.
    #[arg(long)]
    pub mttf: Option<f64>,
    /// Number of processes.
    #[arg(long)]
    pub n: Option<u32>,
    /// Replicas per process.
    #[arg(long)]
    pub r: Option<u32>,
    /// Work units per process.
    #[arg(long)]
    pub total_work: Option<u64>,
    /// Seconds of computation per work unit.
    #[arg(long)]
    pub quantum_time: Option<f64>,
    /// Failure-detection delay in seconds (volpex mode).
    #[arg(long)]
    pub heartbeat_timeout: Option<f64>,
    /// Client speeds drawn uniformly from [1-s, 1+s].
    #[arg(long)]
    pub speed_spread: Option<f64>,
    /// Abort once simulated time exceeds this multiple of the
    /// failure-free completion time.
    #[arg(long)]
    pub budget_factor: Option<f64>,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub flags: SimFlags,
    /// RNG seed (default: $CKPT_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write a per-event trace CSV to this path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub flags: SimFlags,
    /// Comma-separated interval grid in seconds
    /// (default: 12,25,50,100,200,400,800,1600,3200).
    #[arg(long)]
    pub intervals: Option<String>,
    /// Runs per interval (default 10).
    #[arg(long)]
    pub runs: Option<u32>,
    /// Base seed for per-run seed derivation (default: $CKPT_SEED, then 0).
    #[arg(long)]
    pub seed_base: Option<u64>,
    /// Output prefix; writes <out>_raw.csv, <out>_summary.csv,
    /// <out>_comparison.csv and <out>_manifest.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the predicted interval used in the comparison (required
    /// when the failure rate is zero and no prediction exists).
    #[arg(long)]
    pub predicted_tc: Option<f64>,
}
