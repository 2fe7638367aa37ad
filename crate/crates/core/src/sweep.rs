//! Interval sweeps: run the simulator across a grid of checkpoint
//! intervals, summarize completion times as quartiles, and compare the
//! best/worst grid points against a predicted interval.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fmt::sig6;
use crate::simulator::{self, Mode, SimConfig};

/// One simulation run inside a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_index: u32,
    pub seed: u64,
    /// Completion time in seconds, or the error that stopped the run.
    pub outcome: std::result::Result<f64, String>,
}

/// Five-number summary over the successful runs of one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartiles {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// All runs recorded for one tested interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalStats {
    pub tc: f64,
    pub runs: Vec<RunRecord>,
    /// Absent when every run of the interval failed.
    pub quartiles: Option<Quartiles>,
}

/// Sweep output: per-interval completion-time distributions plus the
/// metadata needed to reproduce them exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Base configuration; its `tc` is overridden per interval.
    pub base: SimConfig,
    pub intervals: Vec<IntervalStats>,
    pub runs_per_interval: u32,
    pub seed_base: u64,
}

/// Best/worst/predicted comparison over a sweep, in the shape used for
/// reporting: completion medians and absolute percentage differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonMetrics {
    pub tc_best: f64,
    pub tc_worst: f64,
    pub tc_predicted: f64,
    /// Lowest median completion over the grid.
    pub t_best: f64,
    /// Highest median completion over the grid.
    pub t_worst: f64,
    /// Median completion interpolated at the predicted interval.
    pub t_predict: f64,
    pub pct_best_vs_predict: f64,
    pub pct_best_vs_worst: f64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-run seed: the base seed XORed with the (interval, run) pair, then
/// bit-mixed so neighboring runs land far apart in seed space.
pub fn derive_seed(seed_base: u64, interval_index: u32, run_index: u32) -> u64 {
    splitmix64(seed_base ^ (((interval_index as u64) << 32) | run_index as u64))
}

/// Type-7 quantile (linear interpolation between order statistics).
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

fn quartiles_of(completions: &[f64]) -> Option<Quartiles> {
    if completions.is_empty() {
        return None;
    }
    let mut sorted = completions.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Some(Quartiles {
        min: sorted[0],
        q25: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q75: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

/// Configuration for one tested interval. In model mode the work is
/// re-quantized so the job spans a whole number of intervals: the number
/// of super-steps is `max(1, round(work / tc))` and the unit count is
/// adjusted to match (exact whenever `tc` is a multiple of the quantum).
fn config_for_interval(base: &SimConfig, tc: f64) -> SimConfig {
    let mut cfg = base.clone();
    cfg.tc = tc;
    if cfg.mode == Mode::Model {
        let work_seconds = base.total_work as f64 * base.quantum_time;
        let steps = (work_seconds / tc).round().max(1.0);
        cfg.total_work = ((steps * tc / base.quantum_time).round() as u64).max(1);
    }
    cfg
}

/// Run `runs_per_interval` seeded simulations for every interval in the
/// grid. Runs are independent and execute in parallel; the report is
/// assembled in (interval, run) order regardless of scheduling.
pub fn run_sweep(
    base: &SimConfig,
    intervals: &[f64],
    runs_per_interval: u32,
    seed_base: u64,
) -> Result<SweepReport> {
    base.validate()?;
    if intervals.is_empty() {
        return Err(Error::InvalidConfig("interval grid is empty".to_string()));
    }
    if runs_per_interval < 1 {
        return Err(Error::InvalidConfig(
            "runs per interval must be >= 1".to_string(),
        ));
    }
    for pair in intervals.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidConfig(format!(
                "interval grid must be strictly increasing ({} then {})",
                pair[0], pair[1]
            )));
        }
    }
    if !intervals[0].is_finite() || intervals[0] <= 0.0 {
        return Err(Error::NonPositiveInterval(intervals[0]));
    }

    let stats: Vec<IntervalStats> = intervals
        .par_iter()
        .enumerate()
        .map(|(i, &tc)| {
            let cfg = config_for_interval(base, tc);
            let runs: Vec<RunRecord> = (0..runs_per_interval)
                .into_par_iter()
                .map(|j| {
                    let seed = derive_seed(seed_base, i as u32, j);
                    let outcome = simulator::run(&cfg, seed)
                        .map(|r| r.completion_time)
                        .map_err(|e| e.to_string());
                    RunRecord {
                        run_index: j,
                        seed,
                        outcome,
                    }
                })
                .collect();
            let completions: Vec<f64> =
                runs.iter().filter_map(|r| r.outcome.clone().ok()).collect();
            IntervalStats {
                tc,
                runs,
                quartiles: quartiles_of(&completions),
            }
        })
        .collect();

    Ok(SweepReport {
        base: base.clone(),
        intervals: stats,
        runs_per_interval,
        seed_base,
    })
}

impl SweepReport {
    /// (tc, median) pairs for the intervals that produced any completions.
    fn median_curve(&self) -> Vec<(f64, f64)> {
        self.intervals
            .iter()
            .filter_map(|s| s.quartiles.map(|q| (s.tc, q.median)))
            .collect()
    }

    /// Piecewise-linear interpolation of median completion time at `tc`.
    /// Exact at tested intervals; errors outside the swept range.
    pub fn interpolate_completion(&self, tc: f64) -> Result<f64> {
        let curve = self.median_curve();
        let (first, last) = match (curve.first(), curve.last()) {
            (Some(f), Some(l)) => (f.0, l.0),
            _ => return Err(Error::OutOfSweepRange(tc, f64::NAN, f64::NAN)),
        };
        if tc < first || tc > last {
            return Err(Error::OutOfSweepRange(tc, first, last));
        }
        for pair in curve.windows(2) {
            let (x0, y0) = pair[0];
            let (x1, y1) = pair[1];
            if tc <= x1 {
                if tc == x0 {
                    return Ok(y0);
                }
                if tc == x1 {
                    return Ok(y1);
                }
                return Ok(y0 + (tc - x0) / (x1 - x0) * (y1 - y0));
            }
        }
        Ok(curve[curve.len() - 1].1)
    }

    /// Compare the swept best and worst medians against the completion
    /// interpolated at a predicted interval.
    pub fn compare(&self, tc_predicted: f64) -> Result<ComparisonMetrics> {
        let curve = self.median_curve();
        if curve.is_empty() {
            return Err(Error::OutOfSweepRange(tc_predicted, f64::NAN, f64::NAN));
        }
        let t_predict = self.interpolate_completion(tc_predicted)?;
        let (tc_best, t_best) = curve
            .iter()
            .copied()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty curve");
        let (tc_worst, t_worst) = curve
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty curve");
        Ok(ComparisonMetrics {
            tc_best,
            tc_worst,
            tc_predicted,
            t_best,
            t_worst,
            t_predict,
            pct_best_vs_predict: (t_predict - t_best).abs() / t_best * 100.0,
            pct_best_vs_worst: (t_worst - t_best).abs() / t_best * 100.0,
        })
    }

    /// Raw per-run CSV: `tc_s,run_index,seed,completion_s`. Failed runs
    /// keep their row with an empty completion field.
    pub fn to_raw_csv(&self) -> String {
        let mut out = String::from("tc_s,run_index,seed,completion_s\n");
        for interval in &self.intervals {
            for run in &interval.runs {
                let completion = match &run.outcome {
                    Ok(t) => sig6(*t),
                    Err(_) => String::new(),
                };
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    sig6(interval.tc),
                    run.run_index,
                    run.seed,
                    completion
                ));
            }
        }
        out
    }

    /// Summary CSV: `tc_s,min,q25,median,q75,max` per interval.
    pub fn to_summary_csv(&self) -> String {
        let mut out = String::from("tc_s,min,q25,median,q75,max\n");
        for interval in &self.intervals {
            match interval.quartiles {
                Some(q) => out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    sig6(interval.tc),
                    sig6(q.min),
                    sig6(q.q25),
                    sig6(q.median),
                    sig6(q.q75),
                    sig6(q.max)
                )),
                None => out.push_str(&format!("{},,,,,\n", sig6(interval.tc))),
            }
        }
        out
    }
}

impl ComparisonMetrics {
    /// Single-row CSV with the comparison columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "tc_best_s,tc_worst_s,tc_predicted_s,t_best_s,t_worst_s,t_predict_s,\
             pct_best_vs_predict,pct_best_vs_worst\n",
        );
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            sig6(self.tc_best),
            sig6(self.tc_worst),
            sig6(self.tc_predicted),
            sig6(self.t_best),
            sig6(self.t_worst),
            sig6(self.t_predict),
            sig6(self.pct_best_vs_predict),
            sig6(self.pct_best_vs_worst)
        ));
        out
    }
}
