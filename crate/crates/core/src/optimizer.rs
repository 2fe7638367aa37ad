//! Predicted-optimal checkpoint intervals.
//!
//! The single-process and r=1 optima have closed forms in the principal
//! Lambert W branch; the general (n, r) case is solved numerically by
//! minimizing the normalized overhead and polishing the stationarity
//! condition
//!
//! ```text
//! Ts/Tc^2 = n r lambda e^{-lambda Tc} (1 - e^{-lambda Tc})^{r-1}
//!           / (1 - (1 - e^{-lambda Tc})^r)^{n+1}
//! ```
//!
//! Two classical single-process baselines are included for comparison.

use std::f64::consts::E;

use crate::error::{Error, Result};
use crate::failure_model::ExponentialFailureModel;
use crate::overhead_model::{normalized_overhead, JobSpec};

/// How a prediction was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Exact single-process optimum via Lambert W.
    ClosedFormSingle,
    /// Exact optimum for r = 1 via Lambert W with the rate scaled by n.
    ClosedFormR1,
    /// First-order approximation sqrt(Ts / lambda).
    FirstOrder,
    /// Numeric stationary point of the general overhead model.
    GeneralRoot,
    /// Young's sqrt(2 Ts Tf).
    Young,
    /// Daly's sqrt(2 delta (M + R)) - delta.
    Daly,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedFormSingle => "closed_form_single",
            Method::ClosedFormR1 => "closed_form_r1",
            Method::FirstOrder => "first_order",
            Method::GeneralRoot => "general_root",
            Method::Young => "young",
            Method::Daly => "daly",
        }
    }
}

/// A predicted checkpoint interval with solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionResult {
    /// Predicted-optimal checkpoint interval in seconds.
    pub tc_opt: f64,
    pub method: Method,
    /// Residual of the method's optimality condition at `tc_opt`
    /// (relative for the root methods, zero for pure formulas).
    pub residual: f64,
    /// Iterations spent in W evaluations and/or the root solver.
    pub iterations: u32,
}

const NEG_INV_E: f64 = -1.0 / E;
const MAX_W_ITERATIONS: u32 = 50;

/// Principal branch of the Lambert W function (inverse of `w * exp(w)`),
/// real for `z >= -1/e`.
///
/// Halley iteration from a branch-aware initial guess; the defining
/// identity holds to `1e-12 * max(1, |z|)` across the real branch.
pub fn lambert_w0(z: f64) -> Result<f64> {
    halley_w0(z).map(|(w, _)| w)
}

fn halley_w0(z: f64) -> Result<(f64, u32)> {
    if z.is_nan() || z < NEG_INV_E - 1e-12 {
        return Err(Error::BelowBranchPoint(z));
    }
    let z = z.max(NEG_INV_E);
    if z == 0.0 {
        return Ok((0.0, 0));
    }

    let mut w = initial_guess_w0(z);
    let tol = 1e-14 * z.abs().max(1.0);
    for iter in 1..=MAX_W_ITERATIONS {
        let ew = w.exp();
        let f = w * ew - z;
        if f.abs() <= tol {
            return Ok((w, iter));
        }
        // Halley: w -= f / (f' - f * f'' / (2 f')) with
        // f' = (w+1) e^w, f'' = (w+2) e^w.
        let fp = (w + 1.0) * ew;
        let denom = fp - f * (w + 2.0) / (2.0 * (w + 1.0));
        let step = f / denom;
        w -= step;
        if w < -1.0 {
            // The principal branch never goes below -1.
            w = -1.0 + 0.5 * (w + step + 1.0).abs();
        }
        if step.abs() <= f64::EPSILON * w.abs().max(1e-300) {
            return Ok((w, iter));
        }
    }
    // The iterate is at machine precision even if the f-tolerance was not
    // formally met (possible only immediately at the branch point).
    let w_final = w;
    let resid = (w_final * w_final.exp() - z).abs();
    if resid <= 1e-12 * z.abs().max(1.0) {
        Ok((w_final, MAX_W_ITERATIONS))
    } else {
        Err(Error::NoConvergence {
            iterations: MAX_W_ITERATIONS,
            residual: resid,
        })
    }
}

fn initial_guess_w0(z: f64) -> f64 {
    if z < -0.25 {
        // Square-root expansion about the branch point z = -1/e.
        let p = (2.0 * (E * z + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 * p * p * p / 72.0
    } else if z < E {
        // Series W(z) = z - z^2 + 3/2 z^3 - ... is a good start below e.
        z * (1.0 - z * (1.0 - 1.5 * z)) / (1.0 + z * z)
    } else {
        // Asymptotic: W ~ ln z - ln ln z + ln ln z / ln z.
        let l1 = z.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}

fn check_positive_rate_and_cost(model: &ExponentialFailureModel, ts: f64) -> Result<()> {
    if model.lambda() <= 0.0 {
        return Err(Error::DegenerateInput(
            "failure rate is zero: the optimal interval is unbounded",
        ));
    }
    if !ts.is_finite() || ts <= 0.0 {
        return Err(Error::DegenerateInput(
            "checkpoint cost must be positive for an interior optimum",
        ));
    }
    Ok(())
}

/// Stationarity residual of the single-process optimum in log form:
/// `|lambda Tc + 2 ln Tc - ln Ts + ln lambda|`.
fn single_process_log_residual(tc: f64, lambda: f64, ts: f64) -> f64 {
    (lambda * tc + 2.0 * tc.ln() - ts.ln() + lambda.ln()).abs()
}

/// Exact single-process optimum: `Tc = 2 W(sqrt(lambda Ts) / 2) / lambda`.
pub fn predict_single(model: &ExponentialFailureModel, ts: f64) -> Result<PredictionResult> {
    check_positive_rate_and_cost(model, ts)?;
    let lambda = model.lambda();
    let (w, iterations) = halley_w0((lambda * ts).sqrt() / 2.0)?;
    let tc_opt = 2.0 * w / lambda;
    Ok(PredictionResult {
        tc_opt,
        method: Method::ClosedFormSingle,
        residual: single_process_log_residual(tc_opt, lambda, ts),
        iterations,
    })
}

/// First-order approximation `sqrt(Ts / lambda)`.
pub fn predict_first_order(model: &ExponentialFailureModel, ts: f64) -> Result<PredictionResult> {
    check_positive_rate_and_cost(model, ts)?;
    let lambda = model.lambda();
    let tc_opt = (ts / lambda).sqrt();
    Ok(PredictionResult {
        tc_opt,
        method: Method::FirstOrder,
        residual: single_process_log_residual(tc_opt, lambda, ts),
        iterations: 0,
    })
}

/// Exact optimum for n processes with a single replica each: the
/// single-process form with the failure rate scaled to `n * lambda`,
/// satisfying `Ts/Tc^2 = n lambda e^{n lambda Tc}`.
pub fn predict_r1(model: &ExponentialFailureModel, ts: f64, n: u32) -> Result<PredictionResult> {
    check_positive_rate_and_cost(model, ts)?;
    if n < 1 {
        return Err(Error::DegenerateInput("process count must be >= 1"));
    }
    let rate = model.lambda() * n as f64;
    let (w, iterations) = halley_w0((rate * ts).sqrt() / 2.0)?;
    let tc_opt = 2.0 * w / rate;

    let lhs = ts / (tc_opt * tc_opt);
    let rhs = rate * (rate * tc_opt).exp();
    let residual = (lhs - rhs) / lhs;
    if residual.abs() > 1e-9 {
        return Err(Error::NoConvergence {
            iterations,
            residual,
        });
    }
    Ok(PredictionResult {
        tc_opt,
        method: Method::ClosedFormR1,
        residual,
        iterations,
    })
}

/// Log-residual of the general stationarity condition,
/// `h(T) = ln(Ts/T^2) - ln(RHS(T))`, and its derivative. `h` crosses zero
/// at the optimum; because it is a log ratio, `|h|` is (to first order)
/// the relative residual of the condition itself.
fn stationarity_log_residual(t: f64, lambda: f64, ts: f64, n: f64, r: f64) -> (f64, f64) {
    let u = (-lambda * t).exp();
    let dead = -(-lambda * t).exp_m1();
    let log_dead_r = r * dead.ln();
    let alive_any = if log_dead_r > -std::f64::consts::LN_2 {
        -log_dead_r.exp_m1()
    } else {
        1.0 - log_dead_r.exp()
    };

    let log_rhs =
        (n * r * lambda).ln() - lambda * t + (r - 1.0) * dead.ln() - (n + 1.0) * alive_any.ln();
    let h = ts.ln() - 2.0 * t.ln() - log_rhs;

    let mut dh = -2.0 / t + lambda;
    if r > 1.0 {
        dh -= (r - 1.0) * lambda * u / dead;
    }
    dh -= (n + 1.0) * r * lambda * u * dead.powf(r - 1.0) / alive_any;
    (h, dh)
}

/// Relative residual of the general stationarity condition, normalized by
/// its left side `Ts/Tc^2`.
pub fn stationarity_residual(
    tc: f64,
    model: &ExponentialFailureModel,
    ts: f64,
    spec: &JobSpec,
) -> f64 {
    let (h, _) = stationarity_log_residual(
        tc,
        model.lambda(),
        ts,
        spec.processes() as f64,
        spec.replicas() as f64,
    );
    // h = ln(LHS/RHS)  =>  (LHS-RHS)/LHS = 1 - e^{-h}.
    -(-h).exp_m1()
}

const BRACKET_FLOOR: f64 = 1e-3;
const GOLDEN_RATIO_STEP: f64 = 0.618_033_988_749_894_9;
const MAX_NEWTON_ITERATIONS: u32 = 60;

/// Numeric optimum for the general (n, r) model.
///
/// Minimizes the normalized overhead over `[1e-3 s, 100 * MTTF]` by
/// golden-section search in log space, then polishes the stationarity
/// root with safeguarded Newton steps. The two routes must agree to 0.1%,
/// otherwise the solve is rejected.
pub fn predict_general(
    model: &ExponentialFailureModel,
    ts: f64,
    spec: &JobSpec,
) -> Result<PredictionResult> {
    check_positive_rate_and_cost(model, ts)?;
    let lambda = model.lambda();
    let n = spec.processes() as f64;
    let r = spec.replicas() as f64;

    let objective = |t: f64| {
        normalized_overhead(t, ts, model, spec)
            .expect("interval inside the search bracket is valid")
    };

    // Golden-section on u = ln T; the overhead is unimodal on the bracket
    // (it diverges at both ends).
    let mut lo = BRACKET_FLOOR.ln();
    let mut hi = (100.0 * model.mttf()).ln();
    let mut golden_iters = 0u32;
    let mut x1 = hi - GOLDEN_RATIO_STEP * (hi - lo);
    let mut x2 = lo + GOLDEN_RATIO_STEP * (hi - lo);
    let mut f1 = objective(x1.exp());
    let mut f2 = objective(x2.exp());
    while hi - lo > 1e-9 && golden_iters < 200 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN_RATIO_STEP * (hi - lo);
            f1 = objective(x1.exp());
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN_RATIO_STEP * (hi - lo);
            f2 = objective(x2.exp());
        }
        golden_iters += 1;
    }
    let t_min = (0.5 * (lo + hi)).exp();

    // Newton polish of h(T) = 0 around the minimizer, kept inside a wide
    // safety bracket.
    let mut t = t_min;
    let (safe_lo, safe_hi) = (t_min * 1e-3, t_min * 1e3);
    let mut newton_iters = 0u32;
    let mut h = f64::INFINITY;
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let (h_val, dh) = stationarity_log_residual(t, lambda, ts, n, r);
        h = h_val;
        if h.abs() <= 1e-13 {
            break;
        }
        newton_iters += 1;
        let mut next = t - h / dh;
        if !next.is_finite() || next <= safe_lo || next >= safe_hi {
            // Fall back to a damped step toward the minimizer.
            next = 0.5 * (t + t_min);
        }
        if (next - t).abs() <= f64::EPSILON * t {
            t = next;
            h = stationarity_log_residual(t, lambda, ts, n, r).0;
            break;
        }
        t = next;
    }

    let residual = -(-h).exp_m1();
    if residual.abs() > 1e-9 {
        return Err(Error::NoConvergence {
            iterations: golden_iters + newton_iters,
            residual,
        });
    }
    // Cross-validation: the stationary point and the bracketing minimizer
    // must be the same optimum.
    if (t - t_min).abs() > 1e-3 * t {
        return Err(Error::NoConvergence {
            iterations: golden_iters + newton_iters,
            residual: (t - t_min) / t,
        });
    }

    Ok(PredictionResult {
        tc_opt: t,
        method: Method::GeneralRoot,
        residual,
        iterations: golden_iters + newton_iters,
    })
}

/// Young's first-order optimum `sqrt(2 Ts Tf)`.
pub fn baseline_young(ts: f64, tf: f64) -> Result<PredictionResult> {
    if !ts.is_finite() || ts <= 0.0 || !tf.is_finite() || tf <= 0.0 {
        return Err(Error::DegenerateInput(
            "Young's formula needs positive checkpoint cost and MTTF",
        ));
    }
    Ok(PredictionResult {
        tc_opt: (2.0 * ts * tf).sqrt(),
        method: Method::Young,
        residual: 0.0,
        iterations: 0,
    })
}

/// Daly's estimator `sqrt(2 delta (M + R)) - delta`, valid while
/// `(Tc + delta)/M < 1/2`.
pub fn baseline_daly(delta: f64, m: f64, rr: f64) -> Result<PredictionResult> {
    if !delta.is_finite()
        || delta <= 0.0
        || !m.is_finite()
        || m <= 0.0
        || !rr.is_finite()
        || rr < 0.0
    {
        return Err(Error::DegenerateInput(
            "Daly's formula needs positive dump cost and MTBF, non-negative restart",
        ));
    }
    let tc = (2.0 * delta * (m + rr)).sqrt() - delta;
    if tc <= 0.0 {
        return Err(Error::NonPositiveResult(tc));
    }
    Ok(PredictionResult {
        tc_opt: tc,
        method: Method::Daly,
        residual: 0.0,
        iterations: 0,
    })
}
