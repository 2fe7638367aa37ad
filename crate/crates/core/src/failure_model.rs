//! Exponential failure model and MTTF estimation from availability logs.
//!
//! Node lifetimes are modelled as i.i.d. exponential: the probability that
//! a single process is still alive at time `t` is `exp(-lambda * t)`. The
//! rate is pooled over the whole node population; per-node heterogeneity
//! is deliberately collapsed into one lambda.

use rand::Rng;

use crate::error::{Error, Result};

pub const SECONDS_PER_HOUR: f64 = 3600.0;

/// Aggregated availability observations for one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeUptimeRecord {
    pub node_id: String,
    /// Total observed operation time in seconds. Must be positive.
    pub operation_time: f64,
    pub failure_count: u64,
}

impl NodeUptimeRecord {
    pub fn new(
        node_id: impl Into<String>,
        operation_time: f64,
        failure_count: u64,
    ) -> Result<Self> {
        if !operation_time.is_finite() || operation_time <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "operation_time must be positive and finite, got {operation_time}"
            )));
        }
        Ok(Self {
            node_id: node_id.into(),
            operation_time,
            failure_count,
        })
    }
}

/// Pooled exponential failure distribution with rate `lambda` (1/s).
///
/// A zero rate describes a failure-free population: survival is 1 for all
/// times and sampled lifetimes are infinite. Estimators never produce a
/// zero rate themselves ([`estimate_mttf`] rejects failure-free logs), but
/// the simulator accepts it for deterministic baseline runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialFailureModel {
    lambda: f64,
}

impl ExponentialFailureModel {
    /// Build from a failure rate in 1/seconds. Requires `lambda >= 0` and finite.
    pub fn from_lambda(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "failure rate must be non-negative and finite, got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }

    /// Build from a mean time to failure in seconds; `lambda = 1/mttf`.
    pub fn from_mttf(mttf: f64) -> Result<Self> {
        if !mttf.is_finite() || mttf <= 0.0 {
            return Err(Error::NonPositiveMttf(mttf));
        }
        Ok(Self { lambda: 1.0 / mttf })
    }

    /// Failure rate in 1/seconds.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Mean time to failure in seconds (`inf` for a failure-free model).
    pub fn mttf(&self) -> f64 {
        1.0 / self.lambda
    }

    /// Probability that a single process is still alive at time `t`:
    /// `exp(-lambda * t)`.
    pub fn survival_probability(&self, t: f64) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        Ok((-self.lambda * t).exp())
    }

    /// Inverse of the survival function: the lifetime whose survival
    /// probability is `u`, i.e. `-ln(u) / lambda` for `u` in (0, 1].
    pub fn inverse_survival(&self, u: f64) -> f64 {
        debug_assert!(u > 0.0 && u <= 1.0, "u must lie in (0, 1], got {u}");
        -u.ln() / self.lambda
    }

    /// Draw a time to failure by inverse-CDF sampling. Strictly positive;
    /// infinite when `lambda == 0`.
    pub fn sample_time_to_failure<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // gen() yields [0, 1); reject exact zeros so u lands in the open
        // interval (0, 1) and the sampled lifetime stays strictly positive.
        let mut g = rng.gen::<f64>();
        while g <= 0.0 {
            g = rng.gen::<f64>();
        }
        self.inverse_survival(1.0 - g)
    }
}

/// Pooled MTTF estimate: total operation time divided by total failures.
///
/// Returns seconds. Fails with [`Error::NoFailures`] when the log records
/// zero failures: the estimator is undefined there and a zero failure rate
/// would make the optimal interval unbounded.
pub fn estimate_mttf(records: &[NodeUptimeRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyLog("availability records"));
    }
    let total_time: f64 = records.iter().map(|r| r.operation_time).sum();
    let total_failures: u64 = records.iter().map(|r| r.failure_count).sum();
    if total_failures == 0 {
        return Err(Error::NoFailures);
    }
    Ok(total_time / total_failures as f64)
}

/// Parse a failure log in CSV form: header `node_id,operation_hours,failures`,
/// one node per row. Hours are converted to seconds at parse time.
pub fn parse_failure_log(text: &str) -> Result<Vec<NodeUptimeRecord>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::EmptyLog("failure log file"))?;
    if header.trim() != "node_id,operation_hours,failures" {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `node_id,operation_hours,failures`, got `{}`",
                header.trim()
            ),
        });
    }

    let mut records = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let hours: f64 = fields[1].trim().parse().map_err(|e| Error::Parse {
            line: line_no,
            message: format!("bad operation_hours `{}`: {e}", fields[1].trim()),
        })?;
        let failures: u64 = fields[2].trim().parse().map_err(|e| Error::Parse {
            line: line_no,
            message: format!("bad failures `{}`: {e}", fields[2].trim()),
        })?;
        let record = NodeUptimeRecord::new(fields[0].trim(), hours * SECONDS_PER_HOUR, failures)
            .map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::EmptyLog("failure log file"));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn record(time_s: f64, failures: u64) -> NodeUptimeRecord {
        NodeUptimeRecord::new("node", time_s, failures).unwrap()
    }

    /// Truncated power series for exp(x), independent of f64::exp.
    fn series_exp(x: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            term *= x / k as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn estimate_mttf_matches_measured_pool() {
        // 13678.67 hours of operation over 1714 failures -> ~7.9805 h = 28730 s.
        let records = [record(13678.67 * SECONDS_PER_HOUR, 1714)];
        let mttf = estimate_mttf(&records).unwrap();
        assert!((mttf - 28730.0).abs() < 1.0, "mttf = {mttf}");
        assert_relative_eq!(mttf / SECONDS_PER_HOUR, 7.9805, max_relative = 1e-4);
    }

    #[test]
    fn estimate_mttf_identity_case() {
        assert_eq!(estimate_mttf(&[record(100.0, 1)]).unwrap(), 100.0);
    }

    #[test]
    fn estimate_mttf_pools_across_records() {
        // (300 s, 2) + (100 s, 2) -> 400 / 4 = 100 s.
        let records = [record(300.0, 2), record(100.0, 2)];
        assert_eq!(estimate_mttf(&records).unwrap(), 100.0);
    }

    #[test]
    fn estimate_mttf_rejects_empty_and_failure_free() {
        assert!(matches!(estimate_mttf(&[]), Err(Error::EmptyLog(_))));
        assert!(matches!(
            estimate_mttf(&[record(50.0, 0)]),
            Err(Error::NoFailures)
        ));
    }

    #[test]
    fn from_mttf_inverts_rate() {
        let model = ExponentialFailureModel::from_mttf(28730.0).unwrap();
        assert_eq!(model.lambda(), 1.0 / 28730.0);
        // The pooled failure rate at its quoted precision.
        assert!((model.lambda() - 0.0000348074).abs() <= 1e-9);

        assert_eq!(
            ExponentialFailureModel::from_mttf(1.0).unwrap().lambda(),
            1.0
        );
        let two_hours = ExponentialFailureModel::from_mttf(2.0 * SECONDS_PER_HOUR).unwrap();
        assert_relative_eq!(two_hours.lambda(), 1.0 / 7200.0, max_relative = 1e-15);

        assert!(matches!(
            ExponentialFailureModel::from_mttf(0.0),
            Err(Error::NonPositiveMttf(_))
        ));
        assert!(matches!(
            ExponentialFailureModel::from_mttf(-3.0),
            Err(Error::NonPositiveMttf(_))
        ));
    }

    #[test]
    fn survival_boundary_and_known_points() {
        let model = ExponentialFailureModel::from_lambda(0.0000348074).unwrap();
        assert_eq!(model.survival_probability(0.0).unwrap(), 1.0);

        // lambda * t = 1 by construction: survival = 1/e.
        let t = 1.0 / model.lambda();
        let s = model.survival_probability(t).unwrap();
        assert_relative_eq!(s, series_exp(-1.0), max_relative = 1e-12);

        let s169 = model.survival_probability(169.0).unwrap();
        assert_relative_eq!(
            s169,
            series_exp(-0.0000348074 * 169.0),
            max_relative = 1e-12
        );
        assert!((s169 - 0.99413).abs() < 5e-5);

        assert!(matches!(
            model.survival_probability(-1.0),
            Err(Error::NegativeTime(_))
        ));
    }

    #[test]
    fn failure_free_model_never_fails() {
        let model = ExponentialFailureModel::from_lambda(0.0).unwrap();
        assert_eq!(model.survival_probability(1e12).unwrap(), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(model.sample_time_to_failure(&mut rng).is_infinite());
    }

    #[test]
    fn inverse_survival_fixed_point_is_mttf() {
        let model = ExponentialFailureModel::from_mttf(28730.0).unwrap();
        let u = (-1.0f64).exp();
        assert_relative_eq!(
            model.inverse_survival(u),
            model.mttf(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn sampled_mean_and_tail_match_distribution() {
        let model = ExponentialFailureModel::from_mttf(500.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 1_000_000usize;
        let mut sum = 0.0;
        let mut beyond_mttf = 0usize;
        for _ in 0..n {
            let t = model.sample_time_to_failure(&mut rng);
            assert!(t > 0.0);
            sum += t;
            if t > model.mttf() {
                beyond_mttf += 1;
            }
        }
        let mean = sum / n as f64;
        assert!((mean / model.mttf() - 1.0).abs() < 0.01, "mean = {mean}");
        let tail = beyond_mttf as f64 / n as f64;
        assert!((tail / (-1.0f64).exp() - 1.0).abs() < 0.01, "tail = {tail}");
    }

    #[test]
    fn sampled_cdf_passes_kolmogorov_smirnov() {
        let model = ExponentialFailureModel::from_mttf(100.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9001);
        let n = 1_000_000usize;
        let mut samples: Vec<f64> = (0..n)
            .map(|_| model.sample_time_to_failure(&mut rng))
            .collect();
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d = 0.0f64;
        for (i, t) in samples.iter().enumerate() {
            let cdf = 1.0 - (-model.lambda() * t).exp();
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            d = d.max((cdf - lo).abs()).max((hi - cdf).abs());
        }
        assert!(d <= 0.005, "KS distance = {d}");
    }

    #[test]
    fn parses_failure_log_and_converts_hours() {
        let text = "node_id,operation_hours,failures\nalpha,1.0,2\nbeta,0.5,1\n";
        let records = parse_failure_log(text).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].operation_time, 3600.0);
        assert_eq!(records[1].operation_time, 1800.0);
        assert_eq!(estimate_mttf(&records).unwrap(), 1800.0);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "node_id,operation_hours,failures\nalpha,1.0,2\nbeta,not-a-number,1\n";
        match parse_failure_log(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_failure_log("bogus,header\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected header error, got {other:?}"),
        }
        match parse_failure_log("node_id,operation_hours,failures\nalpha,-1.0,2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected invariant error, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn survival_is_monotone_nonincreasing(
            lambda in 1e-8f64..1e-2,
            t1 in 0.0f64..1e6,
            dt in 0.0f64..1e6,
        ) {
            let model = ExponentialFailureModel::from_lambda(lambda).unwrap();
            let s1 = model.survival_probability(t1).unwrap();
            let s2 = model.survival_probability(t1 + dt).unwrap();
            prop_assert!(s2 <= s1);
            // Strict decrease where the step is resolvable in f64: neither
            // value underflowed and the exponent moved by more than an ulp.
            if lambda * dt > 1e-9 && lambda * (t1 + dt) < 700.0 {
                prop_assert!(s2 < s1, "s1={s1} s2={s2}");
            }
            prop_assert!((0.0..=1.0).contains(&s1));
        }

        #[test]
        fn survival_is_memoryless(
            lambda in 1e-8f64..1e-4,
            t in 0.0f64..1e5,
            s in 0.0f64..1e5,
        ) {
            // Ranges keep lambda*(t+s) <= 20, far from underflow; the
            // identity is then exact to 1e-12.
            let model = ExponentialFailureModel::from_lambda(lambda).unwrap();
            let lhs = model.survival_probability(t + s).unwrap()
                / model.survival_probability(t).unwrap();
            let rhs = model.survival_probability(s).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12, "lhs={lhs} rhs={rhs}");
        }

        #[test]
        fn estimate_mttf_is_scale_consistent(
            times in proptest::collection::vec(1e-3f64..1e5, 1..8),
            failures in proptest::collection::vec(0u64..20, 1..8),
            k in 1e-3f64..1e3,
        ) {
            let n = times.len().min(failures.len());
            let records: Vec<NodeUptimeRecord> = (0..n)
                .map(|i| record(times[i], failures[i]))
                .collect();
            let total: u64 = records.iter().map(|r| r.failure_count).sum();
            prop_assume!(total >= 1);
            let base = estimate_mttf(&records).unwrap();
            let scaled: Vec<NodeUptimeRecord> = records
                .iter()
                .map(|r| record(r.operation_time * k, r.failure_count))
                .collect();
            let scaled_mttf = estimate_mttf(&scaled).unwrap();
            prop_assert!((scaled_mttf / (base * k) - 1.0).abs() < 1e-12);
        }
    }
}
