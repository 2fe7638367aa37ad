//! Checkpoint save cost: the additive component model and an estimator
//! for the effective cost when many replicas save independently.

use rand::Rng;

use crate::error::{Error, Result};

/// The four additive components of one checkpoint save, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CheckpointCost {
    /// Time to create the checkpoint on the client.
    pub client_time: f64,
    /// Network latency from client to server.
    pub latency: f64,
    /// Time to upload the checkpoint to the server.
    pub upload: f64,
    /// Time to send the acknowledgment back to the client.
    pub ack: f64,
}

impl CheckpointCost {
    pub fn new(client_time: f64, latency: f64, upload: f64, ack: f64) -> Result<Self> {
        for (name, v) in [
            ("client_time", client_time),
            ("latency", latency),
            ("upload", upload),
            ("ack", ack),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be non-negative and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            client_time,
            latency,
            upload,
            ack,
        })
    }

    /// Total save cost: the sum of the four components.
    pub fn total(&self) -> f64 {
        self.client_time + self.latency + self.upload + self.ack
    }
}

/// Observed per-checkpoint save times, in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSampleLog {
    samples: Vec<f64>,
}

impl CostSampleLog {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyLog("cost samples"));
        }
        for &s in &samples {
            if !s.is_finite() || s <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "save-time samples must be positive and finite, got {s}"
                )));
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(0.0, f64::max)
    }

    /// Effective save cost for `n` processes with `r` replicas each.
    ///
    /// When n*r replicas save independently, the computation stalls for the
    /// slowest save. Each iteration draws n*r readings uniformly at random
    /// (with replacement) from the log and takes their maximum; the estimate
    /// is the mean of those maxima.
    pub fn estimate_ts<R: Rng + ?Sized>(
        &self,
        n: u64,
        r: u64,
        iterations: u64,
        rng: &mut R,
    ) -> Result<f64> {
        if n < 1 || r < 1 || iterations < 1 {
            return Err(Error::InvalidConfig(format!(
                "n, r, iterations must all be >= 1 (got n={n}, r={r}, iterations={iterations})"
            )));
        }
        let draws = (n * r) as usize;
        let mut sum = 0.0;
        for _ in 0..iterations {
            let mut max = 0.0f64;
            for _ in 0..draws {
                let idx = rng.gen_range(0..self.samples.len());
                max = max.max(self.samples[idx]);
            }
            sum += max;
        }
        Ok(sum / iterations as f64)
    }
}

/// Default iteration count for [`CostSampleLog::estimate_ts`]; maxima
/// converge slowly, so the default is deliberately high.
pub const DEFAULT_TS_ITERATIONS: u64 = 100_000;

/// Parse a cost-sample file: CSV with header `save_time_seconds`,
/// one sample per row.
pub fn parse_cost_samples(text: &str) -> Result<CostSampleLog> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::EmptyLog("cost sample file"))?;
    if header.trim() != "save_time_seconds" {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `save_time_seconds`, got `{}`",
                header.trim()
            ),
        });
    }
    let mut samples = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let v: f64 = row.parse().map_err(|e| Error::Parse {
            line: line_no,
            message: format!("bad save time `{row}`: {e}"),
        })?;
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("save time must be positive and finite, got {v}"),
            });
        }
        samples.push(v);
    }
    CostSampleLog::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Exact E[max of k draws with replacement] by exhaustive enumeration
    /// over all k-tuples of sample indices. Test-only oracle.
    fn enumerated_mean_max(samples: &[f64], k: u32) -> f64 {
        let m = samples.len();
        let tuples = (m as u64).pow(k);
        let mut sum = 0.0;
        for code in 0..tuples {
            let mut c = code;
            let mut max = 0.0f64;
            for _ in 0..k {
                max = max.max(samples[(c % m as u64) as usize]);
                c /= m as u64;
            }
            sum += max;
        }
        sum / tuples as f64
    }

    #[test]
    fn total_sums_components() {
        assert_eq!(
            CheckpointCost::new(0.0, 0.0, 0.0, 0.0).unwrap().total(),
            0.0
        );
        let small = CheckpointCost::new(0.2, 0.3, 0.4, 0.1).unwrap();
        assert_relative_eq!(small.total(), 1.0, max_relative = 1e-15);
        // Component split consistent with a measured 156 s large-checkpoint save.
        let large = CheckpointCost::new(10.0, 20.0, 120.0, 6.0).unwrap();
        assert_eq!(large.total(), 156.0);
    }

    #[test]
    fn rejects_negative_components() {
        assert!(CheckpointCost::new(-0.1, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn constant_log_estimates_exactly() {
        let log = CostSampleLog::new(vec![5.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(log.estimate_ts(4, 2, 100, &mut rng).unwrap(), 5.0);
    }

    #[test]
    fn single_draw_recovers_sample_mean() {
        let log = CostSampleLog::new(vec![1.0, 2.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let est = log.estimate_ts(1, 1, 200_000, &mut rng).unwrap();
        // E[single draw] = 1.5; standard error ~ 0.0011.
        assert!((est - 1.5).abs() < 0.01, "est = {est}");
    }

    #[test]
    fn two_draw_maximum_matches_enumeration() {
        let samples = vec![1.0, 2.0];
        let expected = enumerated_mean_max(&samples, 2);
        assert_eq!(expected, 1.75); // 1 * 1/4 + 2 * 3/4
        let log = CostSampleLog::new(samples).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let est = log.estimate_ts(2, 1, 200_000, &mut rng).unwrap();
        assert!((est - expected).abs() < 0.01, "est = {est}");
    }

    #[test]
    fn wider_log_matches_enumeration() {
        let samples = vec![0.4, 1.1, 2.5, 0.9];
        let expected = enumerated_mean_max(&samples, 3);
        let log = CostSampleLog::new(samples).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let est = log.estimate_ts(3, 1, 300_000, &mut rng).unwrap();
        assert!(
            (est / expected - 1.0).abs() < 0.01,
            "est = {est}, expected = {expected}"
        );
    }

    #[test]
    fn estimate_is_monotone_in_replica_count() {
        let log = CostSampleLog::new(vec![0.2, 0.7, 1.2, 0.5, 3.0]).unwrap();
        let iterations = 100_000;
        let mut prev = 0.0;
        for k in 1..=6u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + k);
            let est = log.estimate_ts(k, 1, iterations, &mut rng).unwrap();
            assert!(
                est >= prev * (1.0 - 0.01),
                "estimate dropped from {prev} to {est} at n*r = {k}"
            );
            prev = est;
        }
    }

    #[test]
    fn doubling_samples_doubles_estimate() {
        let samples = vec![0.3, 0.9, 2.2];
        let doubled: Vec<f64> = samples.iter().map(|s| s * 2.0).collect();
        let log = CostSampleLog::new(samples).unwrap();
        let log2 = CostSampleLog::new(doubled).unwrap();
        let mut rng_a = ChaCha8Rng::seed_from_u64(5);
        let mut rng_b = ChaCha8Rng::seed_from_u64(5);
        let a = log.estimate_ts(2, 2, 50_000, &mut rng_a).unwrap();
        let b = log2.estimate_ts(2, 2, 50_000, &mut rng_b).unwrap();
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-12);
    }

    #[test]
    fn parses_cost_samples() {
        let log = parse_cost_samples("save_time_seconds\n0.8\n1.2\n").unwrap();
        assert_eq!(log.samples(), &[0.8, 1.2]);
        match parse_cost_samples("save_time_seconds\n0.8\nnope\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            parse_cost_samples("save_time_seconds\n"),
            Err(Error::EmptyLog(_))
        ));
    }

    proptest! {
        #[test]
        fn estimate_stays_within_sample_bounds(
            samples in proptest::collection::vec(1e-3f64..100.0, 1..12),
            n in 1u64..5,
            r in 1u64..4,
            seed in 0u64..1000,
        ) {
            let log = CostSampleLog::new(samples).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let est = log.estimate_ts(n, r, 200, &mut rng).unwrap();
            prop_assert!(est >= log.min() - 1e-12);
            prop_assert!(est <= log.max() + 1e-12);
        }
    }
}
