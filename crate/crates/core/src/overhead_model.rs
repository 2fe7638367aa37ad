//! Expected checkpoint overhead for n inter-dependent processes with r
//! replicas each.
//!
//! A job advances one checkpoint interval at a time. The interval attempt
//! succeeds when every process has at least one replica alive at its end;
//! otherwise the whole super-step is retried after the failed interval.
//! The expected wall-clock time to carry all processes across one interval
//! (including the save cost on the successful attempt) is
//!
//! ```text
//! G(Tc) = Tc / (1 - (1 - p)^r)^n + Ts,    p = exp(-lambda * Tc)
//! ```
//!
//! and `G(Tc)/Tc` is the normalized overhead whose minimizer defines the
//! predicted-optimal interval.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::failure_model::ExponentialFailureModel;

/// Job shape: `processes` inter-dependent processes, each running
/// `replicas` concurrent replicas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JobSpec {
    processes: u32,
    replicas: u32,
}

impl JobSpec {
    pub fn new(processes: u32, replicas: u32) -> Result<Self> {
        if processes < 1 || replicas < 1 {
            return Err(Error::InvalidConfig(format!(
                "process and replica counts must be >= 1, got n={processes}, r={replicas}"
            )));
        }
        Ok(Self {
            processes,
            replicas,
        })
    }

    pub fn processes(&self) -> u32 {
        self.processes
    }

    pub fn replicas(&self) -> u32 {
        self.replicas
    }

    /// Total replica count `n * r`.
    pub fn total_replicas(&self) -> u64 {
        self.processes as u64 * self.replicas as u64
    }
}

/// Overhead of one checkpoint interval, evaluated at a specific `tc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverheadPoint {
    pub tc: f64,
    /// Expected time to move every process across one interval, `G(Tc)`.
    pub expected_overhead: f64,
    /// `G(Tc) / Tc`; always >= 1.
    pub normalized: f64,
}

impl OverheadPoint {
    pub fn evaluate(
        tc: f64,
        ts: f64,
        model: &ExponentialFailureModel,
        spec: &JobSpec,
    ) -> Result<Self> {
        let expected = expected_overhead(tc, ts, model, spec)?;
        Ok(Self {
            tc,
            expected_overhead: expected,
            normalized: expected / tc,
        })
    }
}

/// Probability that all processes clear the interval, from the paired
/// per-replica survival `p` and death `dead` probabilities (each supplied
/// accurately rounded, so both tails stay precise).
///
/// For r = 1 this is exactly `p^n`; otherwise `(1-p)^r` and its complement
/// are formed in log space on whichever side avoids cancellation.
fn all_success(p: f64, dead: f64, spec: &JobSpec) -> f64 {
    if dead <= 0.0 {
        return 1.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if spec.replicas == 1 {
        return if spec.processes == 1 {
            p
        } else {
            p.powi(spec.processes as i32)
        };
    }
    let log_dead = if p < 0.5 { (-p).ln_1p() } else { dead.ln() };
    let log_dead_r = spec.replicas as f64 * log_dead;
    let (alive_any, log_alive) = if log_dead_r > -LN_2 {
        // (1-p)^r is above 1/2: form the complement from expm1.
        let alive = -log_dead_r.exp_m1();
        (alive, alive.ln())
    } else {
        let dead_r = log_dead_r.exp();
        (1.0 - dead_r, (-dead_r).ln_1p())
    };
    if spec.processes == 1 {
        alive_any
    } else {
        (spec.processes as f64 * log_alive).exp()
    }
}

/// Probability that all `n` processes reach the next checkpoint when a
/// single replica survives with probability `p`: `(1 - (1-p)^r)^n`.
pub fn success_prob_all(p: f64, spec: &JobSpec) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    Ok(all_success(p, 1.0 - p, spec))
}

/// Interval-success probability with `p` derived from the failure model;
/// `p = exp(-lambda tc)` and `1-p = -expm1(-lambda tc)` are formed
/// separately so neither tail cancels.
pub fn success_prob_over_interval(
    tc: f64,
    model: &ExponentialFailureModel,
    spec: &JobSpec,
) -> Result<f64> {
    check_interval(tc)?;
    let exponent = -model.lambda() * tc;
    Ok(all_success(exponent.exp(), -exponent.exp_m1(), spec))
}

/// Expected overhead `G(Tc) = Tc / (1 - (1-p)^r)^n + Ts`.
pub fn expected_overhead(
    tc: f64,
    ts: f64,
    model: &ExponentialFailureModel,
    spec: &JobSpec,
) -> Result<f64> {
    check_save_cost(ts)?;
    let p_all = success_prob_over_interval(tc, model, spec)?;
    Ok(tc / p_all + ts)
}

/// Normalized overhead `G(Tc)/Tc = 1/(1 - (1-p)^r)^n + Ts/Tc`.
pub fn normalized_overhead(
    tc: f64,
    ts: f64,
    model: &ExponentialFailureModel,
    spec: &JobSpec,
) -> Result<f64> {
    Ok(expected_overhead(tc, ts, model, spec)? / tc)
}

fn check_interval(tc: f64) -> Result<()> {
    if !tc.is_finite() || tc <= 0.0 {
        return Err(Error::NonPositiveInterval(tc));
    }
    Ok(())
}

fn check_save_cost(ts: f64) -> Result<()> {
    if !ts.is_finite() || ts < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "checkpoint save cost must be non-negative and finite, got {ts}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(n: u32, r: u32) -> JobSpec {
        JobSpec::new(n, r).unwrap()
    }

    /// Monte-Carlo estimate of the all-processes success probability by
    /// drawing every replica survival independently. Test-only oracle.
    fn mc_success_prob(p: f64, n: u32, r: u32, trials: u64, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ok = 0u64;
        'trial: for _ in 0..trials {
            for _ in 0..n {
                let alive = (0..r).any(|_| rng.gen::<f64>() < p);
                if !alive {
                    continue 'trial;
                }
            }
            ok += 1;
        }
        ok as f64 / trials as f64
    }

    /// Monte-Carlo estimate of the expected interval overhead by walking
    /// the renewal tree attempt by attempt. Test-only oracle.
    fn mc_expected_overhead(
        tc: f64,
        ts: f64,
        lambda: f64,
        n: u32,
        r: u32,
        trials: u64,
        seed: u64,
    ) -> f64 {
        let p = (-lambda * tc).exp();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut total = 0.0;
        for _ in 0..trials {
            loop {
                total += tc;
                let all_alive = (0..n).all(|_| (0..r).any(|_| rng.gen::<f64>() < p));
                if all_alive {
                    total += ts;
                    break;
                }
            }
        }
        total / trials as f64
    }

    #[test]
    fn success_prob_boundaries() {
        assert_eq!(success_prob_all(1.0, &spec(7, 3)).unwrap(), 1.0);
        assert_eq!(success_prob_all(0.3, &spec(1, 1)).unwrap(), 0.3);
        assert_eq!(success_prob_all(0.0, &spec(2, 2)).unwrap(), 0.0);
        assert!(matches!(
            success_prob_all(1.2, &spec(1, 1)),
            Err(Error::ProbabilityOutOfRange(_))
        ));
        assert!(matches!(
            success_prob_all(-0.1, &spec(1, 1)),
            Err(Error::ProbabilityOutOfRange(_))
        ));
    }

    #[test]
    fn success_prob_matches_bernoulli_monte_carlo() {
        let exact = success_prob_all(0.9, &spec(2, 2)).unwrap();
        assert_relative_eq!(exact, 0.9801, max_relative = 1e-12);
        let trials = 1_000_000;
        let mc = mc_success_prob(0.9, 2, 2, trials, 11);
        // 3 sigma of a Bernoulli proportion at p = 0.9801.
        let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!(
            (mc - exact).abs() < 3.0 * sigma,
            "mc = {mc}, exact = {exact}"
        );
    }

    #[test]
    fn success_prob_log_space_is_stable_near_one() {
        // p so close to 1 that (1-p)^r would underflow long before the
        // product over processes matters.
        let p = 1.0 - 1e-12;
        let got = success_prob_all(p, &spec(32, 3)).unwrap();
        // 1 - (1e-12)^3 = 1 - 1e-36; raised to 32 it is 1 - 3.2e-35.
        assert_relative_eq!(got, 1.0, epsilon = 1e-30);
        assert!(got <= 1.0);
    }

    #[test]
    fn failure_free_overhead_is_interval_plus_save() {
        let model = ExponentialFailureModel::from_lambda(0.0).unwrap();
        let g = expected_overhead(120.0, 3.0, &model, &spec(16, 2)).unwrap();
        assert_eq!(g, 123.0);
        let norm = normalized_overhead(120.0, 0.0, &model, &spec(4, 1)).unwrap();
        assert_eq!(norm, 1.0);
    }

    #[test]
    fn single_process_overhead_matches_monte_carlo() {
        let lambda = 0.0000348074;
        let model = ExponentialFailureModel::from_lambda(lambda).unwrap();
        let tc = 169.0;
        let g = expected_overhead(tc, 1.0, &model, &spec(1, 1)).unwrap();
        assert_relative_eq!(g, tc * (lambda * tc).exp() + 1.0, max_relative = 1e-14);
        assert!((g - 170.997).abs() < 5e-3);

        let mc = mc_expected_overhead(tc, 1.0, lambda, 1, 1, 1_000_000, 21);
        assert!((mc / g - 1.0).abs() < 1e-3, "mc = {mc}, g = {g}");
    }

    #[test]
    fn n_fold_conjunction_matches_monte_carlo() {
        let lambda = 0.0000348074;
        let model = ExponentialFailureModel::from_lambda(lambda).unwrap();
        let tc = 42.0;
        let g = expected_overhead(tc, 1.0, &model, &spec(16, 1)).unwrap();
        assert_relative_eq!(
            g,
            tc * (16.0 * lambda * tc).exp() + 1.0,
            max_relative = 1e-12
        );
        let mc = mc_expected_overhead(tc, 1.0, lambda, 16, 1, 1_000_000, 22);
        assert!((mc / g - 1.0).abs() < 2e-3, "mc = {mc}, g = {g}");
    }

    #[test]
    fn normalized_overhead_known_point() {
        // lambda * tc = 1, ts = 0, single process: normalized = e.
        let model = ExponentialFailureModel::from_lambda(0.01).unwrap();
        let norm = normalized_overhead(100.0, 0.0, &model, &spec(1, 1)).unwrap();
        assert_relative_eq!(norm, std::f64::consts::E, max_relative = 1e-14);
    }

    #[test]
    fn monte_carlo_equivalence_on_reduced_grid() {
        // The full {1,16,32} x {1,2,3} x {0.001, 0.1, 1} grid runs in the
        // acceptance suite; this covers the cells cheap enough for unit scale.
        let trials = 200_000;
        let mut seed = 300;
        for &(n, r) in &[(1u32, 1u32), (1, 3), (16, 1), (16, 2)] {
            for &lt in &[0.001f64, 0.1] {
                let tc = 50.0;
                let lambda = lt / tc;
                let model = ExponentialFailureModel::from_lambda(lambda).unwrap();
                let g = expected_overhead(tc, 0.5, &model, &spec(n, r)).unwrap();
                seed += 1;
                let mc = mc_expected_overhead(tc, 0.5, lambda, n, r, trials, seed);
                assert!(
                    (mc / g - 1.0).abs() < 0.01,
                    "n={n} r={r} lambda*tc={lt}: mc = {mc}, analytic = {g}"
                );
            }
        }
    }

    #[test]
    fn overhead_point_carries_consistent_fields() {
        let model = ExponentialFailureModel::from_mttf(28730.0).unwrap();
        let point = OverheadPoint::evaluate(169.0, 1.0, &model, &spec(1, 1)).unwrap();
        assert!(point.normalized >= 1.0);
        assert!(point.expected_overhead >= point.tc);
        assert_relative_eq!(
            point.normalized,
            point.expected_overhead / point.tc,
            max_relative = 1e-15
        );
    }

    #[test]
    fn normalized_overhead_blows_up_at_both_extremes() {
        let model = ExponentialFailureModel::from_mttf(28730.0).unwrap();
        let s = spec(16, 1);
        let interior = normalized_overhead(42.0, 1.0, &model, &s).unwrap();
        let tiny = normalized_overhead(1e-9, 1.0, &model, &s).unwrap();
        let huge = normalized_overhead(1e3 * 28730.0 * 100.0, 1.0, &model, &s).unwrap();
        assert!(tiny > 100.0 * interior, "tiny = {tiny}");
        assert!(huge > 100.0 * interior, "huge = {huge}");
    }

    proptest! {
        #[test]
        fn normalized_has_unit_floor(
            tc in 1e-3f64..1e6,
            ts in 0.0f64..1e3,
            lambda in 0.0f64..1e-2,
            n in 1u32..64,
            r in 1u32..5,
        ) {
            let model = ExponentialFailureModel::from_lambda(lambda).unwrap();
            let norm = normalized_overhead(tc, ts, &model, &spec(n, r)).unwrap();
            prop_assert!(norm >= 1.0 + ts / tc - 1e-12);
        }

        #[test]
        fn success_prob_monotone_in_shape(
            p in 1e-6f64..0.999999,
            n in 1u32..40,
            r in 1u32..5,
        ) {
            let base = success_prob_all(p, &spec(n, r)).unwrap();
            let more_replicas = success_prob_all(p, &spec(n, r + 1)).unwrap();
            let more_processes = success_prob_all(p, &spec(n + 1, r)).unwrap();
            prop_assert!(more_replicas > base,
                "r+1 must help: {more_replicas} vs {base}");
            prop_assert!(more_processes < base,
                "n+1 must hurt: {more_processes} vs {base}");
        }

        #[test]
        fn reduces_to_single_process_form(
            tc in 1e-2f64..1e5,
            ts in 0.0f64..1e2,
            lambda in 1e-8f64..1e-3,
        ) {
            // For n = r = 1 the general formula must collapse to
            // tc / f(tc) + ts.
            let model = ExponentialFailureModel::from_lambda(lambda).unwrap();
            let general = expected_overhead(tc, ts, &model, &spec(1, 1)).unwrap();
            let single = tc / model.survival_probability(tc).unwrap() + ts;
            prop_assert!((general / single - 1.0).abs() < 1e-12);
        }

        #[test]
        fn normalized_equals_expected_over_tc(
            tc in 1e-3f64..1e6,
            ts in 0.0f64..1e3,
            lambda in 0.0f64..1e-3,
            n in 1u32..33,
            r in 1u32..4,
        ) {
            let model = ExponentialFailureModel::from_lambda(lambda).unwrap();
            let s = spec(n, r);
            let g = expected_overhead(tc, ts, &model, &s).unwrap();
            // Hopeless rate/interval combinations overflow to infinity,
            // where the ratio identity is meaningless.
            prop_assume!(g.is_finite());
            let norm = normalized_overhead(tc, ts, &model, &s).unwrap();
            prop_assert!((norm - g / tc).abs() <= 1e-12 * norm.abs().max(1.0));
        }
    }
}
