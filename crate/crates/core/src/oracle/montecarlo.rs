//! Seeded Monte Carlo estimation of small-ball probabilities.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{EstimateMethod, OracleError, ProbEstimate};
use crate::polyform::QForm;

/// Φ⁻¹(0.995): two-sided 99% coverage.
const Z_99: f64 = 2.5758293035489004;

/// Empirical frequency of f(x) ≤ threshold over seeded standard-normal
/// draws, with a 99% Wilson score interval. Deterministic for a fixed
/// (seed, samples) pair.
///
/// Samples the quadratic form directly — no spectral reduction — so this
/// estimator shares no code path with the inversion oracle.
pub fn monte_carlo(
    q: &QForm,
    threshold: f64,
    samples: usize,
    seed: u64,
) -> Result<ProbEstimate, OracleError> {
    if samples < 1000 {
        return Err(OracleError::Domain("at least 1000 samples required"));
    }
    if !threshold.is_finite() {
        return Err(OracleError::Domain("threshold must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = q.dim();
    let mut x = vec![0.0f64; n];
    let mut hits = 0usize;
    for _ in 0..samples {
        for xi in &mut x {
            *xi = rng.sample(StandardNormal);
        }
        if q.eval_unchecked(&x) <= threshold {
            hits += 1;
        }
    }
    Ok(wilson_interval(hits, samples))
}

fn wilson_interval(hits: usize, samples: usize) -> ProbEstimate {
    let n = samples as f64;
    let p = hits as f64 / n;
    let z2 = Z_99 * Z_99;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_99 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ProbEstimate {
        p,
        ci_low: (center - half).clamp(0.0, 1.0).min(p),
        ci_high: (center + half).clamp(0.0, 1.0).max(p),
        method: EstimateMethod::MonteCarlo,
    }
}
