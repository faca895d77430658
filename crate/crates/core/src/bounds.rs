//! Closed-form anti-concentration bounds and the special functions they
//! need.
//!
//! The probability that a non-negative Gaussian quadratic form lands below an
//! ε fraction of its mean obeys a family of explicit bounds: the generic
//! `C·d·ε^{1/d}` template, the Chernoff-route bound `(e·ε)^{1/2}` for the
//! trace-threshold event, and the sharp `(2e·ε)^{1/2}` bound for the mean
//! threshold. The small-ball estimate for a scalar Gaussian is captured by
//! the interval measure h(r, σ; ε), its maximizer r★, and the resulting
//! worst-case envelope ζ(ε) ≤ ε/2.
//!
//! All probability-bound evaluators clip to [0, 1]; a bound above one says
//! nothing and clipping keeps dominance comparisons simple.

use std::f64::consts::{FRAC_2_SQRT_PI, PI};
use std::fmt;

/// Below this, ζ(ε) is returned as its limit 0; above 1 − [`ZETA_HIGH_GUARD`],
/// as its limit 1/2. Keeps the log/erf evaluations away from overflow while
/// matching the analytic endpoint behavior.
const ZETA_LOW_GUARD: f64 = 1e-8;
const ZETA_HIGH_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundsError {
    /// A parameter sits outside its admissible domain.
    Domain(&'static str),
    /// Tr(Q22) ≤ 0 leaves the Chernoff optimizer undefined.
    DegenerateTrace,
}

impl fmt::Display for BoundsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundsError::Domain(what) => write!(f, "domain error: {what}"),
            BoundsError::DegenerateTrace => {
                write!(f, "degenerate instance: trace must be positive")
            }
        }
    }
}

impl std::error::Error for BoundsError {}

/// The scale parameter ε of all small-ball events. Strictly positive;
/// operations derived from the scalar-Gaussian lemma additionally require
/// ε < 1 and check it themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epsilon(f64);

impl Epsilon {
    pub fn new(value: f64) -> Result<Self, BoundsError> {
        if !value.is_finite() || value <= 0.0 {
            return Err(BoundsError::Domain("epsilon must be finite and positive"));
        }
        Ok(Epsilon(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    fn unit(self) -> Result<f64, BoundsError> {
        if self.0 >= 1.0 {
            return Err(BoundsError::Domain("epsilon must be below 1"));
        }
        Ok(self.0)
    }
}

/// Mean and standard deviation of a scalar Gaussian, σ > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    mu: f64,
    sigma: f64,
}

impl GaussianParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self, BoundsError> {
        if !mu.is_finite() || !sigma.is_finite() || sigma <= 0.0 {
            return Err(BoundsError::Domain("sigma must be finite and positive"));
        }
        Ok(GaussianParams { mu, sigma })
    }

    pub fn mu(self) -> f64 {
        self.mu
    }

    pub fn sigma(self) -> f64 {
        self.sigma
    }
}

/// Gaussian error function, |error| ≤ ~1e-13 absolute everywhere.
///
/// Maclaurin series on |x| ≤ 3, Laplace continued fraction for the
/// complement beyond; the split keeps full accuracy where the ζ limits are
/// delicate (arguments near ±0 and deep tails simultaneously).
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    if ax <= 3.0 {
        erf_series(x)
    } else if ax >= 28.0 {
        // erfc underflows past here
        x.signum()
    } else {
        x.signum() * (1.0 - erfc_cf(ax))
    }
}

/// Complementary error function for x > 3 (used by erf's tail branch).
fn erfc_cf(x: f64) -> f64 {
    // √π·e^{x²}·erfc(x) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …)))),
    // evaluated by modified Lentz
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for m in 1..400 {
        let a = 0.5 * m as f64;
        d = x + a * d;
        if d == 0.0 {
            d = tiny;
        }
        c = x + a / c;
        if c == 0.0 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x; // (−1)ᵏ x^{2k+1} / k!
    let mut sum = x;
    for k in 1..200u32 {
        term *= -x2 / k as f64;
        let delta = term / (2 * k + 1) as f64;
        sum += delta;
        if delta.abs() < 1e-17 {
            break;
        }
    }
    FRAC_2_SQRT_PI * sum
}

/// The degree-d anti-concentration template min(1, C·d·ε^{1/d}).
///
/// The universal constant has no canonical value, so C is always
/// caller-supplied.
pub fn cw_bound(eps: Epsilon, d: u32, c: f64) -> Result<f64, BoundsError> {
    if d == 0 {
        return Err(BoundsError::Domain("degree must be positive"));
    }
    if !c.is_finite() || c <= 0.0 {
        return Err(BoundsError::Domain("constant must be finite and positive"));
    }
    Ok((c * d as f64 * eps.value().powf(1.0 / d as f64)).min(1.0))
}

/// The Chernoff-route bound for the trace-threshold event, in both the form
/// the optimizer produces and the simplified headline form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma2Bound {
    /// min(1, (e^{1−ε}·ε)^{1/2}) — what the optimized Chernoff bound yields.
    pub sharp: f64,
    /// min(1, (e·ε)^{1/2}) — the simplified form; always ≥ `sharp`.
    pub simple: f64,
}

pub fn lemma2_bound(eps: Epsilon) -> Lemma2Bound {
    let e = eps.value();
    Lemma2Bound {
        sharp: ((1.0 - e).exp() * e).sqrt().min(1.0),
        simple: (std::f64::consts::E * e).sqrt().min(1.0),
    }
}

/// min(1, (2e·ε)^{1/2}): the anti-concentration bound at the mean threshold.
pub fn theorem2_bound(eps: Epsilon) -> f64 {
    (2.0 * std::f64::consts::E * eps.value()).sqrt().min(1.0)
}

/// The Chernoff rate that optimizes the trace-threshold bound:
/// η★ = (1 − ε) / (2ε·Tr(Q22)).
pub fn chernoff_eta_star(eps: Epsilon, trace: f64) -> Result<f64, BoundsError> {
    let e = eps.unit()?;
    if !trace.is_finite() || trace <= 0.0 {
        return Err(BoundsError::DegenerateTrace);
    }
    Ok((1.0 - e) / (2.0 * e * trace))
}

/// Gaussian measure of the interval [−(1+ε)r/σ, −(1−ε)r/σ]:
/// h(r, σ; ε) = ½[erf(−(1−ε)r/(√2σ)) + erf((1+ε)r/(√2σ))].
///
/// This is the probability that |μ + σg| ≤ ε|μ| at |μ| = r for g ~ N(0,1).
pub fn interval_prob_h(r: f64, sigma: f64, eps: Epsilon) -> Result<f64, BoundsError> {
    let e = eps.unit()?;
    if !r.is_finite() || r <= 0.0 {
        return Err(BoundsError::Domain("r must be finite and positive"));
    }
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(BoundsError::Domain("sigma must be finite and positive"));
    }
    let s = r / (std::f64::consts::SQRT_2 * sigma);
    let v = 0.5 * (erf(-(1.0 - e) * s) + erf((1.0 + e) * s));
    Ok(v.clamp(0.0, 1.0))
}

/// The unique maximizer of r ↦ h(r, σ; ε):
/// r★ = σ·√(log((1+ε)/(1−ε)) / (2ε)).
pub fn r_star(sigma: f64, eps: Epsilon) -> Result<f64, BoundsError> {
    let e = eps.unit()?;
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(BoundsError::Domain("sigma must be finite and positive"));
    }
    Ok(sigma * (log_odds_ratio(e) / (2.0 * e)).sqrt())
}

/// log((1+ε)/(1−ε)) without the cancellation the direct quotient suffers for
/// small ε.
fn log_odds_ratio(e: f64) -> f64 {
    e.ln_1p() - (-e).ln_1p()
}

/// The worst-case interval measure over all (r, σ):
/// ζ(ε) = h(r★, 1, ε). Satisfies 0 < ζ(ε) ≤ ε/2, ζ(0⁺) = 0, ζ(1⁻) = 1/2,
/// and is convex on (0, 1).
pub fn zeta(eps: Epsilon) -> Result<f64, BoundsError> {
    let e = eps.unit()?;
    if e < ZETA_LOW_GUARD {
        return Ok(0.0);
    }
    if e > 1.0 - ZETA_HIGH_GUARD {
        return Ok(0.5);
    }
    let root = (log_odds_ratio(e) / (2.0 * e)).sqrt();
    let s = root / std::f64::consts::SQRT_2;
    Ok(0.5 * (erf(-(1.0 - e) * s) + erf((1.0 + e) * s)))
}

/// The scalar-Gaussian small-ball bound: Pr{|x| ≤ ε|μ|} ≤ ε/2 for
/// x ~ N(μ, σ²) and ε ∈ (0, 1). Returns the bound; the exact probability is
/// [`mean_anticonc_exact`].
pub fn mean_anticonc_bound(_g: GaussianParams, eps: Epsilon) -> Result<f64, BoundsError> {
    Ok(eps.unit()? / 2.0)
}

/// Exact Pr{|x| ≤ ε|μ|} for x ~ N(μ, σ²); zero when μ = 0 (the event
/// {x = 0} carries no mass).
pub fn mean_anticonc_exact(g: GaussianParams, eps: Epsilon) -> Result<f64, BoundsError> {
    eps.unit()?;
    if g.mu == 0.0 {
        return Ok(0.0);
    }
    interval_prob_h(g.mu.abs(), g.sigma, eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps(v: f64) -> Epsilon {
        Epsilon::new(v).unwrap()
    }

    /// Independent series oracle: sums the Maclaurin expansion with its own
    /// loop and stopping rule.
    fn erf_series_oracle(x: f64) -> f64 {
        let mut total = 0.0;
        let mut power = x;
        let mut factorial = 1.0;
        for k in 0..300u32 {
            if k > 0 {
                factorial *= k as f64;
                power *= x * x;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let term = sign * power / (factorial * (2 * k + 1) as f64);
            total += term;
            if term.abs() < 1e-20 {
                break;
            }
        }
        FRAC_2_SQRT_PI * total
    }

    /// Midpoint-rule quadrature of the standard normal density over [a, b].
    fn gaussian_interval_quadrature(a: f64, b: f64) -> f64 {
        let panels = 200_000;
        let h = (b - a) / panels as f64;
        let mut s = 0.0;
        for i in 0..panels {
            let x = a + (i as f64 + 0.5) * h;
            s += (-0.5 * x * x).exp();
        }
        s * h / (2.0 * PI).sqrt()
    }

    #[test]
    fn erf_basics() {
        assert_eq!(erf(0.0), 0.0);
        assert!((erf(6.0) - 1.0).abs() < 1e-12);
        assert!((erf(1.0) - erf_series_oracle(1.0)).abs() < 1e-14);
        // literature anchors
        assert!((erf(1.0) - 0.8427007929497149).abs() < 1e-13);
        assert!((erf(2.0) - 0.9953222650189527).abs() < 1e-13);
        assert!((erf(3.0) - 0.9999779095030014).abs() < 1e-13);
        assert!((erf(0.5) - 0.5204998778130465).abs() < 1e-13);
        // tail branch continuity and accuracy: erfc(3.5) = 7.43098372341e-7
        assert!((erf(3.5) - (1.0 - 7.430983723414128e-7)).abs() < 1e-13);
    }

    #[test]
    fn erf_matches_series_oracle_on_core_range() {
        let mut worst = 0.0f64;
        for i in 0..=600 {
            let x = -3.0 + i as f64 * 0.01;
            let d = (erf(x) - erf_series_oracle(x)).abs();
            worst = worst.max(d);
        }
        assert!(worst <= 1e-12, "worst erf deviation {worst:e}");
    }

    #[test]
    fn erf_odd_monotone_bounded() {
        let mut prev = erf(-8.0);
        for i in 1..=160 {
            let x = -8.0 + i as f64 * 0.1;
            let v = erf(x);
            assert_eq!(erf(-x), -v, "odd symmetry at {x}");
            assert!(v >= prev, "monotonicity at {x}");
            assert!((-1.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn cw_bound_arithmetic() {
        assert_eq!(cw_bound(eps(0.25), 2, 1.0).unwrap(), 1.0);
        assert!((cw_bound(eps(0.01), 1, 1.0).unwrap() - 0.01).abs() < 1e-15);
        assert!((cw_bound(eps(0.0001), 2, 1.0).unwrap() - 0.02).abs() < 1e-15);
        assert!(cw_bound(eps(0.5), 0, 1.0).is_err());
        assert!(cw_bound(eps(0.5), 2, 0.0).is_err());
    }

    #[test]
    fn lemma2_values() {
        let b = lemma2_bound(eps(1.0 / std::f64::consts::E));
        assert!((b.simple - 1.0).abs() < 1e-12);

        let b = lemma2_bound(eps(0.01));
        assert!((b.simple - (0.01 * std::f64::consts::E).sqrt()).abs() < 1e-15);
        assert!((b.simple - 0.1648721).abs() < 1e-6);

        let b = lemma2_bound(eps(1.0));
        assert_eq!(b.sharp, 1.0);
        assert_eq!(b.simple, 1.0);
    }

    #[test]
    fn theorem2_values() {
        let e2 = 2.0 * std::f64::consts::E;
        assert!((theorem2_bound(eps(1.0 / e2)) - 1.0).abs() < 1e-12);
        assert!((theorem2_bound(eps(0.01)) - (e2 * 0.01).sqrt()).abs() < 1e-15);
        assert!((theorem2_bound(eps(0.01)) - 0.2331643982).abs() < 1e-9);
        // 2e·0.02 = e·0.04 ties the two bound families together
        assert_eq!(theorem2_bound(eps(0.02)), lemma2_bound(eps(0.04)).simple);
    }

    #[test]
    fn bound_ordering_below_saturation() {
        for i in 1..=100 {
            let e = i as f64 * (1.0 / (2.0 * std::f64::consts::E)) / 101.0;
            let l2 = lemma2_bound(eps(e));
            let t2 = theorem2_bound(eps(e));
            assert!(l2.sharp <= l2.simple + 1e-15);
            assert!(l2.simple <= t2 + 1e-15);
        }
    }

    #[test]
    fn eta_star_arithmetic() {
        assert!((chernoff_eta_star(eps(1.0 / 3.0), 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((chernoff_eta_star(eps(0.5), 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((chernoff_eta_star(eps(0.1), 10.0).unwrap() - 0.45).abs() < 1e-15);
        assert_eq!(
            chernoff_eta_star(eps(0.5), 0.0).unwrap_err(),
            BoundsError::DegenerateTrace
        );
        assert!(chernoff_eta_star(eps(2.0), 1.0).is_err());
    }

    #[test]
    fn interval_prob_matches_quadrature() {
        for &(r, sigma, e) in &[(1.0, 1.0, 0.5), (1.0, 1.0, 0.01), (2.5, 0.7, 0.3)] {
            let h = interval_prob_h(r, sigma, eps(e)).unwrap();
            let a = -(1.0 + e) * r / sigma;
            let b = -(1.0 - e) * r / sigma;
            let quad = gaussian_interval_quadrature(a, b);
            assert!(
                (h - quad).abs() < 1e-9,
                "h({r},{sigma};{e}) = {h} vs quadrature {quad}"
            );
        }
    }

    #[test]
    fn interval_prob_small_width_limit() {
        // h ≈ 2ε·φ(1) for r = σ = 1 and small ε
        let e = 1e-6;
        let h = interval_prob_h(1.0, 1.0, eps(e)).unwrap();
        let approx = 2.0 * e * (-0.5f64).exp() / (2.0 * PI).sqrt();
        assert!((h - approx).abs() < 1e-3 * approx);
        // vanishing radius drives the measure to zero
        assert!(interval_prob_h(1e-300, 1.0, eps(0.5)).unwrap() < 1e-12);
    }

    #[test]
    fn r_star_limits_and_scaling() {
        // log((1+ε)/(1−ε)) ~ 2ε makes r★ → σ as ε → 0
        assert!((r_star(1.0, eps(1e-9)).unwrap() - 1.0).abs() < 1e-8);
        let base = r_star(1.0, eps(0.3)).unwrap();
        assert!((r_star(2.0, eps(0.3)).unwrap() - 2.0 * base).abs() < 1e-14);
        let v = r_star(1.0, eps(0.5)).unwrap();
        assert!((v - 3.0f64.ln().sqrt()).abs() < 1e-14);
    }

    #[test]
    fn r_star_is_local_max() {
        for &(sigma, e) in &[(1.0, 0.5), (0.3, 0.1), (4.0, 0.9)] {
            let ep = eps(e);
            let rs = r_star(sigma, ep).unwrap();
            let at = interval_prob_h(rs, sigma, ep).unwrap();
            for delta in [-0.01, 0.01] {
                let near = interval_prob_h(rs + delta, sigma, ep).unwrap();
                assert!(at >= near - 1e-15, "r_star not maximal at ({sigma},{e})");
            }
        }
    }

    #[test]
    fn zeta_limits_and_bound() {
        assert_eq!(zeta(eps(1e-12)).unwrap(), 0.0);
        assert_eq!(zeta(eps(1.0 - 1e-14)).unwrap(), 0.5);
        assert!(zeta(eps(1e-8)).unwrap() < 1e-6);
        assert!((zeta(eps(1.0 - 1e-12)).unwrap() - 0.5).abs() < 1e-6);
        for i in 1..100 {
            let e = i as f64 / 100.0;
            let z = zeta(eps(e)).unwrap();
            assert!(z > 0.0 && z <= e / 2.0, "zeta({e}) = {z} out of (0, ε/2]");
        }
    }

    #[test]
    fn zeta_equals_sup_over_r() {
        // grid-maximize h(·, 1, ε) over r ∈ (0, 10]
        let ep = eps(0.5);
        let mut best = 0.0f64;
        for i in 1..=20_000 {
            let r = i as f64 * 10.0 / 20_000.0;
            best = best.max(interval_prob_h(r, 1.0, ep).unwrap());
        }
        let z = zeta(ep).unwrap();
        assert!((z - best).abs() < 1e-7, "zeta {z} vs grid sup {best}");
        assert!(z >= best - 1e-12);
    }

    #[test]
    fn zeta_sigma_invariance() {
        for &sigma in &[0.1, 1.0, 7.5] {
            for &e in &[0.05, 0.5, 0.95] {
                let ep = eps(e);
                let z = zeta(ep).unwrap();
                let h = interval_prob_h(r_star(sigma, ep).unwrap(), sigma, ep).unwrap();
                assert!((z - h).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mean_anticonc_examples() {
        let g = GaussianParams::new(0.0, 1.0).unwrap();
        assert_eq!(mean_anticonc_exact(g, eps(0.5)).unwrap(), 0.0);
        assert!((mean_anticonc_bound(g, eps(0.5)).unwrap() - 0.25).abs() < 1e-15);

        let g = GaussianParams::new(1.0, 1.0).unwrap();
        let exact = mean_anticonc_exact(g, eps(0.5)).unwrap();
        assert_eq!(exact, interval_prob_h(1.0, 1.0, eps(0.5)).unwrap());
        assert!(exact <= 0.25);

        // near ε = 1 the bound approaches 1/2 but never crosses
        let ep = eps(0.999);
        let g = GaussianParams::new(r_star(2.0, ep).unwrap(), 2.0).unwrap();
        assert!(mean_anticonc_exact(g, ep).unwrap() <= 0.4995);
    }

    #[test]
    fn epsilon_validation() {
        assert!(Epsilon::new(0.0).is_err());
        assert!(Epsilon::new(-1.0).is_err());
        assert!(Epsilon::new(f64::NAN).is_err());
        assert!(Epsilon::new(5.0).is_ok()); // >1 allowed where only ε>0 needed
        assert!(zeta(Epsilon::new(5.0).unwrap()).is_err());
        assert!(GaussianParams::new(0.0, 0.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn zeta_below_half_eps(raw in 1e-4f64..0.9999) {
            let z = zeta(eps(raw)).unwrap();
            proptest::prop_assert!(z <= raw / 2.0 + 1e-15);
        }

        #[test]
        fn h_never_beats_zeta(r in 1e-3f64..20.0, sigma in 1e-2f64..10.0, e in 1e-4f64..0.999) {
            let ep = eps(e);
            let h = interval_prob_h(r, sigma, ep).unwrap();
            let z = zeta(ep).unwrap();
            proptest::prop_assert!(h <= z + 1e-12);
        }
    }
}
