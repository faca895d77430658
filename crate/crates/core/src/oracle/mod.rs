//! Ground-truth small-ball probabilities for PSD quadratic forms.
//!
//! A PSD form f(x) = [1; x]ᵀQ[1; x] under x ~ N(0, Iₙ) has the law of a
//! noncentral chi-square mixture c + Σᵢ wᵢ(gᵢ + δᵢ)²: completing the square
//! along each eigen-direction of Q22 yields the weights wᵢ (eigenvalues),
//! offsets δᵢ, and a nonnegative constant c. [`reduce`] performs that
//! reduction, [`cdf_inversion`] evaluates the mixture's CDF by
//! characteristic-function inversion, [`monte_carlo`] estimates the same
//! probability by direct seeded sampling of the form, and
//! [`small_ball_prob`] glues them to the event {f ≤ ε·E f}. The [`fuzz`]
//! harness hunts for violations of the (2e·ε)^{1/2} bound across random
//! instance families.

pub mod fuzz;
mod inversion;
mod montecarlo;

pub use fuzz::{fuzz_check, FuzzConfig, FuzzReport, GeneratorKind};
pub use inversion::{cdf_inversion, INVERSION_TOL_MAX, INVERSION_TOL_MIN};
pub use montecarlo::monte_carlo;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bounds::Epsilon;
use crate::linalg::{self, LinalgError, DEFAULT_PSD_TOL};
use crate::polyform::{expectation, QForm};

/// Eigenvalues at or below this fraction of the largest are treated as the
/// null space of Q22.
pub const NULL_SPACE_CUTOFF_REL: f64 = 1e-10;
/// PSD-ness forces the linear coefficient to vanish on the null space; this
/// is the tolerated residual, relative to the instance scale.
pub const NULL_RESIDUAL_TOL_REL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    /// The assembled matrix failed PSD certification.
    NotPsd { min_eigenvalue: f64 },
    /// The linear coefficient does not vanish on the null space of Q22, so
    /// the instance cannot be a PSD quadratic form.
    InconsistentInstance { residual: f64 },
    /// E f = 0 forces f ≡ 0; the small-ball event is vacuous and every
    /// relative-threshold comparison is meaningless.
    DegenerateInstance,
    /// The mixture has no continuous part; the law is an atom the caller
    /// must handle.
    AtomOnly,
    Domain(&'static str),
    Linalg(LinalgError),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::NotPsd { min_eigenvalue } => {
                write!(f, "not positive semidefinite (min eigenvalue {min_eigenvalue:e})")
            }
            OracleError::InconsistentInstance { residual } => write!(
                f,
                "inconsistent PSD instance: linear residual {residual:e} on the null space"
            ),
            OracleError::DegenerateInstance => {
                write!(f, "degenerate instance: E f = 0")
            }
            OracleError::AtomOnly => write!(f, "distribution is a pure atom"),
            OracleError::Domain(what) => write!(f, "domain error: {what}"),
            OracleError::Linalg(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for OracleError {}

impl From<LinalgError> for OracleError {
    fn from(e: LinalgError) -> Self {
        OracleError::Linalg(e)
    }
}

/// One completed-square direction: weight·(uᵀx + offset)².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralTerm {
    /// Eigenvalue of Q22 along this direction; strictly positive.
    pub weight: f64,
    /// Noncentrality offset δ.
    pub offset: f64,
}

/// Reduced representation f(x) = c + Σᵢ wᵢ(uᵢᵀx + δᵢ)² of a PSD quadratic
/// form — the noncentral chi-square mixture the oracles work on.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralForm {
    c: f64,
    terms: Vec<SpectralTerm>,
    /// Unit directions uᵢ, one row per term.
    basis: Vec<Vec<f64>>,
    dim: usize,
}

impl SpectralForm {
    /// A bare mixture with canonical directions, for working directly with
    /// distributions rather than reduced quadratic forms.
    pub fn mixture(c: f64, terms: Vec<SpectralTerm>) -> Self {
        let dim = terms.len();
        let basis = (0..dim)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                e
            })
            .collect();
        SpectralForm {
            c,
            terms,
            basis,
            dim,
        }
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    pub fn terms(&self) -> &[SpectralTerm] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Mean of the mixture: c + Σ wᵢ(1 + δᵢ²).
    pub fn mean(&self) -> f64 {
        self.c
            + self
                .terms
                .iter()
                .map(|t| t.weight * (1.0 + t.offset * t.offset))
                .sum::<f64>()
    }

    /// c + Σᵢ wᵢ(uᵢᵀx + δᵢ)², the reconstruction of f at x.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "point dimension mismatch");
        let mut v = self.c;
        for (term, u) in self.terms.iter().zip(&self.basis) {
            let proj: f64 = u.iter().zip(x).map(|(a, b)| a * b).sum();
            let shifted = proj + term.offset;
            v += term.weight * shifted * shifted;
        }
        v
    }
}

/// Completes the square along every eigen-direction of Q22, turning a PSD
/// form into its noncentral chi-square mixture.
///
/// Directions whose eigenvalue falls at or below
/// [`NULL_SPACE_CUTOFF_REL`]·max eigenvalue are dropped after checking that
/// the linear coefficient vanishes there (PSD-ness puts q12 in the range of
/// Q22); a residual above [`NULL_RESIDUAL_TOL_REL`]·scale is reported as an
/// inconsistent instance.
pub fn reduce(q: &QForm) -> Result<SpectralForm, OracleError> {
    let check = linalg::is_psd(&q.assemble(), DEFAULT_PSD_TOL)?;
    if !check.psd {
        return Err(OracleError::NotPsd {
            min_eigenvalue: check.min_eigenvalue,
        });
    }

    let scale = q.scale();
    let eig = linalg::sym_eigen(q.q22())?;
    let max_ev = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = NULL_SPACE_CUTOFF_REL * max_ev;

    let mut terms = Vec::new();
    let mut basis = Vec::new();
    let mut c = q.q11();
    let mut null_residual_sq = 0.0;
    for k in 0..q.dim() {
        let ev = eig.eigenvalues[k];
        let b = eig.col_dot(k, q.q12());
        if ev > cutoff {
            // w(y + b/w)² − b²/w absorbs the 2by cross term
            terms.push(SpectralTerm {
                weight: ev,
                offset: b / ev,
            });
            basis.push(eig.column(k));
            c -= b * b / ev;
        } else {
            null_residual_sq += b * b;
        }
    }
    let residual = null_residual_sq.sqrt();
    if residual > NULL_RESIDUAL_TOL_REL * scale {
        return Err(OracleError::InconsistentInstance { residual });
    }

    Ok(SpectralForm {
        c,
        terms,
        basis,
        dim: q.dim(),
    })
}

/// How a probability was estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateMethod {
    Inversion,
    MonteCarlo,
}

/// A probability with two-sided uncertainty: a 99% confidence interval for
/// Monte Carlo, a ±error band for inversion (atoms are exact, width zero).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbEstimate {
    pub p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: EstimateMethod,
}

/// Which oracle evaluates a small-ball probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbMethod {
    /// Spectral reduction plus characteristic-function inversion at the
    /// given absolute error target.
    Inversion { tol: f64 },
    /// Direct seeded sampling of the quadratic form.
    MonteCarlo { samples: usize, seed: u64 },
}

/// P{f(x) ≤ ε·E f(x)} for the PSD form q.
///
/// The mean threshold uses E f = q11 + Tr(Q22); instances with E f = 0 are
/// rejected as degenerate (f ≡ 0 makes the event vacuous). When the reduced
/// mixture has no continuous part the law is a point mass at c and the
/// comparison is resolved exactly with the non-strict event {f ≤ t}.
pub fn small_ball_prob(
    q: &QForm,
    eps: Epsilon,
    method: ProbMethod,
) -> Result<ProbEstimate, OracleError> {
    let mean = expectation(q);
    if mean <= 0.0 {
        return Err(OracleError::DegenerateInstance);
    }
    let threshold = eps.value() * mean;
    match method {
        ProbMethod::Inversion { tol } => {
            let form = reduce(q)?;
            if form.terms().is_empty() {
                return Ok(atom_estimate(form.constant(), threshold));
            }
            cdf_inversion(&form, threshold, tol)
        }
        ProbMethod::MonteCarlo { samples, seed } => monte_carlo(q, threshold, samples, seed),
    }
}

/// Exact resolution of a point mass at c against a non-strict threshold.
pub(crate) fn atom_estimate(c: f64, threshold: f64) -> ProbEstimate {
    let p = if c <= threshold { 1.0 } else { 0.0 };
    ProbEstimate {
        p,
        ci_low: p,
        ci_high: p,
        method: EstimateMethod::Inversion,
    }
}
