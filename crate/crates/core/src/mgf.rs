//! The exact Laplace transform of a PSD quadratic form under N(0, Iₙ), its
//! determinant upper bound, the det–trace inequality, and the Chernoff
//! objective built from them.
//!
//! For Q = [[q11, q12ᵀ], [q12, Q22]] PSD and λ > 0:
//!
//! ```text
//! E exp(−λ·f(x)) = det(Iₙ + 2λQ22)^{−1/2} · exp(−λ·[q11 − q12ᵀ(Q22 + (2λ)⁻¹Iₙ)⁻¹q12])
//! ```
//!
//! The bracketed Schur term is nonnegative because it is the Schur complement
//! of the PSD block matrix ridged by (2λ)⁻¹ on its lower block, so dropping
//! the exponential gives the determinant upper bound.

use std::fmt;

use crate::bounds::Epsilon;
use crate::linalg::{self, LinalgError, SymMat};
use crate::polyform::QForm;

#[derive(Debug, Clone, PartialEq)]
pub enum MgfError {
    /// λ (or η) outside its domain.
    Domain(&'static str),
    /// Tr(Q22) = 0 leaves the Chernoff comparison meaningless.
    DegenerateTrace,
    /// A determinant factor 1 + 2λ·eig went non-positive: the input was not
    /// PSD and the transform is undefined there.
    NotPositiveSemidefinite { factor: f64 },
    Linalg(LinalgError),
}

impl fmt::Display for MgfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MgfError::Domain(what) => write!(f, "domain error: {what}"),
            MgfError::DegenerateTrace => write!(f, "degenerate instance: Tr(Q22) = 0"),
            MgfError::NotPositiveSemidefinite { factor } => {
                write!(f, "transform undefined: determinant factor {factor} ≤ 0")
            }
            MgfError::Linalg(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for MgfError {}

impl From<LinalgError> for MgfError {
    fn from(e: LinalgError) -> Self {
        MgfError::Linalg(e)
    }
}

/// One evaluation of the Laplace transform at rate λ.
///
/// Invariants (for PSD input): 0 < exact ≤ upper, and
/// schur_term ≥ −1e-9·scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceEval {
    pub lambda: f64,
    /// E exp(−λf) computed from the closed form.
    pub exact: f64,
    /// det(Iₙ + 2λQ22)^{−1/2}.
    pub upper: f64,
    /// q11 − q12ᵀ(Q22 + (2λ)⁻¹Iₙ)⁻¹q12, the exponent's Schur complement.
    pub schur_term: f64,
}

/// ½·log det(Iₙ + 2λQ22) via the eigenvalues of Q22, kept in log space so
/// λ sweeps across decades cannot overflow the determinant.
fn half_log_det(q22: &SymMat, lambda: f64) -> Result<f64, MgfError> {
    let eig = linalg::sym_eigen(q22)?;
    let mut acc = 0.0;
    for &ev in &eig.eigenvalues {
        let factor = 2.0 * lambda * ev;
        if factor <= -1.0 {
            return Err(MgfError::NotPositiveSemidefinite {
                factor: 1.0 + factor,
            });
        }
        acc += factor.ln_1p();
    }
    Ok(0.5 * acc)
}

fn check_lambda(lambda: f64) -> Result<(), MgfError> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(MgfError::Domain("lambda must be finite and nonnegative"));
    }
    Ok(())
}

/// Exact transform E exp(−λf) for a PSD quadratic form.
///
/// The caller is expected to have validated positive semidefiniteness;
/// non-PSD inputs surface as `NotPositiveSemidefinite` or Cholesky failures
/// where the formula stops making sense. λ = 0 is admitted and returns 1
/// exactly (transform continuity), with the Schur term at its λ→0 limit q11.
pub fn exact_laplace(q: &QForm, lambda: f64) -> Result<LaplaceEval, MgfError> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(LaplaceEval {
            lambda,
            exact: 1.0,
            upper: 1.0,
            schur_term: q.q11(),
        });
    }
    let hld = half_log_det(q.q22(), lambda)?;
    let schur = if q.dim() == 0 {
        q.q11()
    } else {
        let shifted = q.q22().shifted(1.0 / (2.0 * lambda));
        let x = linalg::solve_spd(&shifted, q.q12())?;
        q.q11() - q.q12().iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()
    };
    Ok(LaplaceEval {
        lambda,
        exact: (-hld - lambda * schur).exp(),
        upper: (-hld).exp(),
        schur_term: schur,
    })
}

/// det(Iₙ + 2λQ22)^{−1/2}, the transform's determinant upper bound.
pub fn laplace_upper(q: &QForm, lambda: f64) -> Result<f64, MgfError> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(1.0);
    }
    Ok((-half_log_det(q.q22(), lambda)?).exp())
}

/// det(Iₙ + 2ηQ22) − (1 + 2η·Tr(Q22)).
///
/// Nonnegative for PSD Q22 since the determinant expands as Π(1 + 2ηλᵢ) over
/// nonnegative eigenvalues; exactly zero in dimension one. The caller owns
/// the PSD precondition.
pub fn det_trace_gap(q22: &SymMat, eta: f64) -> Result<f64, MgfError> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(MgfError::Domain("eta must be finite and positive"));
    }
    let eig = linalg::sym_eigen(q22)?;
    let mut det = 1.0;
    let mut trace = 0.0;
    for &ev in &eig.eigenvalues {
        det *= 1.0 + 2.0 * eta * ev;
        trace += ev;
    }
    Ok(det - (1.0 + 2.0 * eta * trace))
}

/// The Chernoff objective exp(η·ε·Tr(Q22))·E exp(−η·f), with the expectation
/// taken from the exact transform (`use_exact`) or its determinant bound.
///
/// At η = η★ = (1−ε)/(2ε·Tr(Q22)) the non-exact variant is at most
/// (e^{1−ε}·ε)^{1/2}.
pub fn chernoff_objective(
    q: &QForm,
    eps: Epsilon,
    eta: f64,
    use_exact: bool,
) -> Result<f64, MgfError> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(MgfError::Domain("eta must be finite and positive"));
    }
    let trace = q.q22().trace();
    if trace <= 0.0 {
        return Err(MgfError::DegenerateTrace);
    }
    let le = exact_laplace(q, eta)?;
    let mut log_obj = eta * eps.value() * trace - half_log_det(q.q22(), eta)?;
    if use_exact {
        log_obj -= eta * le.schur_term;
    }
    Ok(log_obj.exp())
}
