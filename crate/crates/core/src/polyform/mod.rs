//! Degree-two polynomials and their quadratic-form representation.
//!
//! A non-negative degree-two polynomial f on Rⁿ can be written as
//!
//! ```text
//! f(x) = [1; x]ᵀ [[q11, q12ᵀ], [q12, Q22]] [1; x]
//! ```
//!
//! with the (n+1)×(n+1) block matrix symmetric positive semidefinite. This
//! module parses polynomial text, converts coefficients to that form,
//! certifies non-negativity through the PSD check, and evaluates the Gaussian
//! expectation E f(x) = q11 + Tr(Q22) for x ~ N(0, Iₙ).

mod parser;

pub use parser::{ParseError, ParseErrorKind};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::{self, PsdCheck, SymMat};

/// Maximum tolerated relative asymmetry when loading a quadratic block from
/// JSON; anything below is silently symmetrized.
pub const JSON_ASYMMETRY_TOL: f64 = 1e-12;

/// A polynomial of total degree ≤ 2 in variables x1..xn, kept as raw
/// coefficients: f(x) = c0 + linᵀx + xᵀ·quad·x.
///
/// The coefficient a of a cross term xᵢxⱼ (i ≠ j) is stored split as
/// quad\[i\]\[j\] = quad\[j\]\[i\] = a/2 so the matrix form is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2 {
    pub(crate) n: usize,
    pub(crate) c0: f64,
    pub(crate) lin: Vec<f64>,
    pub(crate) quad: SymMat,
}

impl Poly2 {
    pub fn new(c0: f64, lin: Vec<f64>, quad: SymMat) -> Self {
        assert_eq!(lin.len(), quad.dim(), "linear and quadratic sizes differ");
        Poly2 {
            n: lin.len(),
            c0,
            lin,
            quad,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn constant(&self) -> f64 {
        self.c0
    }

    pub fn linear(&self) -> &[f64] {
        &self.lin
    }

    pub fn quadratic(&self) -> &SymMat {
        &self.quad
    }

    /// Direct coefficient-wise evaluation, independent of the matrix form.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n, "point dimension mismatch");
        let mut v = self.c0;
        for (li, xi) in self.lin.iter().zip(x) {
            v += li * xi;
        }
        for i in 0..self.n {
            for j in 0..self.n {
                v += self.quad.get(i, j) * x[i] * x[j];
            }
        }
        v
    }
}

/// Parses a degree-≤2 polynomial in the `x1..xN` grammar; the dimension is
/// the highest variable index mentioned.
pub fn parse_poly(text: &str) -> Result<Poly2, ParseError> {
    parser::parse(text)
}

impl fmt::Display for Poly2 {
    /// Canonical printer: constant, then linear terms by index, then
    /// quadratic terms by (i, j); `parse_poly` round-trips its output,
    /// including the dimension (a trailing `0*xN` pins variables that carry
    /// no coefficient).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms: Vec<(f64, String)> = Vec::new();
        if self.c0 != 0.0 {
            terms.push((self.c0, String::new()));
        }
        for (i, &c) in self.lin.iter().enumerate() {
            if c != 0.0 {
                terms.push((c, format!("x{}", i + 1)));
            }
        }
        for i in 0..self.n {
            for j in i..self.n {
                let q = self.quad.get(i, j);
                if q != 0.0 {
                    if i == j {
                        terms.push((q, format!("x{}^2", i + 1)));
                    } else {
                        terms.push((2.0 * q, format!("x{}*x{}", i + 1, j + 1)));
                    }
                }
            }
        }

        let highest_mentioned = terms
            .iter()
            .filter_map(|(_, m)| {
                m.rsplit('x')
                    .next()
                    .and_then(|s| s.trim_end_matches("^2").parse::<usize>().ok())
            })
            .max()
            .unwrap_or(0);
        if self.n > highest_mentioned {
            terms.push((0.0, format!("x{}", self.n)));
        }

        if terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (c, mono)) in terms.iter().enumerate() {
            let mag = c.abs();
            if k == 0 {
                if *c < 0.0 {
                    write!(f, "-")?;
                }
            } else if *c < 0.0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if mono.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == 1.0 {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{mag}*{mono}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QFormError {
    /// JSON shape is inconsistent (q12 length or q22 dimensions vs n).
    ShapeMismatch(String),
    /// q22 asymmetry above [`JSON_ASYMMETRY_TOL`] (relative).
    Asymmetric { max_abs_asymmetry: f64 },
    NonFinite,
    /// Evaluation point has the wrong dimension.
    DimensionMismatch { expected: usize, got: usize },
}

impl fmt::Display for QFormError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QFormError::ShapeMismatch(w) => write!(f, "shape mismatch: {w}"),
            QFormError::Asymmetric { max_abs_asymmetry } => {
                write!(f, "q22 is asymmetric (max |a_ij - a_ji| = {max_abs_asymmetry:e})")
            }
            QFormError::NonFinite => write!(f, "non-finite coefficient"),
            QFormError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
        }
    }
}

impl std::error::Error for QFormError {}

/// Wire format: `{"n": .., "q11": .., "q12": [..], "q22": [[..]]}` with q22
/// row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct QFormWire {
    n: usize,
    q11: f64,
    q12: Vec<f64>,
    q22: Vec<Vec<f64>>,
}

/// The quadratic-form representation of a degree-two polynomial: the blocks
/// of the (n+1)×(n+1) matrix [[q11, q12ᵀ], [q12, Q22]].
///
/// Construction does not enforce positive semidefiniteness — fuzzing wants to
/// probe near-PSD inputs — use [`validate_nonneg`] to certify it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QFormWire", into = "QFormWire")]
pub struct QForm {
    n: usize,
    q11: f64,
    q12: Vec<f64>,
    q22: SymMat,
}

impl TryFrom<QFormWire> for QForm {
    type Error = QFormError;

    fn try_from(w: QFormWire) -> Result<Self, QFormError> {
        if w.q12.len() != w.n {
            return Err(QFormError::ShapeMismatch(format!(
                "q12 has length {} but n = {}",
                w.q12.len(),
                w.n
            )));
        }
        if w.q22.len() != w.n || w.q22.iter().any(|r| r.len() != w.n) {
            return Err(QFormError::ShapeMismatch(format!(
                "q22 must be {0}x{0}",
                w.n
            )));
        }
        let mut flat = Vec::with_capacity(w.n * w.n);
        for row in &w.q22 {
            flat.extend_from_slice(row);
        }
        if !w.q11.is_finite()
            || w.q12.iter().any(|v| !v.is_finite())
            || flat.iter().any(|v| !v.is_finite())
        {
            return Err(QFormError::NonFinite);
        }
        let scale = 1.0 + flat.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut asym = 0.0f64;
        for i in 0..w.n {
            for j in 0..w.n {
                asym = asym.max((flat[i * w.n + j] - flat[j * w.n + i]).abs());
            }
        }
        if asym > JSON_ASYMMETRY_TOL * scale {
            return Err(QFormError::Asymmetric {
                max_abs_asymmetry: asym,
            });
        }
        Ok(QForm {
            n: w.n,
            q11: w.q11,
            q12: w.q12,
            q22: SymMat::from_dense(w.n, &flat),
        })
    }
}

impl From<QForm> for QFormWire {
    fn from(q: QForm) -> QFormWire {
        QFormWire {
            n: q.n,
            q11: q.q11,
            q12: q.q12.clone(),
            q22: q.q22.rows(),
        }
    }
}

impl QForm {
    pub fn new(q11: f64, q12: Vec<f64>, q22: SymMat) -> Self {
        assert_eq!(q12.len(), q22.dim(), "q12 and Q22 sizes differ");
        QForm {
            n: q12.len(),
            q11,
            q12,
            q22,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn q11(&self) -> f64 {
        self.q11
    }

    pub fn q12(&self) -> &[f64] {
        &self.q12
    }

    pub fn q22(&self) -> &SymMat {
        &self.q22
    }

    /// The full (n+1)×(n+1) symmetric matrix.
    pub fn assemble(&self) -> SymMat {
        let n = self.n;
        let mut m = SymMat::zeros(n + 1);
        m.set(0, 0, self.q11);
        for j in 0..n {
            m.set(0, j + 1, self.q12[j]);
        }
        for i in 0..n {
            for j in i..n {
                m.set(i + 1, j + 1, self.q22.get(i, j));
            }
        }
        m
    }

    /// 1 + the largest block entry in magnitude; the reference scale for the
    /// crate's relative tolerances.
    pub fn scale(&self) -> f64 {
        let mut s = self.q11.abs();
        for v in &self.q12 {
            s = s.max(v.abs());
        }
        1.0 + s.max(self.q22.max_abs())
    }

    /// cQ for c > 0, preserving semidefiniteness.
    pub fn scaled(&self, c: f64) -> QForm {
        QForm {
            n: self.n,
            q11: c * self.q11,
            q12: self.q12.iter().map(|v| c * v).collect(),
            q22: self.q22.scaled(c),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("QForm serializes")
    }

    pub fn from_json(text: &str) -> Result<QForm, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// q11 + 2·q12ᵀx + xᵀQ22x.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64, QFormError> {
        if x.len() != self.n {
            return Err(QFormError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Hot-loop variant of [`evaluate`] for callers that already sized x.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        let mut v = self.q11;
        for i in 0..self.n {
            let xi = x[i];
            v += 2.0 * self.q12[i] * xi;
            v += self.q22.get(i, i) * xi * xi;
            for j in (i + 1)..self.n {
                v += 2.0 * self.q22.get(i, j) * xi * x[j];
            }
        }
        v
    }
}

/// Coefficient-to-matrix conversion: q11 = c0, q12 = lin/2, Q22 = quad.
pub fn to_qform(p: &Poly2) -> QForm {
    QForm {
        n: p.n,
        q11: p.c0,
        q12: p.lin.iter().map(|v| 0.5 * v).collect(),
        q22: p.quad.clone(),
    }
}

/// Certifies non-negativity of the polynomial by testing the assembled block
/// matrix for positive semidefiniteness; the certificate is its minimum
/// eigenvalue. Advisory by design: construction never enforces it.
pub fn validate_nonneg(q: &QForm, tol: f64) -> Result<PsdCheck, linalg::LinalgError> {
    linalg::is_psd(&q.assemble(), tol)
}

/// E f(x) = q11 + Tr(Q22) under x ~ N(0, Iₙ).
pub fn expectation(q: &QForm) -> f64 {
    q.q11 + q.q22.trace()
}
