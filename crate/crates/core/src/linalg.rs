//! Small dense symmetric linear algebra: Jacobi eigendecomposition, Cholesky
//! solves, positive-semidefinite certification, and Schur complements.
//!
//! Everything here targets the small dimensions of the rest of the crate
//! (n ≲ 64); the Jacobi eigensolver trades speed for simplicity and accuracy
//! at those sizes.

use std::fmt;

/// Relative tolerance used by [`is_psd`] when the caller has no opinion.
pub const DEFAULT_PSD_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    /// An input matrix or vector contains NaN or infinity.
    NonFinite,
    /// Vector length does not match the matrix dimension.
    DimensionMismatch { expected: usize, got: usize },
    /// Cholesky found a non-positive pivot: the matrix is not positive
    /// definite (this also covers singular shifted blocks).
    NotPositiveDefinite { pivot: usize },
    /// The Jacobi sweeps did not reach the off-diagonal tolerance.
    NoConvergence,
    /// A ridge parameter that must be strictly positive was not.
    NonPositiveRidge,
    /// Corner Schur complement needs q11 + ridge > 0.
    NonPositiveCorner,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::NonFinite => write!(f, "input contains non-finite entries"),
            LinalgError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            LinalgError::NotPositiveDefinite { pivot } => {
                write!(f, "matrix is not positive definite (pivot {pivot})")
            }
            LinalgError::NoConvergence => write!(f, "Jacobi iteration did not converge"),
            LinalgError::NonPositiveRidge => write!(f, "ridge must be strictly positive"),
            LinalgError::NonPositiveCorner => write!(f, "q11 + ridge must be strictly positive"),
        }
    }
}

impl std::error::Error for LinalgError {}

/// A symmetric n×n real matrix stored as a packed upper triangle, so symmetry
/// holds by construction. `n = 0` denotes the empty matrix (the quadratic
/// block of a constant polynomial).
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat {
    n: usize,
    // row-major packed upper triangle: entry (i, j) with i ≤ j at
    // i*n - i*(i-1)/2 + (j - i)
    data: Vec<f64>,
}

impl SymMat {
    pub fn zeros(n: usize) -> Self {
        SymMat {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    /// Build from a full row-major dense matrix, averaging the two triangles.
    /// Callers that care about the asymmetry magnitude should check it first
    /// (see [`SymMat::max_asymmetry`]-style checks at the load sites).
    pub fn from_dense(n: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), n * n, "dense data must be n*n");
        let mut m = SymMat::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, 0.5 * (rows[i * n + j] + rows[j * n + i]));
            }
        }
        m
    }

    /// Build from explicit rows; panics if the slice shapes are off.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut flat = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "rows must form a square matrix");
            flat.extend_from_slice(r);
        }
        SymMat::from_dense(n, &flat)
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = SymMat::zeros(entries.len());
        for (i, &d) in entries.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SymMat::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.n);
        i * (2 * self.n - i + 1) / 2 + (j - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.data[self.idx(a, b)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let k = self.idx(a, b);
        self.data[k] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let k = self.idx(a, b);
        self.data[k] += v;
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    pub fn frob_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.get(i, j);
                s += v * v;
            }
        }
        s.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// y = M·x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for j in 0..self.n {
                acc += self.get(i, j) * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// Full row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                d[i * self.n + j] = self.get(i, j);
            }
        }
        d
    }

    /// M + s·I
    pub fn shifted(&self, s: f64) -> SymMat {
        let mut m = self.clone();
        for i in 0..self.n {
            m.add(i, i, s);
        }
        m
    }

    pub fn scaled(&self, s: f64) -> SymMat {
        let mut m = self.clone();
        for v in &mut m.data {
            *v *= s;
        }
        m
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// Eigendecomposition M = B·diag(λ)·Bᵀ with eigenvalues sorted descending
/// (ties keep the order the Jacobi sweep produced) and orthonormal columns.
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    pub eigenvalues: Vec<f64>,
    /// Row-major n×n; column k is the eigenvector for `eigenvalues[k]`.
    basis: Vec<f64>,
    n: usize,
}

impl EigenDecomp {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn basis_entry(&self, i: usize, k: usize) -> f64 {
        self.basis[i * self.n + k]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.basis_entry(i, k)).collect()
    }

    /// uₖᵀ·x for eigenvector column k.
    pub fn col_dot(&self, k: usize, x: &[f64]) -> f64 {
        (0..self.n).map(|i| self.basis_entry(i, k) * x[i]).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        // sorted descending, so the minimum sits last; the empty matrix has
        // every eigenvalue statement vacuously true
        self.eigenvalues.last().copied().unwrap_or(f64::INFINITY)
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    /// B·diag(λ)·Bᵀ, for reconstruction checks.
    pub fn reconstruct(&self) -> SymMat {
        let n = self.n;
        let mut m = SymMat::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += self.basis_entry(i, k) * self.eigenvalues[k] * self.basis_entry(j, k);
                }
                m.set(i, j, acc);
            }
        }
        m
    }
}

/// Jacobi eigendecomposition with cyclic sweeps. Converges when the
/// off-diagonal Frobenius norm drops below 1e-14·‖M‖_F (at most 100 sweeps).
pub fn sym_eigen(m: &SymMat) -> Result<EigenDecomp, LinalgError> {
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = m.dim();
    if n == 0 {
        return Ok(EigenDecomp {
            eigenvalues: Vec::new(),
            basis: Vec::new(),
            n: 0,
        });
    }

    let mut a = m.to_dense();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let fro = m.frob_norm();
    let tol = JACOBI_REL_TOL * fro;

    let mut converged = fro == 0.0 || n == 1;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() <= tol {
            converged = true;
            break;
        }

        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = 0.5 * (a[q * n + q] - a[p * n + p]) / apq;
                let t = if theta.is_finite() {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (theta * theta + 1.0).sqrt())
                } else {
                    // overflow in theta means apq is negligible next to the
                    // diagonal gap; the rotation angle is ~1/(2 theta)
                    0.5 / theta
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                let app = a[p * n + p];
                let aqq = a[q * n + q];
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;

                for k in 0..n {
                    if k != p && k != q {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        let new_kp = akp - s * (akq + tau * akp);
                        let new_kq = akq + s * (akp - tau * akq);
                        a[k * n + p] = new_kp;
                        a[p * n + k] = new_kp;
                        a[k * n + q] = new_kq;
                        a[q * n + k] = new_kq;
                    }
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp - s * (vkq + tau * vkp);
                    v[k * n + q] = vkq + s * (vkp - tau * vkq);
                }
            }
        }
    }

    if !converged {
        // final check after the last sweep
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() > tol {
            return Err(LinalgError::NoConvergence);
        }
    }

    // sort descending; stable sort keeps ties in sweep order
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[j * n + j]
            .partial_cmp(&a[i * n + i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let eigenvalues: Vec<f64> = order.iter().map(|&k| a[k * n + k]).collect();
    let mut basis = vec![0.0; n * n];
    for (new_k, &old_k) in order.iter().enumerate() {
        for i in 0..n {
            basis[i * n + new_k] = v[i * n + old_k];
        }
    }

    Ok(EigenDecomp {
        eigenvalues,
        basis,
        n,
    })
}

/// Outcome of a positive-semidefiniteness test: the verdict plus the minimum
/// eigenvalue as the certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdCheck {
    pub psd: bool,
    pub min_eigenvalue: f64,
}

/// Certifies M ⪰ 0 up to a relative tolerance: passes iff
/// λ_min ≥ −tol·(1 + max|λ|). The relative form absorbs the roundoff carried
/// by Gram-constructed inputs.
pub fn is_psd(m: &SymMat, tol: f64) -> Result<PsdCheck, LinalgError> {
    let eig = sym_eigen(m)?;
    let min = eig.min_eigenvalue();
    let scale = 1.0 + eig.max_abs_eigenvalue();
    Ok(PsdCheck {
        psd: min >= -tol * scale,
        min_eigenvalue: min,
    })
}

/// Solves M·x = b for symmetric positive definite M by Cholesky.
pub fn solve_spd(m: &SymMat, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = m.dim();
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    if !m.is_finite() || b.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    // lower-triangular factor, row-major
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = m.get(i, j);
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return Err(LinalgError::NotPositiveDefinite { pivot: i });
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }

    // forward: L·y = b
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    // backward: Lᵀ·x = y
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    Ok(x)
}

/// Which block of [[q11, q12ᵀ], [q12, Q22]] receives the ridge before taking
/// the Schur complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RidgeBlock {
    /// Ridge on Q22: returns q11 − q12ᵀ(Q22 + ridge·I)⁻¹q12.
    Lower,
    /// Ridge on q11: returns the minimum eigenvalue of
    /// Q22 − q12·q12ᵀ/(q11 + ridge), certifying its semidefiniteness.
    Corner,
}

/// Schur-complement value of the ridged block matrix. For a PSD block matrix
/// both variants are nonnegative (up to roundoff), which is the workhorse
/// inequality behind the Laplace-transform bound and the completing-the-square
/// step.
pub fn schur_value(
    q11: f64,
    q12: &[f64],
    q22: &SymMat,
    ridge: f64,
    on: RidgeBlock,
) -> Result<f64, LinalgError> {
    if !(ridge > 0.0) || !ridge.is_finite() {
        return Err(LinalgError::NonPositiveRidge);
    }
    if q12.len() != q22.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: q22.dim(),
            got: q12.len(),
        });
    }
    if !q11.is_finite() || q12.iter().any(|v| !v.is_finite()) || !q22.is_finite() {
        return Err(LinalgError::NonFinite);
    }

    match on {
        RidgeBlock::Lower => {
            if q22.dim() == 0 {
                return Ok(q11);
            }
            let shifted = q22.shifted(ridge);
            let x = solve_spd(&shifted, q12)?;
            let quad: f64 = q12.iter().zip(&x).map(|(a, b)| a * b).sum();
            Ok(q11 - quad)
        }
        RidgeBlock::Corner => {
            let denom = q11 + ridge;
            if !(denom > 0.0) {
                return Err(LinalgError::NonPositiveCorner);
            }
            let n = q22.dim();
            let mut s = q22.clone();
            for i in 0..n {
                for j in i..n {
                    s.add(i, j, -q12[i] * q12[j] / denom);
                }
            }
            Ok(sym_eigen(&s)?.min_eigenvalue())
        }
    }
}
