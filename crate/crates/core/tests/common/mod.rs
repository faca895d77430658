//! Test-side oracles, independent of the library's implementation paths.

#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use anticonc::linalg::SymMat;
use anticonc::QForm;

/// Maclaurin-series error function, summed with its own loop and stopping
/// rule: the reference for the library's erf.
pub fn erf_series_oracle(x: f64) -> f64 {
    let mut total = 0.0;
    let mut power = x;
    let mut factorial = 1.0;
    for k in 0..400u32 {
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
    std::f64::consts::FRAC_2_SQRT_PI * total
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
                + rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 40)
}

/// Gaussian measure of [a, b] by quadrature of the density.
pub fn gaussian_interval(a: f64, b: f64, tol: f64) -> f64 {
    let density = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    simpson(&density, a, b, tol)
}

/// A dense PSD instance AᵀA over the assembled (n+1) block.
pub fn gram_qform(rng: &mut ChaCha8Rng, n: usize) -> QForm {
    let dim = n + 1;
    let a: Vec<f64> = (0..dim * dim).map(|_| rng.sample(StandardNormal)).collect();
    let mut m = SymMat::zeros(dim);
    for i in 0..dim {
        for j in i..dim {
            let mut acc = 0.0;
            for r in 0..dim {
                acc += a[r * dim + i] * a[r * dim + j];
            }
            m.set(i, j, acc);
        }
    }
    let mut q22 = SymMat::zeros(n);
    for i in 0..n {
        for j in i..n {
            q22.set(i, j, m.get(i + 1, j + 1));
        }
    }
    QForm::new(m.get(0, 0), (1..dim).map(|j| m.get(0, j)).collect(), q22)
}

/// Standard-normal vector draw.
pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}
