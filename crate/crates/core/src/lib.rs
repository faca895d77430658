//! Numerical verification toolkit for anti-concentration of non-negative
//! degree-two Gaussian polynomials.
//!
//! A non-negative degree-two polynomial f on Rⁿ is a PSD quadratic form in
//! [1; x], and for x ~ N(0, Iₙ) its small-ball probability obeys
//! Pr{f(x) ≤ ε·E f(x)} ≤ (2e·ε)^{1/2}. This crate pairs that bound — and
//! every intermediate inequality behind it — with independent exact and
//! Monte Carlo probability oracles, so the whole chain can be evaluated,
//! swept, and stress-tested on arbitrary PSD instances:
//!
//! - [`linalg`]: dense symmetric eigendecomposition, Cholesky, PSD
//!   certificates, Schur complements.
//! - [`polyform`]: polynomial parsing, the quadratic-form representation,
//!   Gaussian expectation.
//! - [`bounds`]: the closed-form bounds, erf, and the worst-case interval
//!   measure ζ(ε).
//! - [`mgf`]: the exact Laplace transform, its determinant bound, and the
//!   Chernoff machinery.
//! - [`oracle`]: spectral reduction to a noncentral chi-square mixture,
//!   CDF by characteristic-function inversion, seeded Monte Carlo, and a
//!   fuzzing harness that hunts for bound violations.
//! - [`cli`]: the `anticonc` command-line surface over all of the above.

pub mod bounds;
pub mod cli;
pub mod linalg;
pub mod mgf;
pub mod oracle;
pub mod polyform;

pub use bounds::Epsilon;
pub use polyform::{parse_poly, to_qform, Poly2, QForm};
