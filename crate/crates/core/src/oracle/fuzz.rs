//! Randomized falsification harness for the (2e·ε)^{1/2} bound.
//!
//! Generates PSD instances from four structurally different families, runs
//! the inversion oracle over an ε grid, and checks the bound with CI-aware
//! slack: a violation requires the estimate's lower confidence edge to clear
//! the bound, so estimator noise can never fail the campaign. Each instance
//! is also cross-checked against the Monte Carlo oracle at one grid point.
//!
//! Reproducibility contract: instance i draws from a ChaCha8 stream with
//! stream id i over the campaign seed, and its Monte Carlo cross-check seed
//! is a splitmix64 hash of (seed, i). Reports are merged in instance order,
//! so identical configs produce identical reports regardless of the parallel
//! schedule.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    atom_estimate, cdf_inversion, monte_carlo, reduce, OracleError, ProbEstimate,
    INVERSION_TOL_MAX, INVERSION_TOL_MIN,
};
use crate::bounds::{theorem2_bound, Epsilon};
use crate::linalg::SymMat;
use crate::polyform::{expectation, QForm};

/// Families of random PSD instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    /// AᵀA for a square standard-normal A: generic full-rank instances.
    Gram,
    /// Diagonal with a mix of zero and positive entries: decoupled
    /// coordinates and deliberate rank deficiency.
    Diagonal,
    /// v·vᵀ plus a sparse nonnegative diagonal: near-rank-one instances.
    RankOnePlusDiagonal,
    /// A Gram base with q11 inflated two orders of magnitude above Tr(Q22):
    /// exercises the q11 > Tr(Q22) regime where the mean threshold sits far
    /// below the essential minimum.
    CornerHeavy,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 4] = [
        GeneratorKind::Gram,
        GeneratorKind::Diagonal,
        GeneratorKind::RankOnePlusDiagonal,
        GeneratorKind::CornerHeavy,
    ];
}

fn default_inversion_tol() -> f64 {
    1e-9
}

fn default_mc_samples() -> usize {
    20_000
}

/// Campaign parameters. Serializes as JSON so reports embed their exact
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub instances: usize,
    pub dim_min: usize,
    pub dim_max: usize,
    pub eps_grid: Vec<f64>,
    pub seed: u64,
    pub generators: Vec<GeneratorKind>,
    /// Absolute error target for the inversion oracle.
    #[serde(default = "default_inversion_tol")]
    pub inversion_tol: f64,
    /// Sample count for the per-instance Monte Carlo cross-check.
    #[serde(default = "default_mc_samples")]
    pub mc_check_samples: usize,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            instances: 1000,
            dim_min: 1,
            dim_max: 8,
            eps_grid: log_grid(1e-4, 0.3, 20),
            seed: 0,
            generators: GeneratorKind::ALL.to_vec(),
            inversion_tol: default_inversion_tol(),
            mc_check_samples: default_mc_samples(),
        }
    }
}

/// Geometric grid with `count` points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (ratio * i as f64).exp()).collect()
}

/// A bound violation with everything needed to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzViolation {
    pub instance_index: usize,
    pub generator: GeneratorKind,
    pub eps: f64,
    pub p: f64,
    pub p_low: f64,
    pub bound: f64,
    pub seed: u64,
    pub qform: QForm,
}

/// A cross-oracle disagreement: the inversion and Monte Carlo point
/// estimates differ by more than the 99% interval width plus the inversion
/// error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McDisagreement {
    pub instance_index: usize,
    pub eps: f64,
    pub p_inversion: f64,
    pub inversion_err: f64,
    pub mc_low: f64,
    pub mc_high: f64,
    pub qform: QForm,
}

/// Campaign outcome. `max_ratio` is the largest observed probability/bound
/// ratio; the instance achieving it is embedded for replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub config: FuzzConfig,
    pub instances_run: usize,
    pub checks_run: usize,
    pub violations: Vec<FuzzViolation>,
    pub mc_disagreements: Vec<McDisagreement>,
    pub max_ratio: f64,
    pub max_ratio_eps: f64,
    pub max_ratio_instance: usize,
    pub worst_qform: Option<QForm>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

struct InstanceOutcome {
    max_ratio: f64,
    max_ratio_eps: f64,
    violations: Vec<FuzzViolation>,
    disagreement: Option<McDisagreement>,
    qform: QForm,
}

/// Runs the campaign. Instances are embarrassingly parallel; the report is
/// identical for identical configs regardless of thread schedule.
pub fn fuzz_check(cfg: &FuzzConfig) -> Result<FuzzReport, OracleError> {
    validate_config(cfg)?;

    let outcomes: Result<Vec<InstanceOutcome>, OracleError> = (0..cfg.instances)
        .into_par_iter()
        .map(|i| run_instance(cfg, i))
        .collect();
    let outcomes = outcomes?;

    let mut report = FuzzReport {
        config: cfg.clone(),
        instances_run: cfg.instances,
        checks_run: cfg.instances * cfg.eps_grid.len(),
        violations: Vec::new(),
        mc_disagreements: Vec::new(),
        max_ratio: f64::NEG_INFINITY,
        max_ratio_eps: f64::NAN,
        max_ratio_instance: 0,
        worst_qform: None,
    };
    for (i, out) in outcomes.into_iter().enumerate() {
        report.violations.extend(out.violations);
        report.mc_disagreements.extend(out.disagreement);
        if out.max_ratio > report.max_ratio {
            report.max_ratio = out.max_ratio;
            report.max_ratio_eps = out.max_ratio_eps;
            report.max_ratio_instance = i;
            report.worst_qform = Some(out.qform);
        }
    }
    Ok(report)
}

fn validate_config(cfg: &FuzzConfig) -> Result<(), OracleError> {
    if cfg.instances == 0 {
        return Err(OracleError::Domain("instance count must be positive"));
    }
    if cfg.dim_min == 0 || cfg.dim_min > cfg.dim_max {
        return Err(OracleError::Domain("need 1 ≤ dim_min ≤ dim_max"));
    }
    if cfg.eps_grid.is_empty() {
        return Err(OracleError::Domain("epsilon grid must not be empty"));
    }
    if cfg.eps_grid.iter().any(|e| !e.is_finite() || *e <= 0.0) {
        return Err(OracleError::Domain("epsilon grid values must be positive"));
    }
    if cfg.generators.is_empty() {
        return Err(OracleError::Domain("need at least one generator"));
    }
    if !(INVERSION_TOL_MIN..=INVERSION_TOL_MAX).contains(&cfg.inversion_tol) {
        return Err(OracleError::Domain("inversion tol must lie in [1e-10, 1e-4]"));
    }
    if cfg.mc_check_samples < 1000 {
        return Err(OracleError::Domain("mc_check_samples must be at least 1000"));
    }
    Ok(())
}

fn run_instance(cfg: &FuzzConfig, index: usize) -> Result<InstanceOutcome, OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let dim = rng.random_range(cfg.dim_min..=cfg.dim_max);
    let generator = cfg.generators[index % cfg.generators.len()];
    let q = generate_instance(generator, dim, &mut rng);

    let mean = expectation(&q);
    debug_assert!(mean > 0.0, "generators must produce E f > 0");
    let form = reduce(&q)?;

    let mut max_ratio = f64::NEG_INFINITY;
    let mut max_ratio_eps = f64::NAN;
    let mut violations = Vec::new();
    let mut estimates: Vec<ProbEstimate> = Vec::with_capacity(cfg.eps_grid.len());
    for &e in &cfg.eps_grid {
        let eps = Epsilon::new(e).expect("validated grid");
        let threshold = e * mean;
        let est = if form.terms().is_empty() {
            atom_estimate(form.constant(), threshold)
        } else {
            cdf_inversion(&form, threshold, cfg.inversion_tol)?
        };
        let bound = theorem2_bound(eps);
        let ratio = est.p / bound;
        if ratio > max_ratio {
            max_ratio = ratio;
            max_ratio_eps = e;
        }
        if est.ci_low > bound {
            violations.push(FuzzViolation {
                instance_index: index,
                generator,
                eps: e,
                p: est.p,
                p_low: est.ci_low,
                bound,
                seed: cfg.seed,
                qform: q.clone(),
            });
        }
        estimates.push(est);
    }

    // cross-oracle agreement at one rotating grid point per instance
    let check_idx = index % cfg.eps_grid.len();
    let e = cfg.eps_grid[check_idx];
    let inv = estimates[check_idx];
    let mc = monte_carlo(
        &q,
        e * mean,
        cfg.mc_check_samples,
        mc_seed(cfg.seed, index),
    )?;
    // agreement means the point estimates differ by at most the full 99%
    // interval width (≈ 5.2 standard errors) plus the inversion's own error
    let inv_err = (inv.ci_high - inv.p).max(inv.p - inv.ci_low);
    let agrees = (inv.p - mc.p).abs() <= (mc.ci_high - mc.ci_low) + inv_err;
    let disagreement = if agrees {
        None
    } else {
        Some(McDisagreement {
            instance_index: index,
            eps: e,
            p_inversion: inv.p,
            inversion_err: inv_err,
            mc_low: mc.ci_low,
            mc_high: mc.ci_high,
            qform: q.clone(),
        })
    };

    Ok(InstanceOutcome {
        max_ratio,
        max_ratio_eps,
        violations,
        disagreement,
        qform: q,
    })
}

/// Monte Carlo seed for instance i: splitmix64 over (seed, i) keeps the
/// cross-check stream disjoint from the instance-generation stream.
fn mc_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws one PSD instance of the requested family in dimension n.
pub fn generate_instance(kind: GeneratorKind, n: usize, rng: &mut ChaCha8Rng) -> QForm {
    let dim = n + 1;
    match kind {
        GeneratorKind::Gram => qform_from_assembled(&gram(rng, dim), n),
        GeneratorKind::Diagonal => {
            let mut d = vec![0.0; dim];
            for v in d.iter_mut() {
                if rng.random_range(0.0..1.0) < 0.3 {
                    *v = 0.0;
                } else {
                    let z: f64 = rng.sample(StandardNormal);
                    *v = 0.25 + z * z;
                }
            }
            // at least one coordinate must carry mass
            let pick = rng.random_range(0..dim);
            if d[pick] == 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                d[pick] = 0.25 + z * z;
            }
            QForm::new(d[0], vec![0.0; n], SymMat::diag(&d[1..]))
        }
        GeneratorKind::RankOnePlusDiagonal => {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let mut m = SymMat::zeros(dim);
            for i in 0..dim {
                for j in i..dim {
                    m.set(i, j, v[i] * v[j]);
                }
            }
            for i in 0..dim {
                if rng.random_range(0.0..1.0) < 0.5 {
                    let z: f64 = rng.sample(StandardNormal);
                    m.add(i, i, 0.2 + 0.3 * z * z);
                }
            }
            let mut q = qform_from_assembled(&m, n);
            if expectation(&q) <= 1e-9 {
                let mut m2 = q.assemble();
                m2.add(0, 0, 0.5);
                q = qform_from_assembled(&m2, n);
            }
            q
        }
        GeneratorKind::CornerHeavy => {
            let mut m = gram(rng, dim).scaled(0.25);
            let trace_tail: f64 = (1..dim).map(|i| m.get(i, i)).sum();
            let z: f64 = rng.sample(StandardNormal);
            m.add(0, 0, (100.0 + 50.0 * z.abs()) * (1.0 + trace_tail));
            qform_from_assembled(&m, n)
        }
    }
}

fn gram(rng: &mut ChaCha8Rng, dim: usize) -> SymMat {
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
    m
}

fn qform_from_assembled(m: &SymMat, n: usize) -> QForm {
    let mut q22 = SymMat::zeros(n);
    for i in 0..n {
        for j in i..n {
            q22.set(i, j, m.get(i + 1, j + 1));
        }
    }
    QForm::new(m.get(0, 0), (1..=n).map(|j| m.get(0, j)).collect(), q22)
}
