//! The `anticonc` command-line surface.
//!
//! Subcommands: `bound` (closed-form bounds per ε), `mgf` (Laplace transform
//! sweeps), `prob` (small-ball probabilities vs bounds), `verify` (the full
//! per-instance assertion suite), `fuzz` (randomized bound falsification).
//!
//! Exit codes: 0 success, 1 assertion failure or bound violation, 2 usage
//! error, 3 input not positive semidefinite, 4 degenerate instance (E f = 0).
//!
//! Grids use the syntax `lo:hi:COUNTlog` or `lo:hi:COUNTlin`; CSV output
//! carries 12 significant digits, JSON full precision. All randomness is
//! seeded, so identical invocations produce byte-identical output.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bounds::{
    chernoff_eta_star, cw_bound, lemma2_bound, theorem2_bound, Epsilon,
};
use crate::linalg::DEFAULT_PSD_TOL;
use crate::mgf::{chernoff_objective, det_trace_gap, exact_laplace};
use crate::oracle::{
    fuzz_check, reduce, small_ball_prob, FuzzConfig, GeneratorKind, ProbMethod,
};
use crate::polyform::{expectation, parse_poly, to_qform, validate_nonneg, QForm};

const EXIT_ASSERTION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NOT_PSD: u8 = 3;
const EXIT_DEGENERATE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "anticonc",
    version,
    about = "Anti-concentration bounds for non-negative Gaussian quadratic forms, \
             with exact probability oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format for tabular results.
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
    /// Write the main output to this path instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct InstanceInput {
    /// Polynomial in the x1..xN grammar, e.g. "x1^2 + 2*x1*x2 + 1".
    #[arg(long)]
    poly: Option<String>,
    /// Path to a quadratic form JSON file {"n", "q11", "q12", "q22"}.
    #[arg(long)]
    qform: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the closed-form bounds on a grid of ε values.
    Bound {
        /// Comma-separated ε values.
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        /// ε grid spec lo:hi:COUNTlog|lin (may be combined with --eps).
        #[arg(long)]
        eps_grid: Option<String>,
        /// Evaluate the degree-d template C·d·ε^{1/d} with this constant.
        #[arg(long)]
        cw_c: Option<f64>,
        /// Degree for the template (requires --cw-c).
        #[arg(long, default_value_t = 2)]
        cw_d: u32,
    },
    /// Laplace transform E exp(−λf): exact value, determinant bound, Schur term.
    Mgf {
        #[command(flatten)]
        input: InstanceInput,
        /// Comma-separated λ values.
        #[arg(long, value_delimiter = ',')]
        lambda: Vec<f64>,
        /// λ grid spec lo:hi:COUNTlog|lin.
        #[arg(long)]
        lambda_grid: Option<String>,
    },
    /// Small-ball probabilities P{f ≤ ε·E f} against the bounds.
    Prob {
        #[command(flatten)]
        input: InstanceInput,
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        #[arg(long)]
        eps_grid: Option<String>,
        /// Oracle: inversion, montecarlo, or both (both prints the
        /// cross-method discrepancy per ε on stderr).
        #[arg(long, value_enum, default_value_t = MethodArg::Inversion)]
        method: MethodArg,
        /// Absolute error target for the inversion oracle.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Monte Carlo sample count.
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        /// Monte Carlo seed.
        #[arg(long, default_value_t = 12345)]
        seed: u64,
    },
    /// Run the full invariant suite on one instance.
    Verify {
        #[command(flatten)]
        input: InstanceInput,
        /// ε grid for the dominance checks.
        #[arg(long, default_value = "1e-4:0.3:20log")]
        eps_grid: String,
        /// λ grid for the transform checks.
        #[arg(long, default_value = "1e-3:1e3:7log")]
        lambda_grid: String,
        #[arg(long, default_value_t = 200_000)]
        mc_samples: usize,
        #[arg(long, default_value_t = 12345)]
        seed: u64,
    },
    /// Randomized falsification campaign against the (2e·ε)^{1/2} bound.
    Fuzz {
        #[arg(long, default_value_t = 1000)]
        instances: usize,
        /// Dimension range lo:hi.
        #[arg(long, default_value = "1:8")]
        dims: String,
        #[arg(long, default_value = "1e-4:0.3:20log")]
        eps_grid: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instance families: all, or a comma list of
        /// gram|diagonal|rank1|corner.
        #[arg(long, default_value = "all")]
        generator: String,
        /// Inversion oracle error target.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Per-instance Monte Carlo cross-check samples.
        #[arg(long, default_value_t = 20_000)]
        mc_samples: usize,
        /// Write the worst instance (argmax probability/bound) here.
        #[arg(long)]
        worst_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Inversion,
    Montecarlo,
    Both,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

/// One row of a probability sweep: oracle estimate against the bounds.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub p_oracle: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// min(1, (e·ε)^{1/2}).
    pub lemma2: f64,
    /// min(1, (2e·ε)^{1/2}).
    pub theorem2: f64,
    /// p_oracle / theorem2.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
struct BoundRow {
    eps: f64,
    lemma2_sharp: f64,
    lemma2_simple: f64,
    theorem2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    cw: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct MgfRow {
    lambda: f64,
    exact: f64,
    upper: f64,
    schur_term: f64,
}

pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap uses 2 for usage errors and 0 for --help/--version
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let format = cli.format;
    let out = cli.out.clone();
    let outcome = match cli.command {
        Command::Bound {
            eps,
            eps_grid,
            cw_c,
            cw_d,
        } => cmd_bound(&eps, eps_grid.as_deref(), cw_c, cw_d, format),
        Command::Mgf {
            input,
            lambda,
            lambda_grid,
        } => cmd_mgf(&input, &lambda, lambda_grid.as_deref(), format),
        Command::Prob {
            input,
            eps,
            eps_grid,
            method,
            tol,
            samples,
            seed,
        } => cmd_prob(
            &input,
            &eps,
            eps_grid.as_deref(),
            method,
            tol,
            samples,
            seed,
            format,
        ),
        Command::Verify {
            input,
            eps_grid,
            lambda_grid,
            mc_samples,
            seed,
        } => cmd_verify(&input, &eps_grid, &lambda_grid, mc_samples, seed),
        Command::Fuzz {
            instances,
            dims,
            eps_grid,
            seed,
            generator,
            tol,
            mc_samples,
            worst_out,
        } => cmd_fuzz(
            instances,
            &dims,
            &eps_grid,
            seed,
            &generator,
            tol,
            mc_samples,
            worst_out,
            out.as_deref(),
        ),
    };

    match outcome {
        Ok((payload, code)) => {
            if let Err(e) = emit(out.as_deref(), &payload) {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_USAGE);
            }
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn emit(out: Option<&std::path::Path>, payload: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, payload),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

/// Parses `lo:hi:COUNTlog` / `lo:hi:COUNTlin`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid '{spec}' must look like lo:hi:COUNTlog|lin"));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| format!("bad grid endpoint '{}'", parts[0]))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| format!("bad grid endpoint '{}'", parts[1]))?;
    let (count_str, log) = if let Some(c) = parts[2].strip_suffix("log") {
        (c, true)
    } else if let Some(c) = parts[2].strip_suffix("lin") {
        (c, false)
    } else {
        return Err(format!("grid count '{}' must end in log or lin", parts[2]));
    };
    let count: usize = count_str
        .parse()
        .map_err(|_| format!("bad grid count '{count_str}'"))?;
    if count == 0 {
        return Err("grid count must be positive".into());
    }
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(format!("need finite lo ≤ hi in '{spec}'"));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    if log {
        if lo <= 0.0 {
            return Err("log grids need positive endpoints".into());
        }
        let step = (hi / lo).ln() / (count - 1) as f64;
        Ok((0..count).map(|i| lo * (step * i as f64).exp()).collect())
    } else {
        let step = (hi - lo) / (count - 1) as f64;
        Ok((0..count).map(|i| lo + step * i as f64).collect())
    }
}

/// Parses a dimension range `lo:hi`.
pub fn parse_dims(spec: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 2 {
        return Err(format!("dimension range '{spec}' must look like lo:hi"));
    }
    let lo: usize = parts[0]
        .parse()
        .map_err(|_| format!("bad dimension '{}'", parts[0]))?;
    let hi: usize = parts[1]
        .parse()
        .map_err(|_| format!("bad dimension '{}'", parts[1]))?;
    if lo == 0 || lo > hi {
        return Err(format!("need 1 ≤ lo ≤ hi in '{spec}'"));
    }
    Ok((lo, hi))
}

/// Parses the fuzz generator selection.
pub fn parse_generators(spec: &str) -> Result<Vec<GeneratorKind>, String> {
    if spec == "all" {
        return Ok(GeneratorKind::ALL.to_vec());
    }
    spec.split(',')
        .map(|s| match s.trim() {
            "gram" => Ok(GeneratorKind::Gram),
            "diagonal" => Ok(GeneratorKind::Diagonal),
            "rank1" | "rank-one-plus-diagonal" => Ok(GeneratorKind::RankOnePlusDiagonal),
            "corner" | "corner-heavy" => Ok(GeneratorKind::CornerHeavy),
            other => Err(format!(
                "unknown generator '{other}' (want gram|diagonal|rank1|corner|all)"
            )),
        })
        .collect()
}

/// 12 significant digits, the CSV precision contract.
fn sig12(v: f64) -> String {
    format!("{v:.11e}")
}

fn gather_eps(eps: &[f64], grid: Option<&str>) -> Result<Vec<Epsilon>, Failure> {
    let mut raw: Vec<f64> = eps.to_vec();
    if let Some(spec) = grid {
        raw.extend(parse_grid(spec).map_err(Failure::usage)?);
    }
    if raw.is_empty() {
        return Err(Failure::usage("no ε values given (use --eps or --eps-grid)"));
    }
    raw.iter()
        .map(|&v| Epsilon::new(v).map_err(|e| Failure::usage(format!("bad ε {v}: {e}"))))
        .collect()
}

fn load_instance(input: &InstanceInput) -> Result<QForm, Failure> {
    match (&input.poly, &input.qform) {
        (Some(_), Some(_)) => Err(Failure::usage("give either --poly or --qform, not both")),
        (None, None) => Err(Failure::usage("an instance is required (--poly or --qform)")),
        (Some(text), None) => {
            let p = parse_poly(text).map_err(|e| Failure::usage(e.to_string()))?;
            Ok(to_qform(&p))
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
            QForm::from_json(&text)
                .map_err(|e| Failure::usage(format!("bad quadratic form JSON: {e}")))
        }
    }
}

fn require_psd(q: &QForm) -> Result<(), Failure> {
    let check = validate_nonneg(q, DEFAULT_PSD_TOL).map_err(|e| Failure::usage(e.to_string()))?;
    if !check.psd {
        return Err(Failure {
            code: EXIT_NOT_PSD,
            message: format!(
                "instance is not positive semidefinite: min eigenvalue {:e}",
                check.min_eigenvalue
            ),
        });
    }
    Ok(())
}

fn render_rows<T: Serialize>(rows: &[T], header: &str, csv_line: impl Fn(&T) -> String, format: OutFormat) -> String {
    match format {
        OutFormat::Csv => {
            let mut s = String::new();
            let _ = writeln!(s, "{header}");
            for r in rows {
                let _ = writeln!(s, "{}", csv_line(r));
            }
            s
        }
        OutFormat::Json => {
            let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
            s.push('\n');
            s
        }
    }
}

fn cmd_bound(
    eps: &[f64],
    grid: Option<&str>,
    cw_c: Option<f64>,
    cw_d: u32,
    format: OutFormat,
) -> Result<(String, u8), Failure> {
    let eps = gather_eps(eps, grid)?;
    let mut rows = Vec::with_capacity(eps.len());
    for &e in &eps {
        let l2 = lemma2_bound(e);
        let cw = match cw_c {
            Some(c) => Some(cw_bound(e, cw_d, c).map_err(|err| Failure::usage(err.to_string()))?),
            None => None,
        };
        rows.push(BoundRow {
            eps: e.value(),
            lemma2_sharp: l2.sharp,
            lemma2_simple: l2.simple,
            theorem2: theorem2_bound(e),
            cw,
        });
    }
    let header = if cw_c.is_some() {
        "eps,lemma2_sharp,lemma2_simple,theorem2,cw"
    } else {
        "eps,lemma2_sharp,lemma2_simple,theorem2"
    };
    let payload = render_rows(&rows, header, |r| {
        let mut line = format!(
            "{},{},{},{}",
            sig12(r.eps),
            sig12(r.lemma2_sharp),
            sig12(r.lemma2_simple),
            sig12(r.theorem2)
        );
        if let Some(cw) = r.cw {
            line.push(',');
            line.push_str(&sig12(cw));
        }
        line
    }, format);
    Ok((payload, 0))
}

fn cmd_mgf(
    input: &InstanceInput,
    lambda: &[f64],
    grid: Option<&str>,
    format: OutFormat,
) -> Result<(String, u8), Failure> {
    let q = load_instance(input)?;
    require_psd(&q)?;

    let mut lambdas: Vec<f64> = lambda.to_vec();
    if let Some(spec) = grid {
        lambdas.extend(parse_grid(spec).map_err(Failure::usage)?);
    }
    if lambdas.is_empty() {
        return Err(Failure::usage(
            "no λ values given (use --lambda or --lambda-grid)",
        ));
    }

    let mut rows = Vec::with_capacity(lambdas.len());
    for &l in &lambdas {
        let le = exact_laplace(&q, l).map_err(|e| Failure::usage(e.to_string()))?;
        rows.push(MgfRow {
            lambda: le.lambda,
            exact: le.exact,
            upper: le.upper,
            schur_term: le.schur_term,
        });
    }
    let payload = render_rows(&rows, "lambda,exact,upper,schur_term", |r| {
        format!(
            "{},{},{},{}",
            sig12(r.lambda),
            sig12(r.exact),
            sig12(r.upper),
            sig12(r.schur_term)
        )
    }, format);
    Ok((payload, 0))
}

#[allow(clippy::too_many_arguments)]
fn cmd_prob(
    input: &InstanceInput,
    eps: &[f64],
    grid: Option<&str>,
    method: MethodArg,
    tol: f64,
    samples: usize,
    seed: u64,
    format: OutFormat,
) -> Result<(String, u8), Failure> {
    let q = load_instance(input)?;
    require_psd(&q)?;
    let eps = gather_eps(eps, grid)?;
    if expectation(&q) <= 0.0 {
        return Err(Failure {
            code: EXIT_DEGENERATE,
            message: "degenerate instance: E f = 0".into(),
        });
    }

    let run = |e: Epsilon, m: ProbMethod| {
        small_ball_prob(&q, e, m).map_err(|err| Failure {
            code: match err {
                crate::oracle::OracleError::DegenerateInstance => EXIT_DEGENERATE,
                crate::oracle::OracleError::NotPsd { .. } => EXIT_NOT_PSD,
                _ => EXIT_USAGE,
            },
            message: err.to_string(),
        })
    };

    let mut rows = Vec::with_capacity(eps.len());
    let mut discrepancies = String::new();
    for &e in &eps {
        let primary = match method {
            MethodArg::Inversion | MethodArg::Both => run(e, ProbMethod::Inversion { tol })?,
            MethodArg::Montecarlo => run(e, ProbMethod::MonteCarlo { samples, seed })?,
        };
        if method == MethodArg::Both {
            let mc = run(e, ProbMethod::MonteCarlo { samples, seed })?;
            let _ = writeln!(
                discrepancies,
                "eps {}: |p_inv - p_mc| = {} (mc 99% ci width {})",
                sig12(e.value()),
                sig12((primary.p - mc.p).abs()),
                sig12(mc.ci_high - mc.ci_low)
            );
        }
        let t2 = theorem2_bound(e);
        rows.push(SweepRow {
            eps: e.value(),
            p_oracle: primary.p,
            ci_low: primary.ci_low,
            ci_high: primary.ci_high,
            lemma2: lemma2_bound(e).simple,
            theorem2: t2,
            ratio: primary.p / t2,
        });
    }
    if !discrepancies.is_empty() {
        eprint!("{discrepancies}");
    }
    let payload = render_rows(
        &rows,
        "eps,p_oracle,ci_low,ci_high,lemma2,theorem2,ratio",
        |r| {
            format!(
                "{},{},{},{},{},{},{}",
                sig12(r.eps),
                sig12(r.p_oracle),
                sig12(r.ci_low),
                sig12(r.ci_high),
                sig12(r.lemma2),
                sig12(r.theorem2),
                sig12(r.ratio)
            )
        },
        format,
    );
    Ok((payload, 0))
}

fn cmd_verify(
    input: &InstanceInput,
    eps_grid: &str,
    lambda_grid: &str,
    mc_samples: usize,
    seed: u64,
) -> Result<(String, u8), Failure> {
    let q = load_instance(input)?;
    let eps_values = parse_grid(eps_grid).map_err(Failure::usage)?;
    let lambda_values = parse_grid(lambda_grid).map_err(Failure::usage)?;
    if mc_samples < 1000 {
        return Err(Failure::usage("--mc-samples must be at least 1000"));
    }

    let mut report = String::new();
    let mut all_ok = true;
    let mut check = |name: &str, ok: bool, detail: String, report: &mut String| {
        let _ = writeln!(
            report,
            "{} {name}: {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
        all_ok &= ok;
    };

    // gate checks carry their own exit codes
    let psd = validate_nonneg(&q, DEFAULT_PSD_TOL).map_err(|e| Failure::usage(e.to_string()))?;
    if !psd.psd {
        return Err(Failure {
            code: EXIT_NOT_PSD,
            message: format!(
                "instance is not positive semidefinite: min eigenvalue {:e}",
                psd.min_eigenvalue
            ),
        });
    }
    let _ = writeln!(
        report,
        "PASS psd-certificate: min eigenvalue {:e}",
        psd.min_eigenvalue
    );
    let mean = expectation(&q);
    if mean <= 0.0 {
        return Err(Failure {
            code: EXIT_DEGENERATE,
            message: "degenerate instance: E f = 0".into(),
        });
    }

    let scale = q.scale();
    let trace = q.q22().trace();

    // expectation against a seeded Monte Carlo mean
    {
        use rand::prelude::*;
        use rand_distr::StandardNormal;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = q.dim();
        let mut x = vec![0.0; n];
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..mc_samples {
            for xi in &mut x {
                *xi = rng.sample(StandardNormal);
            }
            let v = q.evaluate(&x).expect("dimension fixed");
            sum += v;
            sumsq += v * v;
        }
        let m = sum / mc_samples as f64;
        let var = (sumsq / mc_samples as f64 - m * m).max(0.0);
        let se = (var / mc_samples as f64).sqrt();
        check(
            "expectation-vs-mc",
            (mean - m).abs() <= 5.0 * se + 1e-12 * scale,
            format!("E f = {mean:e}, MC mean {m:e} ± {se:e}"),
            &mut report,
        );
    }

    // Laplace transform chain over the λ grid
    {
        let mut worst_gap = f64::INFINITY;
        let mut worst_schur = f64::INFINITY;
        let mut ok = true;
        for &l in &lambda_values {
            match exact_laplace(&q, l) {
                Ok(le) => {
                    worst_gap = worst_gap.min(le.upper - le.exact);
                    worst_schur = worst_schur.min(le.schur_term);
                    ok &= le.exact <= le.upper * (1.0 + 1e-12) && le.exact >= 0.0;
                    ok &= le.schur_term >= -1e-9 * scale;
                }
                Err(e) => {
                    ok = false;
                    let _ = writeln!(report, "     transform failed at λ={l}: {e}");
                }
            }
        }
        check(
            "laplace-exact-below-upper",
            ok,
            format!("min(upper − exact) = {worst_gap:e}, min schur = {worst_schur:e}"),
            &mut report,
        );
    }

    // determinant–trace inequality
    if q.dim() >= 1 && trace > 0.0 {
        let mut worst = f64::INFINITY;
        for &eta in &lambda_values {
            if let Ok(gap) = det_trace_gap(q.q22(), eta) {
                worst = worst.min(gap);
            }
        }
        check(
            "det-trace-gap",
            worst >= -1e-9 * (1.0 + q.q22().max_abs()),
            format!("min gap {worst:e}"),
            &mut report,
        );
    } else {
        let _ = writeln!(report, "SKIP det-trace-gap: Tr(Q22) = 0");
    }

    // Chernoff objective at the optimizer stays under the sharp bound
    if trace > 0.0 {
        let mut worst_slack = f64::INFINITY;
        let mut ok = true;
        for &e in &eps_values {
            if e >= 1.0 {
                continue;
            }
            let ep = Epsilon::new(e).expect("grid validated");
            let eta = chernoff_eta_star(ep, trace).expect("trace positive");
            match chernoff_objective(&q, ep, eta, false) {
                Ok(obj) => {
                    let sharp = ((1.0 - e).exp() * e).sqrt();
                    worst_slack = worst_slack.min(sharp + 1e-12 - obj);
                    ok &= obj <= sharp + 1e-12;
                }
                Err(err) => {
                    ok = false;
                    let _ = writeln!(report, "     chernoff failed at ε={e}: {err}");
                }
            }
        }
        check(
            "chernoff-at-eta-star",
            ok,
            format!("min slack {worst_slack:e}"),
            &mut report,
        );
    } else {
        let _ = writeln!(report, "SKIP chernoff-at-eta-star: Tr(Q22) = 0");
    }

    // spectral reduction reconstructs the form
    {
        use rand::prelude::*;
        use rand_distr::StandardNormal;
        match reduce(&q) {
            Ok(form) => {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
                let mut worst = 0.0f64;
                let n = q.dim();
                let mut x = vec![0.0; n];
                for _ in 0..20 {
                    for xi in &mut x {
                        *xi = rng.sample(StandardNormal);
                    }
                    let direct = q.evaluate(&x).expect("dimension fixed");
                    let via = form.eval(&x);
                    worst = worst.max((direct - via).abs() / (1.0 + direct.abs()));
                }
                check(
                    "spectral-reconstruction",
                    worst <= 1e-9 * scale,
                    format!("max relative residual {worst:e}"),
                    &mut report,
                );
                check(
                    "spectral-constant-nonnegative",
                    form.constant() >= -1e-9 * scale,
                    format!("c = {:e}", form.constant()),
                    &mut report,
                );
            }
            Err(e) => {
                check("spectral-reconstruction", false, e.to_string(), &mut report);
            }
        }
    }

    // the headline dominance sweep
    {
        let mut max_ratio = f64::NEG_INFINITY;
        let mut ok = true;
        for &e in &eps_values {
            let ep = Epsilon::new(e).expect("grid validated");
            match small_ball_prob(&q, ep, ProbMethod::Inversion { tol: 1e-9 }) {
                Ok(est) => {
                    let bound = theorem2_bound(ep);
                    max_ratio = max_ratio.max(est.p / bound);
                    ok &= est.ci_low <= bound;
                }
                Err(e) => {
                    ok = false;
                    let _ = writeln!(report, "     oracle failed: {e}");
                }
            }
        }
        check(
            "theorem2-dominance",
            ok,
            format!("max probability/bound ratio {max_ratio:.6}"),
            &mut report,
        );
    }

    // the two oracles agree at the middle of the grid
    {
        let e = eps_values[eps_values.len() / 2];
        let ep = Epsilon::new(e).expect("grid validated");
        let inv = small_ball_prob(&q, ep, ProbMethod::Inversion { tol: 1e-9 });
        let mc = small_ball_prob(
            &q,
            ep,
            ProbMethod::MonteCarlo {
                samples: mc_samples,
                seed,
            },
        );
        match (inv, mc) {
            (Ok(inv), Ok(mc)) => {
                let inv_err = (inv.ci_high - inv.p).max(inv.p - inv.ci_low);
                check(
                    "oracle-cross-agreement",
                    (inv.p - mc.p).abs() <= (mc.ci_high - mc.ci_low) + inv_err,
                    format!(
                        "ε = {e:e}: inversion {:e}, mc 99% ci [{:e}, {:e}]",
                        inv.p, mc.ci_low, mc.ci_high
                    ),
                    &mut report,
                );
            }
            (inv, mc) => {
                let msg = format!("inversion: {:?}, mc: {:?}", inv.err(), mc.err());
                check("oracle-cross-agreement", false, msg, &mut report);
            }
        }
    }

    let code = if all_ok { 0 } else { EXIT_ASSERTION };
    let _ = writeln!(
        report,
        "{}",
        if all_ok { "verify: all checks passed" } else { "verify: FAILURES present" }
    );
    Ok((report, code))
}

#[allow(clippy::too_many_arguments)]
fn cmd_fuzz(
    instances: usize,
    dims: &str,
    eps_grid: &str,
    seed: u64,
    generator: &str,
    tol: f64,
    mc_samples: usize,
    worst_out: Option<PathBuf>,
    out: Option<&std::path::Path>,
) -> Result<(String, u8), Failure> {
    let (dim_min, dim_max) = parse_dims(dims).map_err(Failure::usage)?;
    let eps_grid = parse_grid(eps_grid).map_err(Failure::usage)?;
    let generators = parse_generators(generator).map_err(Failure::usage)?;
    let cfg = FuzzConfig {
        instances,
        dim_min,
        dim_max,
        eps_grid,
        seed,
        generators,
        inversion_tol: tol,
        mc_check_samples: mc_samples,
    };
    let report = fuzz_check(&cfg).map_err(|e| Failure::usage(e.to_string()))?;

    if let (Some(path), Some(worst)) = (&worst_out, &report.worst_qform) {
        let mut json = serde_json::to_string_pretty(worst).expect("qform serializes");
        json.push('\n');
        std::fs::write(path, json)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
    }

    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "fuzz: {} instances × {} ε values, max ratio {:.6} (instance {}, ε {:e})",
        report.instances_run,
        report.config.eps_grid.len(),
        report.max_ratio,
        report.max_ratio_instance,
        report.max_ratio_eps
    );
    let _ = writeln!(
        summary,
        "violations: {}, oracle disagreements: {}",
        report.violations.len(),
        report.mc_disagreements.len()
    );
    if let Some(path) = &worst_out {
        let _ = writeln!(summary, "worst instance written to {}", path.display());
    } else {
        let _ = writeln!(summary, "worst instance embedded in the report JSON");
    }

    let mut payload = serde_json::to_string_pretty(&report).expect("report serializes");
    payload.push('\n');

    let code = if report.passed() { 0 } else { EXIT_ASSERTION };
    if out.is_some() {
        // report goes to the file; summary to stdout
        print!("{summary}");
        Ok((payload, code))
    } else {
        // report to stdout; keep the summary on stderr so pipes stay clean
        eprint!("{summary}");
        Ok((payload, code))
    }
}
