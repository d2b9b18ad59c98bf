//! Command-line front end: reproducible construction → verification →
//! witness → bounds → optimization pipelines with JSON certificates.
//!
//! Exit codes are a stable contract:
//!   0  success
//!   1  I/O failure
//!   2  usage error (bad arguments)
//!   3  verification failure (reports are still written)

use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use projconst_core::bounds;
use projconst_core::frame::{
    check_mutually_unbiased, frame_report, frames_from_sign_matrix, verify_properties,
    PropertyReport,
};
use projconst_core::gf2::{
    build_sign_matrix_with_limit, known_6x10, signed_permutation_equivalent, SignMatrix,
    DEFAULT_MAX_S,
};
use projconst_core::optimizer::{self, maximize, OptSummary, OptimizerConfig};
use projconst_core::witness::{build_witness, spectral_report, Witness};

/// Default absolute tolerance mirrored from the library.
const DEFAULT_TOL: f64 = projconst_core::frame::DEFAULT_TOL;

/// Residual ceiling for witness certification.
const DEFAULT_MAX_RESIDUAL: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "projconst",
    version,
    about = "Mutually unbiased equiangular tight frames and projection-constant bounds"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the k×l sign matrix at family parameter s and write it as text.
    Construct(ConstructArgs),
    /// Check the five sign-matrix properties, recover the frame pair, and
    /// verify tightness/equiangularity/unbiasedness.
    Verify(VerifyArgs),
    /// Print the closed-form bound table for (m,k,l), (m,n), or family s.
    Bounds(BoundsArgs),
    /// Build the blockwise witness and certify its stationarity identities.
    Witness(WitnessArgs),
    /// Maximize the objective by alternating eigenvector steps with restarts.
    Optimize(OptimizeArgs),
    /// Full pipeline at family parameter s with one consolidated certificate.
    Certify(CertifyArgs),
}

#[derive(Args)]
struct ConstructArgs {
    /// Family parameter (s >= 2).
    #[arg(long)]
    s: u32,
    /// Output path for the sign-matrix text file.
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON certificate path.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Sign-matrix text file to verify.
    #[arg(long)]
    x: PathBuf,
    /// Optional JSON certificate path.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Absolute tolerance for all checks.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Also report whether the input is a signed permutation of the
    /// classical 6×10 matrix (diagnostic only, 6×10 inputs only).
    #[arg(long)]
    diag_exemplar: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    l: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    /// Family parameter; implies (m,k,l) from the construction.
    #[arg(long)]
    s: Option<u32>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct WitnessArgs {
    /// Family parameter to construct the pair from.
    #[arg(long, conflicts_with = "x")]
    s: Option<u32>,
    /// Sign-matrix text file to recover the pair from.
    #[arg(long)]
    x: Option<PathBuf>,
    /// Output path for the witness text file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Largest acceptable SP1/SP2/diagonal residual.
    #[arg(long, default_value_t = DEFAULT_MAX_RESIDUAL)]
    max_residual: f64,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    m: u32,
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 20)]
    restarts: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5000)]
    max_iters: u32,
    #[arg(long, default_value_t = 1e-12)]
    conv_tol: f64,
    /// Witness file to warm-start restart 0 from.
    #[arg(long)]
    warm: Option<PathBuf>,
    /// Output path for the best witness found.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Family parameter (s >= 2).
    #[arg(long)]
    s: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Directory for the sign-matrix and witness artifacts (kept in
    /// memory when absent).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_RESIDUAL)]
    max_residual: f64,
}

enum AppError {
    Io(String),
    Usage(String),
    Verification(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Io(_) => 1,
            AppError::Usage(_) => 2,
            AppError::Verification(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Io(m) | AppError::Usage(m) | AppError::Verification(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Construct(args) => cmd_construct(args),
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::Bounds(args) => cmd_bounds(args),
        Cmd::Witness(args) => cmd_witness(args),
        Cmd::Optimize(args) => cmd_optimize(args),
        Cmd::Certify(args) => cmd_certify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}

/// Format with 10 significant digits for stdout tables.
fn sig10(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (9 - magnitude).max(0) as usize;
    format!("{:.*}", decimals, x)
}

fn max_s_limit() -> u32 {
    std::env::var("PROJCONST_MAX_S")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_S)
}

fn write_file(path: &Path, contents: &str) -> Result<(), AppError> {
    std::fs::write(path, contents)
        .map_err(|e| AppError::Io(format!("cannot write {}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String, AppError> {
    std::fs::read_to_string(path)
        .map_err(|e| AppError::Io(format!("cannot read {}: {e}", path.display())))
}

/// Assemble and write the certificate JSON: a single document per run.
fn write_certificate(
    path: Option<&PathBuf>,
    command: &str,
    inputs: Value,
    sections: Value,
    passed: bool,
) -> Result<(), AppError> {
    let Some(path) = path else {
        return Ok(());
    };
    let mut doc = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "timestamp": Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        "inputs": inputs,
        "passed": passed,
    });
    if let (Some(obj), Some(extra)) = (doc.as_object_mut(), sections.as_object()) {
        for (k, v) in extra {
            obj.insert(k.clone(), v.clone());
        }
    }
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| AppError::Io(format!("cannot serialize certificate: {e}")))?;
    write_file(path, &text)
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn check_s(s: u32) -> Result<(), AppError> {
    if s < 2 {
        return Err(AppError::Usage(format!("s must be at least 2, got {s}")));
    }
    let max = max_s_limit();
    if s > max {
        return Err(AppError::Usage(format!(
            "s = {s} exceeds the configured limit {max} (set PROJCONST_MAX_S to raise it)"
        )));
    }
    Ok(())
}

fn cmd_construct(args: ConstructArgs) -> Result<(), AppError> {
    check_s(args.s)?;
    let x = build_sign_matrix_with_limit(args.s, max_s_limit())
        .map_err(|e| AppError::Usage(e.to_string()))?;
    write_file(&args.out, &x.to_text())?;
    let (m, k, l) = projconst_core::gf2::construction_params(args.s)
        .map_err(|e| AppError::Usage(e.to_string()))?;
    println!("m={m} k={k} l={l}");
    write_certificate(
        args.json.as_ref(),
        "construct",
        json!({"s": args.s, "out": args.out.display().to_string()}),
        json!({"params": {"m": m, "k": k, "l": l}}),
        true,
    )
}

struct VerifyOutcome {
    sections: Value,
    passed: bool,
    summary_lines: Vec<String>,
}

/// Property verification + frame recovery + frame-level checks, shared
/// by `verify` and `certify`.
fn verify_pipeline(x: &SignMatrix, tol: f64) -> VerifyOutcome {
    let report: PropertyReport = verify_properties(x, tol);
    let mut lines = Vec::new();
    let checks = [
        ("P1 (entries +-1)", &report.p1),
        ("P2 (XX'X = aX)", &report.p2),
        ("P3 (equiangular rows)", &report.p3),
        ("P4 (equiangular columns)", &report.p4),
        ("P5 (rank = kl/a)", &report.p5),
    ];
    for (name, check) in checks {
        lines.push(format!(
            "{name:<24} {}  residual {:.3e}",
            if check.pass { "pass" } else { "FAIL" },
            check.residual
        ));
    }
    lines.push(format!("a = {}  rank = {}", sig10(report.a_value), report.rank));
    if let Some(ints) = &report.integrality {
        lines.push(format!(
            "integrality: kl/m = {} ({}), k*phi(m,l) = {} ({}), l*phi(m,k) = {} ({})",
            sig10(ints[0].value),
            if ints[0].is_integer { "integer" } else { "NOT integer" },
            sig10(ints[1].value),
            if ints[1].is_integer { "integer" } else { "NOT integer" },
            sig10(ints[2].value),
            if ints[2].is_integer { "integer" } else { "NOT integer" },
        ));
    }

    let mut passed = report.all_pass();
    let mut sections = json!({ "property_report": to_value(&report) });

    match frames_from_sign_matrix(x, tol) {
        Ok((v, w)) => {
            let rv = frame_report(&v, tol);
            let rw = frame_report(&w, tol);
            let unb = check_mutually_unbiased(&v, &w, tol).expect("same dimension");
            lines.push(format!(
                "frame V ({}x{}): tight {} (residual {:.3e}), equiangular {} (c = {})",
                v.dim(),
                v.count(),
                rv.tight.is_tight,
                rv.tight.residual,
                rv.equiangular.is_equiangular,
                sig10(rv.equiangular.c),
            ));
            lines.push(format!(
                "frame W ({}x{}): tight {} (residual {:.3e}), equiangular {} (c = {})",
                w.dim(),
                w.count(),
                rw.tight.is_tight,
                rw.tight.residual,
                rw.equiangular.is_equiangular,
                sig10(rw.equiangular.c),
            ));
            lines.push(format!(
                "mutually unbiased: {}  c_cross = {} (1/sqrt(m) = {})",
                unb.is_unbiased,
                sig10(unb.c),
                sig10(1.0 / (v.dim() as f64).sqrt()),
            ));
            passed = passed
                && rv.tight.is_tight
                && rv.equiangular.is_equiangular
                && rw.tight.is_tight
                && rw.equiangular.is_equiangular
                && unb.is_unbiased;
            if let Some(obj) = sections.as_object_mut() {
                obj.insert("frame_v".into(), to_value(&rv));
                obj.insert("frame_w".into(), to_value(&rw));
                obj.insert("unbiasedness".into(), to_value(&unb));
            }
        }
        Err(e) => {
            lines.push(format!("frame recovery failed: {e}"));
            passed = false;
            if let Some(obj) = sections.as_object_mut() {
                obj.insert("frame_recovery_error".into(), json!(e.to_string()));
            }
        }
    }

    VerifyOutcome { sections, passed, summary_lines: lines }
}

fn cmd_verify(args: VerifyArgs) -> Result<(), AppError> {
    let text = read_file(&args.x)?;
    let x = SignMatrix::from_text(&text)
        .map_err(|e| AppError::Usage(format!("cannot parse {}: {e}", args.x.display())))?;
    let outcome = verify_pipeline(&x, args.tol);
    for line in &outcome.summary_lines {
        println!("{line}");
    }

    let mut sections = outcome.sections;
    if args.diag_exemplar {
        if (x.k(), x.l()) == (6, 10) {
            let equivalent = signed_permutation_equivalent(&x, &known_6x10())
                .map_err(|e| AppError::Usage(e.to_string()))?;
            println!(
                "exemplar diagnostic: input {} a signed permutation of the classical 6x10 matrix",
                if equivalent { "IS" } else { "is NOT" }
            );
            if let Some(obj) = sections.as_object_mut() {
                obj.insert("exemplar_equivalent".into(), json!(equivalent));
            }
        } else {
            println!("exemplar diagnostic: skipped (input is not 6x10)");
        }
    }

    println!("VERDICT: {}", if outcome.passed { "PASS" } else { "FAIL" });
    write_certificate(
        args.json.as_ref(),
        "verify",
        json!({"x": args.x.display().to_string(), "tol": args.tol}),
        sections,
        outcome.passed,
    )?;
    if outcome.passed {
        Ok(())
    } else {
        Err(AppError::Verification("sign matrix failed verification".into()))
    }
}

fn print_triple_report(r: &bounds::BoundReport) {
    println!("m={} k={} l={}", r.m, r.k, r.l);
    println!("phi(m,k)          = {}", sig10(r.phi_k));
    println!("phi(m,l)          = {}", sig10(r.phi_l));
    println!("delta(m,k)        = {}", sig10(r.delta_k));
    println!("delta(m,l)        = {}", sig10(r.delta_l));
    println!("gamma(m,k,l)      = {}", sig10(r.gamma));
    println!("cos(2theta)       = {}", sig10(r.cos_two_theta));
    println!("kadec-snobar      = {}", sig10(r.kadec_snobar));
    println!(
        "integrality       = {} ({}), {} ({}), {} ({})",
        sig10(r.integrality[0].value),
        if r.integrality[0].is_integer { "integer" } else { "NOT integer" },
        sig10(r.integrality[1].value),
        if r.integrality[1].is_integer { "integer" } else { "NOT integer" },
        sig10(r.integrality[2].value),
        if r.integrality[2].is_integer { "integer" } else { "NOT integer" },
    );
    if let Some(f) = &r.family {
        println!("family bound s={}  = {}", f.s, sig10(f.value));
        println!("|family - gamma|  = {:.3e}", r.family_gamma_gap.unwrap_or(f64::NAN));
    }
}

fn cmd_bounds(args: BoundsArgs) -> Result<(), AppError> {
    let usage = |msg: &str| Err(AppError::Usage(msg.to_string()));
    match (args.s, args.m, args.k, args.l, args.n) {
        (Some(s), None, None, None, None) => {
            if s < 2 {
                return usage("bounds --s requires s >= 2");
            }
            let fb = bounds::family_bound(s).map_err(|e| AppError::Usage(e.to_string()))?;
            let report = bounds::report_triple(fb.m, fb.k, fb.l)
                .map_err(|e| AppError::Usage(e.to_string()))?;
            print_triple_report(&report);
            let mut sections = json!({"bound_report": to_value(&report)});
            // The s = 3 dimension also hosts a known 126-vector
            // equiangular tight frame whose delta value beats the family
            // bound; report the comparison.
            if s == 3 {
                let d = bounds::delta(21, 126).map_err(|e| AppError::Usage(e.to_string()))?;
                println!(
                    "note: a 126-vector equiangular tight frame exists in R^21, and delta(21,126) = {} exceeds the family bound {}",
                    sig10(d),
                    sig10(fb.value)
                );
                if let Some(obj) = sections.as_object_mut() {
                    obj.insert("delta_21_126".into(), json!(d));
                }
            }
            write_certificate(args.json.as_ref(), "bounds", json!({"s": s}), sections, true)
        }
        (None, Some(m), Some(k), Some(l), None) => {
            let report =
                bounds::report_triple(m, k, l).map_err(|e| AppError::Usage(e.to_string()))?;
            print_triple_report(&report);
            write_certificate(
                args.json.as_ref(),
                "bounds",
                json!({"m": m, "k": k, "l": l}),
                json!({"bound_report": to_value(&report)}),
                true,
            )
        }
        (None, Some(m), None, None, Some(n)) => {
            let report = bounds::report_pair(m, n).map_err(|e| AppError::Usage(e.to_string()))?;
            println!("m={} n={}", report.m, report.n);
            println!("phi(m,n)          = {}", sig10(report.phi));
            println!("delta(m,n)        = {}", sig10(report.delta));
            println!("kadec-snobar      = {}", sig10(report.kadec_snobar));
            write_certificate(
                args.json.as_ref(),
                "bounds",
                json!({"m": m, "n": n}),
                json!({"bound_report": to_value(&report)}),
                true,
            )
        }
        _ => usage("pass either --s, or --m/--k/--l, or --m/--n"),
    }
}

struct WitnessOutcome {
    witness: Witness,
    gamma: f64,
    sections: Value,
    passed: bool,
    summary_lines: Vec<String>,
}

fn witness_pipeline(
    x: &SignMatrix,
    tol: f64,
    max_residual: f64,
) -> Result<WitnessOutcome, AppError> {
    let (v, w) = frames_from_sign_matrix(x, tol)
        .map_err(|e| AppError::Verification(format!("frame recovery failed: {e}")))?;
    let (m, k, l) = (v.dim() as u32, v.count() as u32, w.count() as u32);
    let gamma = bounds::gamma(m, k, l).map_err(|e| AppError::Verification(e.to_string()))?;
    let wit = build_witness(&v, &w, tol)
        .map_err(|e| AppError::Verification(format!("witness construction failed: {e}")))?;
    let spectral = spectral_report(&wit, gamma);

    let lines = vec![
        format!(
            "witness: m={} n={} theta={}",
            wit.m(),
            wit.n(),
            sig10(wit.theta.unwrap_or(f64::NAN))
        ),
        format!("objective         = {}", sig10(wit.objective)),
        format!("gamma(m,k,l)      = {}", sig10(gamma)),
        format!("SP1 residual      = {:.3e}", spectral.sp1_residual),
        format!("SP2 residual      = {:.3e}", spectral.sp2_residual),
        format!("diagonal residual = {:.3e}", spectral.remark9_residual),
    ];

    let passed = (wit.objective - gamma).abs() <= 1e-8
        && spectral.sp1_residual <= max_residual
        && spectral.sp2_residual <= max_residual
        && spectral.remark9_residual <= max_residual;

    let sections = json!({
        "spectral_report": to_value(&spectral),
        "objective": wit.objective,
        "gamma": gamma,
        "max_residual": max_residual,
    });
    Ok(WitnessOutcome { witness: wit, gamma, sections, passed, summary_lines: lines })
}

fn cmd_witness(args: WitnessArgs) -> Result<(), AppError> {
    let x = match (&args.s, &args.x) {
        (Some(s), None) => {
            check_s(*s)?;
            build_sign_matrix_with_limit(*s, max_s_limit())
                .map_err(|e| AppError::Usage(e.to_string()))?
        }
        (None, Some(path)) => {
            let text = read_file(path)?;
            SignMatrix::from_text(&text)
                .map_err(|e| AppError::Usage(format!("cannot parse {}: {e}", path.display())))?
        }
        _ => return Err(AppError::Usage("pass exactly one of --s or --x".into())),
    };

    let outcome = witness_pipeline(&x, args.tol, args.max_residual)?;
    for line in &outcome.summary_lines {
        println!("{line}");
    }
    let out_path = args.out.clone().unwrap_or_else(|| match args.s {
        Some(s) => PathBuf::from(format!("witness_s{s}.txt")),
        None => PathBuf::from("witness.txt"),
    });
    write_file(&out_path, &outcome.witness.to_text())?;
    println!("witness written to {}", out_path.display());
    println!("VERDICT: {}", if outcome.passed { "PASS" } else { "FAIL" });

    let mut sections = outcome.sections;
    if let Some(obj) = sections.as_object_mut() {
        obj.insert("witness_file".into(), json!(out_path.display().to_string()));
    }
    write_certificate(
        args.json.as_ref(),
        "witness",
        json!({
            "s": args.s,
            "x": args.x.as_ref().map(|p| p.display().to_string()),
            "tol": args.tol,
        }),
        sections,
        outcome.passed,
    )?;
    if outcome.passed {
        Ok(())
    } else {
        Err(AppError::Verification("witness residuals exceed the ceiling".into()))
    }
}

fn cmd_optimize(args: OptimizeArgs) -> Result<(), AppError> {
    let mut cfg = OptimizerConfig::new(args.m, args.n);
    cfg.restarts = args.restarts;
    cfg.seed = args.seed;
    cfg.max_iters = args.max_iters;
    cfg.conv_tol = args.conv_tol;
    if let Some(path) = &args.warm {
        let text = read_file(path)?;
        let wit = Witness::from_text(&text)
            .map_err(|e| AppError::Usage(format!("cannot parse {}: {e}", path.display())))?;
        cfg.warm_start = Some(wit);
    }

    let result = maximize(&cfg).map_err(|e| AppError::Usage(e.to_string()))?;
    let spectral = optimizer::certify(&result);

    println!("m={} n={} restarts={} seed={}", args.m, args.n, args.restarts, args.seed);
    println!("best value      = {}", sig10(result.value));
    println!(
        "best restart    = {} ({} iterations, {}/{} restarts converged)",
        result.best_restart, result.iterations_used, result.restarts_converged, args.restarts
    );
    let finite: Vec<f64> = result.value_histogram.iter().flatten().copied().collect();
    if !finite.is_empty() {
        let lo = finite.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("restart values  in [{}, {}]", sig10(lo), sig10(result.value));
    }
    println!(
        "stationarity residuals: SP1 {:.3e}, SP2 {:.3e}, diag {:.3e}",
        spectral.sp1_residual, spectral.sp2_residual, spectral.remark9_residual
    );
    let delta = bounds::delta(args.m, args.n).map_err(|e| AppError::Usage(e.to_string()))?;
    println!(
        "ceilings: delta = {}, sqrt(m) = {}",
        sig10(delta),
        sig10(bounds::kadec_snobar(args.m))
    );

    let mut witness_file = None;
    if let Some(out) = &args.out {
        write_file(out, &result.best.to_text())?;
        println!("witness written to {}", out.display());
        witness_file = Some(out.display().to_string());
    }

    let summary = OptSummary::new(&cfg, &result);
    write_certificate(
        args.json.as_ref(),
        "optimize",
        json!({
            "m": args.m, "n": args.n, "restarts": args.restarts, "seed": args.seed,
            "max_iters": args.max_iters, "conv_tol": args.conv_tol,
            "warm": args.warm.as_ref().map(|p| p.display().to_string()),
        }),
        json!({
            "opt_result": to_value(&summary),
            "witness_file": witness_file,
            "spectral_report": to_value(&spectral),
        }),
        true,
    )
}

fn cmd_certify(args: CertifyArgs) -> Result<(), AppError> {
    check_s(args.s)?;
    let mut stages = Vec::new();

    // Stage 1: construct.
    let x = build_sign_matrix_with_limit(args.s, max_s_limit())
        .map_err(|e| AppError::Usage(e.to_string()))?;
    let (m, k, l) = projconst_core::gf2::construction_params(args.s)
        .map_err(|e| AppError::Usage(e.to_string()))?;
    println!("[construct] m={m} k={k} l={l}");
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| AppError::Io(format!("cannot create {}: {e}", dir.display())))?;
        write_file(&dir.join(format!("sign_s{}.txt", args.s)), &x.to_text())?;
    }
    stages.push(json!({"stage": "construct", "passed": true, "m": m, "k": k, "l": l}));

    // Stage 2: verify.
    let verify = verify_pipeline(&x, args.tol);
    println!("[verify] {}", if verify.passed { "pass" } else { "FAIL" });
    stages.push(json!({"stage": "verify", "passed": verify.passed, "report": verify.sections}));
    if !verify.passed {
        return finish_certify(args, stages, false);
    }

    // Stage 3: witness.
    let witness = witness_pipeline(&x, args.tol, args.max_residual)?;
    println!(
        "[witness] objective {} vs gamma {} - {}",
        sig10(witness.witness.objective),
        sig10(witness.gamma),
        if witness.passed { "pass" } else { "FAIL" }
    );
    if let Some(dir) = &args.out_dir {
        write_file(&dir.join(format!("witness_s{}.txt", args.s)), &witness.witness.to_text())?;
    }
    stages.push(json!({"stage": "witness", "passed": witness.passed, "report": witness.sections}));
    if !witness.passed {
        return finish_certify(args, stages, false);
    }

    // Stage 4: bounds (family closed form must equal gamma).
    let fb = bounds::family_bound(args.s).map_err(|e| AppError::Usage(e.to_string()))?;
    let gap = (fb.value - witness.gamma).abs();
    let bounds_pass = gap <= 1e-12;
    println!(
        "[bounds] family {} vs gamma {} (gap {:.3e}) - {}",
        sig10(fb.value),
        sig10(witness.gamma),
        gap,
        if bounds_pass { "pass" } else { "FAIL" }
    );
    let report = bounds::report_triple(m, k, l).map_err(|e| AppError::Usage(e.to_string()))?;
    stages.push(json!({
        "stage": "bounds", "passed": bounds_pass,
        "bound_report": to_value(&report), "family_gamma_gap": gap,
    }));
    if !bounds_pass {
        return finish_certify(args, stages, false);
    }

    // Stage 5: short warm-started optimization; must hold the bound.
    let mut cfg = OptimizerConfig::new(m, k + l);
    cfg.restarts = 1;
    cfg.max_iters = 50;
    cfg.seed = args.seed;
    cfg.warm_start = Some(witness.witness.clone());
    let result = maximize(&cfg).map_err(|e| AppError::Verification(e.to_string()))?;
    let opt_pass = result.value >= witness.gamma - 1e-9;
    println!(
        "[optimize] warm-started value {} (gamma {}) - {}",
        sig10(result.value),
        sig10(witness.gamma),
        if opt_pass { "pass" } else { "FAIL" }
    );
    stages.push(json!({
        "stage": "optimize", "passed": opt_pass,
        "opt_result": to_value(&OptSummary::new(&cfg, &result)),
    }));

    let all_pass = opt_pass;
    println!("CERTIFICATE: {}", if all_pass { "PASS" } else { "FAIL" });
    finish_certify(args, stages, all_pass)
}

fn finish_certify(args: CertifyArgs, stages: Vec<Value>, passed: bool) -> Result<(), AppError> {
    write_certificate(
        args.json.as_ref(),
        "certify",
        json!({
            "s": args.s,
            "seed": args.seed,
            "tol": args.tol,
            "max_residual": args.max_residual,
        }),
        json!({"stages": stages}),
        passed,
    )?;
    if passed {
        Ok(())
    } else {
        Err(AppError::Verification("certification failed".into()))
    }
}
