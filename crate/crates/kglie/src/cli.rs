//! Command-line front end.
//!
//! Every subcommand assembles one report, prints it as text or JSON, and
//! exits with 0 (verified), 1 (checked and false), 2 (usage or parse
//! problem), or 3 (sampling or numeric environment failure). All sampling
//! flows from one seed: the KGLIE_SEED environment variable overrides
//! --seed, which overrides the built-in default.

use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::catalog;
use crate::error::{Error, Result};
use crate::expr::zero::zero_report;
use crate::expr::{parse_expr, ParseSession, Rat};
use crate::invariants::{check_subalgebra, parse_algebra_file, tuple12};
use crate::poset::{self, CHARACTERISTIC_NAMES};
use crate::symcheck::{classify_extension, classifying_residual, detect_template};
use crate::vfield::{parse_vf, VectorField};
use crate::Config;

#[derive(Parser)]
#[command(
    name = "kglie",
    about = "Symmetry verification and classification for u_tx = f(t,x,u)",
    version,
    disable_help_subcommand = true
)]
struct Cli {
    /// RNG seed (KGLIE_SEED in the environment takes precedence).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sample points per zero test.
    #[arg(long, global = true)]
    trials: Option<u32>,
    /// Working precision in bits.
    #[arg(long, global = true)]
    prec: Option<u32>,
    /// Relative tolerance for zero tests.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Emit the report as JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a vector field against the classifying equation of f.
    CheckSymmetry(CheckArgs),
    /// Verify catalog records: one case, the x-t subclass, the reductions,
    /// or the limit processes.
    Verify(VerifyArgs),
    /// Compute the twelve characteristics of an algebra file.
    Invariants(InvariantsArgs),
    /// Export the extension diagram.
    Hasse(HasseArgs),
    /// Detect template extensions of a seed case.
    Detect(DetectArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Right-hand side f(t,x,u).
    #[arg(long = "f")]
    f: String,
    /// Vector field: generator sum or vf{ ... } literal.
    #[arg(long = "Q")]
    q: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// Case id from the catalog (0-13, variants like 3' or 8'a, subclass
    /// ids like 9b).
    #[arg(long)]
    case: Option<String>,
    /// Exponent for the q-parameterized cases.
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    /// Power for the p-parameterized cases.
    #[arg(long, allow_hyphen_values = true)]
    p: Option<String>,
    /// Verify the whole x-t subclass block.
    #[arg(long)]
    k2: bool,
    /// Verify the three reductions of the inverse-square case.
    #[arg(long)]
    reductions: bool,
    /// Verify the three limit processes.
    #[arg(long)]
    limits: bool,
}

#[derive(Args)]
struct InvariantsArgs {
    /// Algebra file: one vector field per line, optional `param N = r`
    /// headers, `#` comments.
    #[arg(long)]
    algebra: std::path::PathBuf,
}

#[derive(Args)]
struct HasseArgs {
    /// Emit DOT (the default; the global --json switches to the edge list).
    #[arg(long)]
    dot: bool,
}

#[derive(Args)]
struct DetectArgs {
    /// Seed case id (5 through 9).
    #[arg(long)]
    case: u32,
    /// Exponent q for case 7.
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    /// Concrete profile in the variable w.
    #[arg(long)]
    fhat: String,
}

/// Entry point for the binary: parses std::env args, runs, returns the exit
/// code.
pub fn run_from_env() -> i32 {
    run(std::env::args())
}

pub fn run<I>(args: I) -> i32
where
    I: IntoIterator,
    I::Item: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let out = match &cli.cmd {
        Cmd::CheckSymmetry(a) => cmd_check_symmetry(a, &cfg, cli.json),
        Cmd::Verify(a) => cmd_verify(a, &cfg, cli.json),
        Cmd::Invariants(a) => cmd_invariants(a, &cfg, cli.json),
        Cmd::Hasse(a) => cmd_hasse(a, cli.json),
        Cmd::Detect(a) => cmd_detect(a, &cfg, cli.json),
    };
    match out {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn build_config(cli: &Cli) -> Result<Config> {
    let mut cfg = Config::default();
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Ok(env_seed) = std::env::var("KGLIE_SEED") {
        let parsed = if let Some(hex) = env_seed.strip_prefix("0x") {
            u64::from_str_radix(hex, 16)
        } else {
            env_seed.parse()
        };
        cfg.seed = parsed
            .map_err(|_| Error::Invalid(format!("KGLIE_SEED is not a seed: {env_seed:?}")))?;
    }
    if let Some(t) = cli.trials {
        if t < 1 {
            return Err(Error::Invalid("trials must be at least 1".into()));
        }
        cfg.trials = t;
    }
    if let Some(p) = cli.prec {
        if p < 64 {
            return Err(Error::Invalid("precision must be at least 64 bits".into()));
        }
        cfg.prec = p;
    }
    if let Some(t) = cli.tol {
        if !(t > 0.0) {
            return Err(Error::Invalid("tolerance must be positive".into()));
        }
        cfg.tol = t;
    }
    Ok(cfg)
}

fn parse_rat_arg(name: &str, s: &str) -> Result<Rat> {
    Rat::from_str(s).map_err(|_| {
        Error::Invalid(format!("{name} wants an integer or a fraction p/q, got {s:?}"))
    })
}

fn seed_str(cfg: &Config) -> String {
    format!("{:#x}", cfg.seed)
}

fn emit(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("reports are plain data")
    );
}

fn case_label(id: &str, param: &Option<(String, Rat)>) -> String {
    match param {
        Some((name, v)) => format!("Case {}_{} ({} = {})", id, name, name, v),
        None => format!("Case {}", id),
    }
}

fn cmd_check_symmetry(a: &CheckArgs, cfg: &Config, as_json: bool) -> Result<i32> {
    let mut sess = ParseSession::new();
    let f = parse_expr(&a.f, &mut sess)?;
    let q = VectorField::from_literal(&parse_vf(&a.q, &mut sess)?)?;
    let residual = classifying_residual(&f, &q);
    let rep = zero_report(&residual, cfg)?;
    if as_json {
        emit(&json!({
            "seed": seed_str(cfg),
            "f": f.to_string(),
            "Q": q.render(),
            "residual": residual.to_string(),
            "symmetry": rep.zero,
            "trials": rep.trials,
            "exact": rep.exact,
            "witness": rep.witness.as_ref().map(|(pt, mag)| json!({
                "point": pt.iter().map(|(v, r)| json!({ "var": v, "value": r }))
                    .collect::<Vec<_>>(),
                "magnitude": mag,
            })),
        }));
    } else {
        println!("residual: {residual}");
        if rep.zero {
            let how = if rep.exact { "exactly" } else { "numerically" };
            println!("symmetry: yes ({} trials, vanishes {how})", rep.trials);
        } else if let Some((pt, mag)) = &rep.witness {
            let at: Vec<String> = pt.iter().map(|(v, r)| format!("{v} = {r}")).collect();
            println!(
                "symmetry: no (residual magnitude {mag:.3e} at {})",
                at.join(", ")
            );
        } else {
            println!("symmetry: no");
        }
    }
    Ok(if rep.zero { 0 } else { 1 })
}

fn case_report_json(r: &catalog::CaseReport, cfg: &Config) -> serde_json::Value {
    let mut doc = r.to_json();
    doc["seed"] = json!(seed_str(cfg));
    doc["label"] = json!(case_label(&r.id, &r.param));
    doc["stored_mismatch_names"] = json!(r
        .mismatch
        .iter()
        .map(|&i| CHARACTERISTIC_NAMES[i])
        .collect::<Vec<_>>());
    doc
}

fn print_case_report(r: &catalog::CaseReport) {
    println!("{}", case_label(&r.id, &r.param));
    for (i, ok) in r.symmetry_ok.iter().enumerate() {
        println!(
            "  generator {}: {}",
            i + 1,
            if *ok { "symmetry ok" } else { "NOT a symmetry" }
        );
    }
    println!("  closure: {}", if r.closure_ok { "ok" } else { "FAILED" });
    if let Some(t) = &r.computed {
        println!("  tuple12 computed: {t}");
    }
    match r.tuple_ok {
        Some(true) => println!("  tuple12 matches the stored row"),
        Some(false) => {
            let names: Vec<&str> = r.mismatch.iter().map(|&i| CHARACTERISTIC_NAMES[i]).collect();
            println!("  tuple12 DIFFERS from the stored row at: {}", names.join(", "));
        }
        None => {}
    }
    println!("  {}", if r.passed { "PASS" } else { "FAIL" });
}

fn cmd_verify(a: &VerifyArgs, cfg: &Config, as_json: bool) -> Result<i32> {
    let modes =
        usize::from(a.case.is_some()) + usize::from(a.k2) + usize::from(a.reductions) + usize::from(a.limits);
    if modes != 1 {
        return Err(Error::Invalid(
            "pick exactly one of --case, --k2, --reductions, --limits".into(),
        ));
    }
    if a.case.is_none() && (a.q.is_some() || a.p.is_some()) {
        return Err(Error::Invalid("--q and --p only apply to --case".into()));
    }

    if let Some(id) = &a.case {
        let param = match (&a.q, &a.p) {
            (Some(_), Some(_)) => {
                return Err(Error::Invalid("give either --q or --p, not both".into()))
            }
            (Some(s), None) => Some(parse_rat_arg("--q", s)?),
            (None, Some(s)) => Some(parse_rat_arg("--p", s)?),
            (None, None) => None,
        };
        let report = catalog::verify_case(id, param.as_ref(), cfg)?;
        if as_json {
            emit(&case_report_json(&report, cfg));
        } else {
            print_case_report(&report);
        }
        return Ok(if report.passed { 0 } else { 1 });
    }

    if a.k2 {
        let report = catalog::verify_k2(cfg)?;
        if as_json {
            let mut doc = report.to_json();
            doc["seed"] = json!(seed_str(cfg));
            emit(&doc);
        } else {
            println!("kernel: {}", if report.kernel_ok { "ok" } else { "FAILED" });
            for (label, ok) in &report.cases {
                println!("  case {}: {}", label, if *ok { "ok" } else { "FAILED" });
            }
            for (label, ok) in &report.admissible {
                println!("  map {}: {}", label, if *ok { "ok" } else { "FAILED" });
            }
            for (label, ok) in &report.links {
                println!("  link {}: {}", label, if *ok { "ok" } else { "FAILED" });
            }
            if report.passed {
                println!(
                    "{} case records + {} admissible records verified",
                    report.cases.len(),
                    report.admissible.len()
                );
            } else {
                println!("FAIL");
            }
        }
        return Ok(if report.passed { 0 } else { 1 });
    }

    if a.reductions {
        let mut all = true;
        let mut rows = Vec::new();
        for rec in catalog::reductions()? {
            let ok = catalog::verify_reduction(&rec, cfg)?;
            all &= ok;
            rows.push((rec, ok));
        }
        if as_json {
            emit(&json!({
                "seed": seed_str(cfg),
                "reductions": rows.iter().map(|(rec, ok)| {
                    let mut doc = rec.to_json();
                    doc["verified"] = json!(ok);
                    doc
                }).collect::<Vec<_>>(),
                "passed": all,
            }));
        } else {
            for (rec, ok) in &rows {
                println!(
                    "reduction {} (omega = {}): {}",
                    rec.label,
                    rec.omega,
                    if *ok { "ok" } else { "FAILED" }
                );
            }
            println!("{}", if all { "PASS" } else { "FAIL" });
        }
        return Ok(if all { 0 } else { 1 });
    }

    // --limits
    let mut all = true;
    let mut reports = Vec::new();
    for rec in catalog::limits() {
        let q_test = match rec.label.as_str() {
            "8 -> 5" => Rat::from_integer(3.into()),
            _ => Rat::new(1.into(), 2.into()),
        };
        let rep = catalog::verify_limit(&rec, &q_test, cfg)?;
        all &= rep.passed;
        reports.push(rep);
    }
    if as_json {
        emit(&json!({
            "seed": seed_str(cfg),
            "limits": reports.iter().map(catalog::LimitReport::to_json).collect::<Vec<_>>(),
            "passed": all,
        }));
    } else {
        for rep in &reports {
            println!(
                "limit {} (q_test = {}): family {}, deviations {:.3e} > {:.3e} > {:.3e}: {}",
                rep.label,
                rep.q_test,
                if rep.matched.iter().all(|b| *b) { "matches" } else { "MISMATCH" },
                rep.deviations[0],
                rep.deviations[1],
                rep.deviations[2],
                if rep.passed { "ok" } else { "FAILED" }
            );
        }
        println!("{}", if all { "PASS" } else { "FAIL" });
    }
    Ok(if all { 0 } else { 1 })
}

fn cmd_invariants(a: &InvariantsArgs, cfg: &Config, as_json: bool) -> Result<i32> {
    let src = std::fs::read_to_string(&a.algebra)?;
    let s = parse_algebra_file(&src)?;
    if let Err(e) = check_subalgebra(&s, cfg) {
        match e {
            Error::Invalid(msg) => {
                eprintln!("invalid algebra: {msg}");
                return Ok(1);
            }
            other => return Err(other),
        }
    }
    let t = tuple12(&s, cfg)?;
    if as_json {
        emit(&json!({
            "seed": seed_str(cfg),
            "label": s.label,
            "n": s.n(),
            "tuple12": t.as_array().iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            "tuple5": t.tuple5().iter().map(|e| e.to_string()).collect::<Vec<_>>(),
        }));
    } else {
        println!("{t}");
        let five: Vec<String> = t.tuple5().iter().map(|e| e.to_string()).collect();
        println!("({})", five.join(","));
    }
    Ok(0)
}

fn cmd_hasse(a: &HasseArgs, global_json: bool) -> Result<i32> {
    if a.dot && global_json {
        return Err(Error::Invalid("pick one of --dot or --json".into()));
    }
    let h = poset::hasse(&poset::catalog_nodes()?);
    if global_json {
        println!("{}", poset::edges_json(&h));
    } else {
        print!("{}", poset::dot_export(&h));
    }
    Ok(0)
}

fn cmd_detect(a: &DetectArgs, cfg: &Config, as_json: bool) -> Result<i32> {
    let q = match &a.q {
        Some(s) => Some(parse_rat_arg("--q", s)?),
        None => None,
    };
    let mut sess = ParseSession::new();
    let fhat = parse_expr(&a.fhat, &mut sess)?;
    let sol = detect_template(&fhat, 6.max(cfg.trials as usize), cfg)?;
    let report = classify_extension(a.case, q.as_ref(), &sol)?;
    if as_json {
        let mut doc = report.to_json();
        doc["seed"] = json!(seed_str(cfg));
        doc["fhat"] = json!(fhat.to_string());
        doc["dimension"] = json!(sol.dim());
        emit(&doc);
    } else {
        println!("case {} with fhat = {}", report.case, fhat);
        println!("template solution space dimension: {}", sol.dim());
        for (v, ok) in report.solution_basis.iter().zip(&report.constraint_flags) {
            let coords = match &v.exact {
                Some(e) => {
                    let parts: Vec<String> = e.iter().map(Rat::to_string).collect();
                    format!("({})", parts.join(", "))
                }
                None => format!(
                    "({:.6}, {:.6}, {:.6}, {:.6}) [no exact certificate]",
                    v.float[0], v.float[1], v.float[2], v.float[3]
                ),
            };
            println!(
                "  vector {}: constraint {}",
                coords,
                if *ok { "satisfied" } else { "not satisfied" }
            );
        }
        match &report.target_case {
            Some(t) => println!("extension -> Case {t}"),
            None => println!("no extension"),
        }
    }
    Ok(0)
}
