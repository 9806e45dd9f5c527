//! Command-line front end: coderivative queries, monotonicity and convexity
//! checks, and the self-verifying fixture catalog.
//!
//! Machine-readable JSON goes to stdout (byte-identical for a fixed seed and
//! config); human summaries go to stderr. Exit codes: 0 success or expected
//! verdict, 1 refuted expectation, 2 input error.

mod fixtures;

use clap::{Args, Parser, Subcommand};
use monocone::coderivative::{limiting_coderivative, regular_coderivative};
use monocone::convexity::{
    convexity_check_second_order, strong_convexity_check, ConvexityConfig,
};
use monocone::error::Error;
use monocone::jsonio;
use monocone::monotonicity::{
    default_close_schedule, hypomonotonicity_estimate, maximality_decision,
    pairwise_monotone_test, DecisionConfig,
};
use monocone::operator::{graph_sample, GraphPoint, SampleConfig};
use monocone::rat::{parse_rat, RVec, Rat};
use monocone::report;
use num_traits::{Signed, Zero};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "monocone")]
#[command(about = "Exact coderivative analysis of set-valued operators: monotonicity and convexity certification")]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Args, Clone)]
struct RunFlags {
    /// RNG seed for sampling plans
    #[arg(long, default_value_t = 17)]
    seed: u64,
    /// Sampling region per axis, as "lo:hi" with rational endpoints
    #[arg(long, default_value = "-2:2")]
    region: String,
    /// Grid density per axis
    #[arg(long, default_value_t = 5)]
    density: usize,
    /// Write the report (plus a timestamp sidecar) to this file as well
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Commands {
    /// Query a coderivative value at a graph point
    Coderivative {
        /// Operator spec JSON file
        spec: PathBuf,
        /// Graph point (u,v) as comma-separated rationals, length 2n
        #[arg(long)]
        point: String,
        /// Direction w, comma-separated rationals, length n
        #[arg(long)]
        dir: String,
        /// regular | limiting | both
        #[arg(long, default_value = "regular")]
        kind: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pairwise monotonicity sweep and hypomonotonicity estimate
    CheckMonotone {
        spec: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Full maximal-monotonicity decision with certificates
    CheckMaximal {
        spec: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
        /// Request a strong-monotonicity verdict at this modulus
        #[arg(long)]
        kappa: Option<String>,
        /// Shift s for the Minty cross-check (default max(2r̂, r̂+1))
        #[arg(long = "shift-s")]
        shift_s: Option<String>,
    },
    /// Convexity / strong convexity of a max-quad function
    CheckConvex {
        /// Function spec JSON file ({"dim": n, "pieces": [...]})
        func: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
        /// Strong-convexity modulus (runs the dual-route check)
        #[arg(long)]
        kappa: Option<String>,
    },
    /// List, run, or export the built-in fixture catalog
    Fixtures {
        #[command(subcommand)]
        action: FixtureAction,
    },
}

#[derive(Subcommand)]
enum FixtureAction {
    /// Print the catalog
    List,
    /// Run all fixtures (or one) and compare against expected verdicts
    Run {
        name: Option<String>,
        #[arg(long, default_value_t = 17)]
        seed: u64,
    },
    /// Write fixture spec files into a directory
    Export {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_json(path: &Path) -> Result<Value, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        Error::Parse(format!("{}: line {} column {}: {e}", path.display(), e.line(), e.column()))
    })
}

fn parse_rat_list(s: &str, what: &str) -> Result<RVec, Error> {
    s.split(',')
        .map(|tok| parse_rat(tok.trim()).map_err(|e| Error::Parse(format!("{what}: {e}"))))
        .collect()
}

fn parse_region(s: &str, dim: usize) -> Result<(RVec, RVec), Error> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("region {s:?}: expected \"lo:hi\"")))?;
    let lo = parse_rat(lo.trim()).map_err(Error::Parse)?;
    let hi = parse_rat(hi.trim()).map_err(Error::Parse)?;
    Ok((vec![lo; dim], vec![hi; dim]))
}

fn emit(report: &Value, out: Option<&Path>) -> Result<(), Error> {
    let canonical = report::to_canonical_string(report);
    print!("{canonical}");
    if let Some(path) = out {
        let wrapped = json!({
            "report": report,
            "sidecar": {
                "written_unix_ms": std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_millis() as u64)
                    .unwrap_or(0),
            },
        });
        std::fs::write(path, report::to_canonical_string(&wrapped))
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// Compares the computed verdict with an optional "expected" field in the
/// input file; a mismatch flips the exit code to 1.
fn expectation_code(input: &Value, got: &str) -> ExitCode {
    match input.get("expected").and_then(|e| e.as_str()) {
        Some(expected) if expected != got => {
            eprintln!("expectation refuted: expected {expected}, got {got}");
            ExitCode::from(1)
        }
        _ => ExitCode::SUCCESS,
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Commands::Coderivative { spec, point, dir, kind, out } => {
            let input = load_json(&spec)?;
            let op = jsonio::operator_from_json(&input, "$")?;
            let n = op.dim();
            let uv = parse_rat_list(&point, "--point")?;
            if uv.len() != 2 * n {
                return Err(Error::DimensionMismatch { expected: 2 * n, got: uv.len() });
            }
            let w = parse_rat_list(&dir, "--dir")?;
            if w.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: w.len() });
            }
            let p = GraphPoint {
                u: uv[..n].to_vec(),
                v: uv[n..].to_vec(),
                provenance: "cli".into(),
            };
            let mut reports = Vec::new();
            if kind == "regular" || kind == "both" {
                let cv = regular_coderivative(&op, &p, &w)?;
                reports.push(jsonio::coderivative_to_json(&cv, "regular"));
            }
            if kind == "limiting" || kind == "both" {
                let cv = limiting_coderivative(&op, &p, &w)?;
                reports.push(jsonio::coderivative_to_json(&cv, "limiting"));
            }
            if reports.is_empty() {
                return Err(Error::Parse(format!(
                    "--kind {kind:?}: expected regular, limiting, or both"
                )));
            }
            let report = if reports.len() == 1 {
                reports.pop().unwrap()
            } else {
                Value::Array(reports)
            };
            eprintln!("coderivative query ok");
            emit(&report, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Commands::CheckMonotone { spec, flags } => {
            let input = load_json(&spec)?;
            let op = jsonio::operator_from_json(&input, "$")?;
            let (lo, hi) = parse_region(&flags.region, op.dim())?;
            let cfg = SampleConfig::new(lo, hi, flags.density, flags.seed, Rat::zero())?;
            let samples = graph_sample(&op, &cfg)?;
            let pairwise = pairwise_monotone_test(&samples)?;
            let (_, hypo) = hypomonotonicity_estimate(&op, &samples, &default_close_schedule())?;
            let report = json!({
                "config": config_echo(&flags, None, None),
                "pairwise": report::pairwise_to_json(&pairwise),
                "hypomonotonicity": report::hypo_to_json(&hypo),
            });
            eprintln!(
                "monotone on samples: {} | r_hat: {}",
                pairwise.monotone_on_samples,
                hypo.r_hat.to_f64()
            );
            emit(&report, flags.out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Commands::CheckMaximal { spec, flags, kappa, shift_s } => {
            let input = load_json(&spec)?;
            let op = jsonio::operator_from_json(&input, "$")?;
            let (lo, hi) = parse_region(&flags.region, op.dim())?;
            let kappa_r = kappa
                .as_deref()
                .map(|s| parse_rat(s).map_err(Error::Parse))
                .transpose()?;
            let shift_r = shift_s
                .as_deref()
                .map(|s| parse_rat(s).map_err(Error::Parse))
                .transpose()?;
            let mut cfg = DecisionConfig::default_for(&op);
            cfg.sample = SampleConfig::new(lo, hi, flags.density, flags.seed, Rat::zero())?;
            cfg.kappa = kappa_r.clone();
            cfg.shift_s = shift_r.clone();
            let rep = maximality_decision(&op, &cfg)?;
            let label = fixtures::verdict_label(&rep.verdict);
            let mut report = report::decision_to_json(&rep);
            report.as_object_mut().unwrap().insert(
                "config".into(),
                config_echo(&flags, kappa_r.as_ref(), shift_r.as_ref()),
            );
            eprintln!("verdict: {label}");
            emit(&report, flags.out.as_deref())?;
            Ok(expectation_code(&input, label))
        }
        Commands::CheckConvex { func, flags, kappa } => {
            let input = load_json(&func)?;
            let f = jsonio::maxquad_from_json(&input, "$")?;
            let kappa_r = kappa
                .as_deref()
                .map(|s| parse_rat(s).map_err(Error::Parse))
                .transpose()?;
            let (lo, hi) = parse_region(&flags.region, f.dim)?;
            let mut cfg = ConvexityConfig::default_for(&f);
            cfg.sample = SampleConfig::new(lo, hi, flags.density, flags.seed, Rat::zero())?;
            let (label, mut report) = match &kappa_r {
                Some(k) if k.is_positive() => {
                    let rep = strong_convexity_check(&f, k, &cfg)?;
                    let label = fixtures::convexity_label(&rep.verdict);
                    (label, report::strong_convexity_to_json(&rep))
                }
                _ => {
                    let rep = convexity_check_second_order(&f, &Rat::zero(), &cfg)?;
                    let label = fixtures::convexity_label(&rep.verdict);
                    (label, report::convexity_to_json(&rep))
                }
            };
            report.as_object_mut().unwrap().insert(
                "config".into(),
                config_echo(&flags, kappa_r.as_ref(), None),
            );
            eprintln!("verdict: {label}");
            emit(&report, flags.out.as_deref())?;
            Ok(expectation_code(&input, label))
        }
        Commands::Fixtures { action } => run_fixtures(action),
    }
}

fn config_echo(flags: &RunFlags, kappa: Option<&Rat>, shift: Option<&Rat>) -> Value {
    json!({
        "seed": flags.seed,
        "region": flags.region,
        "density": flags.density,
        "kappa": kappa.map(jsonio::rat_to_json),
        "shift_s": shift.map(jsonio::rat_to_json),
    })
}

fn run_fixtures(action: FixtureAction) -> Result<ExitCode, Error> {
    match action {
        FixtureAction::List => {
            let cat = fixtures::catalog();
            eprintln!("{:<22} {:<24} description", "name", "expected");
            let mut rows = Vec::new();
            for fx in &cat {
                eprintln!("{:<22} {:<24} {}", fx.name, fx.expected, fx.description);
                rows.push(json!({
                    "name": fx.name,
                    "expected": fx.expected,
                    "description": fx.description,
                }));
            }
            emit(&Value::Array(rows), None)?;
            Ok(ExitCode::SUCCESS)
        }
        FixtureAction::Run { name, seed } => {
            let _ = seed;
            let cat = fixtures::catalog();
            let selected: Vec<&fixtures::Fixture> = match &name {
                Some(n) => {
                    let hit: Vec<_> = cat.iter().filter(|f| f.name == n.as_str()).collect();
                    if hit.is_empty() {
                        return Err(Error::Parse(format!("no fixture named {n:?}")));
                    }
                    hit
                }
                None => cat.iter().collect(),
            };
            let mut all_pass = true;
            let mut rows = Vec::new();
            eprintln!("{:<22} {:<16} {:<16} status", "name", "expected", "got");
            for fx in selected {
                let outcome = fixtures::run_fixture(fx)?;
                eprintln!(
                    "{:<22} {:<16} {:<16} {}",
                    outcome.name,
                    outcome.expected,
                    outcome.got,
                    if outcome.pass { "PASS" } else { "FAIL" }
                );
                all_pass &= outcome.pass;
                rows.push(json!({
                    "name": outcome.name,
                    "expected": outcome.expected,
                    "got": outcome.got,
                    "pass": outcome.pass,
                }));
            }
            emit(&Value::Array(rows), None)?;
            Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        FixtureAction::Export { dir } => {
            std::fs::create_dir_all(&dir)
                .map_err(|e| Error::Parse(format!("{}: {e}", dir.display())))?;
            let mut count = 0usize;
            for fx in fixtures::catalog() {
                let mut body = match &fx.payload {
                    fixtures::FixturePayload::Operator(spec) => jsonio::operator_to_json(spec),
                    fixtures::FixturePayload::Function(f) => jsonio::maxquad_to_json(f),
                };
                let obj = body.as_object_mut().expect("object body");
                obj.insert("name".into(), json!(fx.name));
                obj.insert("description".into(), json!(fx.description));
                obj.insert("expected".into(), json!(fx.expected));
                let path = dir.join(format!("{}.json", fx.name));
                std::fs::write(&path, report::to_canonical_string(&body))
                    .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
                count += 1;
            }
            eprintln!("wrote {count} fixture files to {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

