//! Command dispatch for the `weylflow` binary.
//!
//! Exit codes: 0 success, 1 a verification failed, 2 usage or input error.
//! Errors are written to stderr as one JSON object per line.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::applications::{act_on_plane_waves, builtin_example, builtin_examples, composition_demo};
use crate::flows::{self, FlowResult, Realization};
use crate::specfile::{LoadedSpec, SpecError, SpecFile};
use crate::weyl;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "weylflow", version, about = "Normal-ordered exponentials in the Weyl-Heisenberg algebra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute J, phi and h for a realization file.
    Expand {
        spec: PathBuf,
        #[arg(long)]
        kmax: Option<u32>,
        /// Human-readable series instead of JSON.
        #[arg(long)]
        pretty: bool,
    },
    /// Run residual, consistency and oracle checks.
    Verify {
        spec: PathBuf,
        #[arg(long)]
        kmax: Option<u32>,
    },
    /// Compose the flows of two realizations and check the product.
    Compose {
        first: PathBuf,
        second: PathBuf,
        #[arg(long)]
        kmax: Option<u32>,
    },
    /// Deformed momentum and phase of plane waves.
    Eval {
        spec: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        k: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        q: Vec<f64>,
        /// JSON-lines file of {"k": [...], "q": [...]} points.
        #[arg(long)]
        points: Option<PathBuf>,
        #[arg(long)]
        kmax: Option<u32>,
    },
    /// List built-in realizations, or print one as a spec file.
    Examples { name: Option<String> },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Spec(SpecError),
    Compute(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Spec(_) => "spec",
            CliError::Compute(_) => "compute",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Compute(m) => m.clone(),
            CliError::Spec(e) => e.to_string(),
        }
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        CliError::Spec(e)
    }
}

fn compute_err(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

fn load_spec(path: &Path, kmax: Option<u32>, err: &mut dyn Write) -> Result<LoadedSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let spec = SpecFile::from_toml(&text)?;
    let mut loaded = spec.load()?;
    if let Some(k) = kmax {
        loaded.kmax = k;
        loaded.warnings.retain(|w| !w.starts_with("kmax not given"));
    }
    for w in &loaded.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    Ok(loaded)
}

/// Renders a flow result as text, one series per line.
pub fn pretty_flow(fr: &FlowResult) -> String {
    let mut out = format!("kmax = {}\n", fr.kmax);
    for (mu, j) in fr.j.iter().enumerate() {
        out.push_str(&format!("J_{mu} = {j}\n"));
    }
    for (mu, p) in fr.phi.iter().enumerate() {
        out.push_str(&format!("phi_{mu} = {p}\n"));
    }
    out.push_str(&format!("h = {}\n", fr.h));
    out
}

#[derive(Debug, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub skipped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: Option<serde_json::Value>) -> Self {
        Self {
            name,
            passed,
            skipped: false,
            detail: if passed { None } else { detail },
        }
    }

    fn skipped(name: &'static str, why: &str) -> Self {
        Self {
            name,
            passed: true,
            skipped: true,
            detail: Some(json!(why)),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kmax: u32,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

/// Every check `verify` runs, in order.
pub fn verify_realization(name: Option<String>, r: &Realization, kmax: u32) -> Result<VerifyReport, CliError> {
    let mut checks = Vec::new();
    let (from_j, combinator) = flows::phi_two_ways(r, kmax).map_err(compute_err)?;
    checks.push(CheckOutcome::new("phi_two_ways", from_j == combinator, None));

    let fr = flows::compute_flow(r, kmax).map_err(compute_err)?;
    let inv = fr.check(r.metric());
    checks.push(CheckOutcome::new(
        "flow_invariants",
        inv.is_ok(),
        inv.err().map(|e| json!(e.to_string())),
    ));

    let res_j = flows::ode_residual_j(r, &fr.j).map_err(compute_err)?;
    checks.push(CheckOutcome::new(
        "ode_residual_J",
        res_j.iter().all(|s| s.is_zero()),
        Some(json!(res_j)),
    ));
    let res_h = flows::ode_residual_h(r, &fr.j, &fr.h).map_err(compute_err)?;
    checks.push(CheckOutcome::new("ode_residual_h", res_h.is_zero(), Some(json!(res_h))));

    let third = flows::third_order_j(r).map_err(compute_err)?;
    let j3 = flows::compute_j(r, 3).map_err(compute_err)?;
    checks.push(CheckOutcome::new("third_order_J", third == j3, Some(json!(third))));

    if r.is_polynomial() {
        let v = weyl::verify_normal_ordering(r, kmax).map_err(compute_err)?;
        checks.push(CheckOutcome::new("normal_ordering_oracle", v.equal, Some(json!(v.discrepancy))));
        let b = weyl::verify_bch(r, kmax).map_err(compute_err)?;
        checks.push(CheckOutcome::new("bch_order_3", b.equal, Some(json!(b.discrepancy))));
    } else {
        checks.push(CheckOutcome::skipped("normal_ordering_oracle", "realization has a p-degree cap"));
        checks.push(CheckOutcome::skipped("bch_order_3", "realization has a p-degree cap"));
    }
    Ok(VerifyReport {
        name,
        kmax,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

#[derive(Deserialize)]
struct PointLine {
    k: Vec<f64>,
    q: Vec<f64>,
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let write_err = |e: io::Error| CliError::Io(e.to_string());
    match cli.command {
        Command::Expand { spec, kmax, pretty } => {
            let loaded = load_spec(&spec, kmax, err)?;
            let fr = flows::compute_flow(&loaded.realization, loaded.kmax).map_err(compute_err)?;
            if pretty {
                write!(out, "{}", pretty_flow(&fr)).map_err(write_err)?;
            } else {
                let text = serde_json::to_string_pretty(&fr).map_err(compute_err)?;
                writeln!(out, "{text}").map_err(write_err)?;
            }
            Ok(EXIT_OK)
        }
        Command::Verify { spec, kmax } => {
            let loaded = load_spec(&spec, kmax, err)?;
            let report = verify_realization(loaded.name, &loaded.realization, loaded.kmax)?;
            let text = serde_json::to_string_pretty(&report).map_err(compute_err)?;
            writeln!(out, "{text}").map_err(write_err)?;
            Ok(if report.passed { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Compose { first, second, kmax } => {
            let a = load_spec(&first, kmax, err)?;
            let b = load_spec(&second, kmax, err)?;
            let order = kmax.unwrap_or(a.kmax.min(b.kmax));
            let report = composition_demo(&a.realization, &b.realization, order).map_err(compute_err)?;
            let text = serde_json::to_string_pretty(&report).map_err(compute_err)?;
            writeln!(out, "{text}").map_err(write_err)?;
            Ok(if report.oracle.equal { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Eval { spec, k, q, points, kmax } => {
            let loaded = load_spec(&spec, kmax, err)?;
            let mut pts = Vec::new();
            if let Some(path) = points {
                let text = fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                    let p: PointLine = serde_json::from_str(line)
                        .map_err(|e| CliError::Usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
                    pts.push((p.k, p.q));
                }
            }
            if !k.is_empty() || !q.is_empty() {
                pts.push((k, q));
            }
            if pts.is_empty() {
                return Err(CliError::Usage("eval needs --k and --q, or --points".into()));
            }
            let n = loaded.realization.n();
            if let Some((bk, bq)) = pts.iter().find(|(a, b)| a.len() != n || b.len() != n) {
                return Err(CliError::Usage(format!(
                    "k and q need {n} components each, got {} and {}",
                    bk.len(),
                    bq.len()
                )));
            }
            let images = act_on_plane_waves(&loaded.realization, &pts, loaded.kmax).map_err(compute_err)?;
            for img in images {
                let line = serde_json::to_string(&img).map_err(compute_err)?;
                writeln!(out, "{line}").map_err(write_err)?;
            }
            Ok(EXIT_OK)
        }
        Command::Examples { name: None } => {
            for ex in builtin_examples() {
                writeln!(out, "{}\t{}", ex.name, ex.description).map_err(write_err)?;
            }
            Ok(EXIT_OK)
        }
        Command::Examples { name: Some(name) } => {
            let ex = builtin_example(&name).ok_or_else(|| CliError::Usage(format!("no built-in example named {name:?}")))?;
            write!(out, "{}", SpecFile::from_named(&ex).to_toml()).map_err(write_err)?;
            Ok(EXIT_OK)
        }
    }
}

/// Runs one command line (including the program name) against the given
/// output streams and returns the exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let _ = writeln!(err, "{}", json!({"error": "usage", "message": e.to_string().trim_end()}));
            return EXIT_USAGE;
        }
    };
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{}", json!({"error": e.kind(), "message": e.message()}));
            EXIT_USAGE
        }
    }
}

pub fn main_entry() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    let _ = io::stdout().flush();
    code
}
