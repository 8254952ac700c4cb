//! The `growth-lab` command line.
//!
//! Every flag can also come from a `--config` file of `key = value` lines
//! (`#` starts a comment). Flags given on the command line win; boolean
//! flags are written `quiet = true`.
//!
//! Exit codes: 0 when every exact check passed, 1 when an audit was
//! falsified or two computations disagreed, 2 for usage and resource errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::extremal::{build_extremal_set, verify_extremal, ExtremalResult, ExtremalVerification};
use crate::families::{FamilyKind, FamilySpec};
use crate::field::{find_primitive_root, is_prime, DlogTable, PrimeField};
use crate::grid::{falsified_bounds, fit_exponent, parse_plan, run_grid, AuditKind, AuditOptions, GridCell, GridOutcome};
use crate::incidence::DEFAULT_C_ST;
use crate::report::{emit_report, ReportFormat};
use crate::sets::{product_set, ratio_set, shifted_product, sumset, two_a_minus_two_a, FpSet};

#[derive(Debug, Parser)]
#[command(name = "growth-lab", version, about = "Exact set arithmetic over prime fields and audits of |A(A+1)|")]
pub struct Cli {
    /// Master seed; grid cell `i` runs with a seed derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write reports as JSON (for `extremal`: the construction document).
    #[arg(long, global = true, value_name = "PATH")]
    pub json: Option<PathBuf>,
    /// Write reports as CSV.
    #[arg(long, global = true, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// Print nothing but errors.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Read further flags from a `key = value` file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Primality, primitive root and discrete-log table checks.
    PrimeTools {
        #[arg(long)]
        p: u64,
        /// Print the smallest primitive root.
        #[arg(long)]
        root: bool,
        /// Build the discrete-log table and re-derive every entry.
        #[arg(long)]
        table_check: bool,
    },
    /// One set operation, printed as sorted CSV plus its cardinality.
    Setops {
        #[arg(long)]
        p: u64,
        /// Comma-separated residues.
        #[arg(long)]
        a: String,
        /// Second operand of `sum` and `prod` (defaults to A).
        #[arg(long)]
        b: Option<String>,
        #[arg(long, value_enum)]
        op: SetOp,
    },
    /// The extremal set with small |A(A+1)|.
    Extremal {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n: u64,
        /// Recompute A(A+1) by brute force and check both upper bounds.
        #[arg(long)]
        verify: bool,
    },
    /// J-count sandwich and character bounds on random triples.
    Thm2(TrialArgs),
    /// Exact incidence audit of the Elekes configuration.
    Thm3 {
        #[command(flatten)]
        trials: TrialArgs,
        /// Constant in the Szemerédi–Trotter comparison.
        #[arg(long, default_value_t = DEFAULT_C_ST)]
        c_st: f64,
    },
    /// Steps of the growth argument, checked exactly.
    Prooflab {
        #[arg(value_enum, value_name = "STEP")]
        which: ProofStep,
        #[command(flatten)]
        trials: TrialArgs,
    },
    /// Runs a plan file of `<audit> kind=.. p=.. size=..` lines.
    Grid {
        #[arg(long)]
        plan: PathBuf,
        /// Szemerédi–Trotter constant for `thm3` cells.
        #[arg(long, default_value_t = DEFAULT_C_ST)]
        c_st: f64,
    },
    /// Least-squares exponent of `v ~ n^beta`.
    Fit {
        /// Points as `n:v,n:v,...`.
        #[arg(long, conflicts_with = "input")]
        points: Option<String>,
        /// CSV file of `n,v` rows (a non-numeric first row is a header).
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct TrialArgs {
    /// Prime modulus (ignored by `thm3`).
    #[arg(long, default_value_t = 101)]
    pub p: u64,
    #[arg(long)]
    pub size: u64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, value_enum, default_value_t = FamilyKind::Random)]
    pub family: FamilyKind,
    #[arg(long, allow_hyphen_values = true)]
    pub start: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub step: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SetOp {
    Sum,
    Prod,
    Shifted,
    Ratio,
    #[value(name = "2a-2a")]
    TwoAMinusTwoA,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProofStep {
    Anchor,
    Levels,
    Injection,
    Bsg,
    Ruzsa,
    Lemma2,
    Thm1,
}

impl From<ProofStep> for AuditKind {
    fn from(s: ProofStep) -> Self {
        match s {
            ProofStep::Anchor => AuditKind::Anchor,
            ProofStep::Levels => AuditKind::Levels,
            ProofStep::Injection => AuditKind::Injection,
            ProofStep::Bsg => AuditKind::Bsg,
            ProofStep::Ruzsa => AuditKind::Ruzsa,
            ProofStep::Lemma2 => AuditKind::Lemma2,
            ProofStep::Thm1 => AuditKind::Thm1,
        }
    }
}

/// The `extremal --json` document.
#[derive(Debug, Serialize)]
pub struct ExtremalDocument {
    pub schema: u32,
    #[serde(flatten)]
    pub result: ExtremalResult,
    pub verification: Option<ExtremalVerification>,
}

/// Parses `args` (including the program name), runs the command, and
/// returns the process exit code. Normal output goes to `out`, errors to
/// stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match with_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Appends the flags of a `--config` file that the command line does not
/// already set.
fn with_config(mut args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        let a = a.to_string_lossy();
        if a == "--config" {
            path = args.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| LabError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let given: Vec<String> = args
        .iter()
        .filter_map(|a| a.to_str())
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim().replace('_', "-"), v.trim()))
            .ok_or_else(|| LabError::Usage(format!("config line {}: expected key = value", n + 1)))?;
        if key == "config" || given.contains(&key) {
            continue;
        }
        match value {
            "true" => args.push(format!("--{key}").into()),
            "false" => {}
            v => {
                args.push(format!("--{key}").into());
                args.push(v.into());
            }
        }
    }
    Ok(args)
}

fn parse_csv_set(p: u64, text: &str) -> Result<FpSet> {
    let values = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<i64>().map_err(|_| LabError::Usage(format!("bad residue `{s}`"))))
        .collect::<Result<Vec<_>>>()?;
    FpSet::new(p, values)
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let mut say = |line: String| -> Result<()> {
        if !cli.quiet {
            writeln!(out, "{line}")?;
        }
        Ok(())
    };
    match &cli.command {
        Command::PrimeTools { p, root, table_check } => {
            let prime = is_prime(*p);
            say(format!("p={p}"))?;
            say(format!("prime={prime}"))?;
            if *root || *table_check {
                if !prime {
                    return Err(LabError::Domain(format!("{p} is not prime")));
                }
                say(format!("root={}", find_primitive_root(*p)?))?;
            }
            if *table_check {
                DlogTable::build(PrimeField::new(*p)?)?.verify()?;
                say("table_check=ok".into())?;
            }
            Ok(())
        }
        Command::Setops { p, a, b, op } => {
            let a = parse_csv_set(*p, a)?;
            let b = match b {
                Some(b) => parse_csv_set(*p, b)?,
                None => a.clone(),
            };
            let result = match op {
                SetOp::Sum => sumset(&a, &b)?,
                SetOp::Prod => product_set(&a, &b)?,
                SetOp::Shifted => shifted_product(&a),
                SetOp::Ratio => ratio_set(&a)?,
                SetOp::TwoAMinusTwoA => two_a_minus_two_a(&a),
            };
            say(result.to_string())?;
            say(format!("cardinality={}", result.len()))
        }
        Command::Extremal { p, n, verify } => {
            let result = build_extremal_set(*p, *n)?;
            say(format!(
                "p={} n={} g={} m={} l={} card_a={} window_count={}",
                result.p,
                result.n,
                result.g,
                result.m,
                result.l,
                result.a.len(),
                result.window_count
            ))?;
            let verification = if *verify || cli.json.is_some() || cli.csv.is_some() {
                let v = verify_extremal(&result)?;
                say(format!(
                    "shifted_card={} two_m={} sqrt_bound={:.6} ratio_two_m={:.6} ratio_sqrt_pa={:.6} containment={}",
                    v.shifted_card, v.two_m, v.sqrt_bound, v.ratio_two_m, v.ratio_sqrt_pa, v.containment
                ))?;
                Some(v)
            } else {
                None
            };
            if let Some(path) = &cli.json {
                let doc = ExtremalDocument {
                    schema: crate::report::SCHEMA_VERSION,
                    result,
                    verification,
                };
                std::fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")?;
            }
            if let Some(path) = &cli.csv {
                let spec = FamilySpec::new(FamilyKind::Extremal, *p, *n, cli.seed);
                let cells = [GridCell { audit: AuditKind::Extremal, family: spec }];
                let outcome = run_grid(&cells, cli.seed, &AuditOptions::default())?;
                emit_report(&outcome.reports, ReportFormat::Csv, path)?;
            }
            Ok(())
        }
        Command::Thm2(t) => trials(cli, AuditKind::Thm2, t, DEFAULT_C_ST, &mut say),
        Command::Thm3 { trials: t, c_st } => trials(cli, AuditKind::Thm3, t, *c_st, &mut say),
        Command::Prooflab { which, trials: t } => trials(cli, (*which).into(), t, DEFAULT_C_ST, &mut say),
        Command::Grid { plan, c_st } => {
            let text = std::fs::read_to_string(plan)?;
            let cells = parse_plan(&text)?;
            let outcome = run_grid(&cells, cli.seed, &AuditOptions { c_st: *c_st })?;
            finish(cli, &outcome, &mut say)
        }
        Command::Fit { points, input } => {
            let pairs = match (points, input) {
                (Some(text), _) => parse_points(text)?,
                (None, Some(path)) => read_points(path)?,
                (None, None) => return Err(LabError::Usage("fit needs --points or --input".into())),
            };
            let fit = fit_exponent(&pairs)?;
            say(format!("beta={} intercept={} r_squared={}", fit.beta, fit.intercept, fit.r_squared))?;
            if let Some(path) = &cli.json {
                std::fs::write(path, serde_json::to_string_pretty(&fit)? + "\n")?;
            }
            Ok(())
        }
    }
}

fn trials(
    cli: &Cli,
    audit: AuditKind,
    t: &TrialArgs,
    c_st: f64,
    say: &mut dyn FnMut(String) -> Result<()>,
) -> Result<()> {
    let mut spec = FamilySpec::new(t.family, t.p, t.size, cli.seed);
    spec.start = t.start;
    spec.step = t.step;
    let cells: Vec<GridCell> = (0..t.trials).map(|_| GridCell { audit, family: spec.clone() }).collect();
    let outcome = run_grid(&cells, cli.seed, &AuditOptions { c_st })?;
    finish(cli, &outcome, say)
}

fn finish(cli: &Cli, outcome: &GridOutcome, say: &mut dyn FnMut(String) -> Result<()>) -> Result<()> {
    for r in &outcome.reports {
        let sizes: Vec<String> = r.sizes.iter().map(|(k, v)| format!("{k}={v}")).collect();
        say(format!("{} {} {}", r.run_id, r.audit, sizes.join(" ")))?;
        for b in &r.bounds {
            let ratio = b.ratio.map_or("-".to_string(), |x| x.to_string());
            let verdict = if b.holds { "ok" } else { "FAIL" };
            say(format!(
                "  {} {} {} {} ratio={ratio} {verdict}",
                b.name,
                b.lhs,
                b.relation.symbol(),
                b.rhs
            ))?;
        }
        for (k, v) in &r.flags {
            say(format!("  {k}={v}"))?;
        }
    }
    for (audit, s) in &outcome.summary {
        say(format!("summary {audit}: cells={} passing={}", s.cells, s.all_pass))?;
        for (name, st) in &s.ratios {
            say(format!("  {name}: min={:.6} median={:.6}", st.min, st.median))?;
        }
    }
    if let Some(path) = &cli.json {
        emit_report(&outcome.reports, ReportFormat::Json, path)?;
    }
    if let Some(path) = &cli.csv {
        emit_report(&outcome.reports, ReportFormat::Csv, path)?;
    }
    let failed: Vec<String> = outcome
        .reports
        .iter()
        .flat_map(|r| falsified_bounds(r).map(move |b| format!("{} {}", r.run_id, b.name)))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(LabError::Falsified(format!("asserted bounds failed: {}", failed.join(", "))))
    }
}

fn parse_point(a: &str, b: &str) -> Result<(f64, f64)> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| LabError::Usage(format!("bad number `{s}`")));
    Ok((num(a)?, num(b)?))
}

fn parse_points(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (n, v) = pair
                .split_once(':')
                .ok_or_else(|| LabError::Usage(format!("expected n:v, got `{pair}`")))?;
            parse_point(n, v)
        })
        .collect()
}

fn read_points(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut pairs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let (Some(n), Some(v)) = (rec.get(0), rec.get(1)) else {
            return Err(LabError::Usage(format!("row {} needs two columns", i + 1)));
        };
        match parse_point(n, v) {
            Ok(p) => pairs.push(p),
            Err(_) if i == 0 => {}
            Err(e) => return Err(e),
        }
    }
    Ok(pairs)
}
