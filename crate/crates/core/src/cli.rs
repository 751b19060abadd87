//! Command-line front end: config files, reports and exit codes.
//!
//! Exit codes: `0` every audit passed, `1` an audit failed, `2` bad input.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::Deserialize;
use toml::Spanned;

use crate::bounds::BoundReport;
use crate::caching::{DemandVector, SystemParams};
use crate::dist::{rational_from_f64, Alphabet, JointModel, Rational};
use crate::error::Error;
use crate::pipeline::{bounds_only, run, simulate_trials, DemandSet, ExperimentConfig, RunOutput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_AUDIT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Decimal places for lengths and bounds in reports.
pub const LENGTH_DIGITS: u32 = 6;
/// Decimal places for leakage in reports.
pub const LEAKAGE_DIGITS: u32 = 9;

#[derive(Debug, Parser)]
#[command(name = "privcache", version, about = "Private coded-caching codes with exact leakage audits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and audit the code for every demand vector, then write report.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        epsilon: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// `all`, or one-based vectors such as `1,2;2,1`.
        #[arg(long)]
        demands: Option<String>,
    },
    /// Print the closed-form bounds without building codes.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        epsilon: Option<f64>,
    },
    /// Monte Carlo encode/decode runs checked against the exact expectation.
    Trials {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Input problems, reported with exit code 2.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum InputError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    At { path: String, line: usize, message: String },
    #[error("{0}")]
    Invalid(#[from] Error),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    fn as_f64(&self) -> f64 {
        match *self {
            Number::Int(i) => i as f64,
            Number::Float(f) => f,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RationalText {
    Int(i64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum DemandsValue {
    Keyword(String),
    List(Vec<Vec<usize>>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PmfEntry {
    x: Spanned<String>,
    y: Spanned<Vec<u64>>,
    p: Spanned<String>,
}

/// The on-disk experiment description.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDocument {
    #[serde(rename = "N")]
    n: Spanned<usize>,
    #[serde(rename = "K")]
    k: Spanned<usize>,
    #[serde(rename = "F")]
    f: Spanned<u32>,
    #[serde(rename = "M")]
    m: Spanned<RationalText>,
    #[serde(rename = "T")]
    t: Option<Spanned<u64>>,
    x_alphabet: Spanned<Vec<String>>,
    pmf: Vec<Spanned<PmfEntry>>,
    epsilon: Option<Spanned<Number>>,
    seed: Option<u64>,
    demands: Option<Spanned<DemandsValue>>,
}

struct Source<'a> {
    path: &'a str,
    text: &'a str,
}

impl Source<'_> {
    fn line_of(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())].matches('\n').count() + 1
    }

    fn at<T>(&self, span: &Spanned<T>, message: impl Into<String>) -> InputError {
        InputError::At {
            path: self.path.to_string(),
            line: self.line_of(span.span().start),
            message: message.into(),
        }
    }
}

fn parse_rational(text: &str) -> Option<Rational> {
    text.trim().parse::<Rational>().ok()
}

/// Parses a config document from text. `path` only labels diagnostics.
pub fn parse_config(path: &str, text: &str) -> Result<ExperimentConfig, InputError> {
    let src = Source { path, text };
    let doc: ConfigDocument = toml::from_str(text).map_err(|e| match e.span() {
        Some(span) => InputError::At {
            path: path.to_string(),
            line: src.line_of(span.start),
            message: e.message().to_string(),
        },
        None => InputError::Io {
            path: path.to_string(),
            message: e.message().to_string(),
        },
    })?;

    let labels = doc.x_alphabet.get_ref().clone();
    let alphabet = Alphabet::new(labels.clone()).map_err(|e| src.at(&doc.x_alphabet, e.to_string()))?;
    let t = match &doc.t {
        Some(t) => *t.get_ref(),
        None => labels.len() as u64,
    };

    let m = match doc.m.get_ref() {
        RationalText::Int(i) => Some(Rational::from_integer(BigInt::from(*i))),
        RationalText::Text(s) => parse_rational(s),
    }
    .ok_or_else(|| src.at(&doc.m, "M must be an integer or an \"a/b\" rational"))?;

    let params = SystemParams::new(*doc.n.get_ref(), *doc.k.get_ref(), *doc.f.get_ref(), m, t)
        .map_err(|e| src.at(&doc.m, e.to_string()))?;

    let first_pmf_line = doc.pmf.first().map(|e| e.span().start).unwrap_or(0);
    let mut seen = BTreeMap::new();
    let mut total = Rational::zero();
    let mut entries = Vec::with_capacity(doc.pmf.len());
    for entry in &doc.pmf {
        let e = entry.get_ref();
        let x = alphabet
            .position(e.x.get_ref())
            .ok_or_else(|| src.at(&e.x, format!("x label {:?} is not in x_alphabet", e.x.get_ref())))?;
        let ys = e.y.get_ref().clone();
        if ys.len() != params.files() {
            return Err(src.at(&e.y, format!("y has {} entries for N = {} files", ys.len(), params.files())));
        }
        let p = parse_rational(e.p.get_ref())
            .ok_or_else(|| src.at(&e.p, format!("p = {:?} is not an \"a/b\" rational", e.p.get_ref())))?;
        if p.is_negative() {
            return Err(src.at(&e.p, format!("negative probability {p}")));
        }
        let line = src.line_of(entry.span().start);
        if let Some(first) = seen.insert((x, ys.clone()), line) {
            return Err(src.at(entry, format!("outcome repeats the one on line {first}")));
        }
        total += &p;
        entries.push((x, ys, p));
    }
    if doc.pmf.is_empty() {
        return Err(InputError::Io {
            path: path.to_string(),
            message: "no [[pmf]] entries".into(),
        });
    }
    if total != Rational::from_integer(1.into()) {
        return Err(InputError::At {
            path: path.to_string(),
            line: src.line_of(first_pmf_line),
            message: format!("pmf sums to {total}, not 1"),
        });
    }
    let model = JointModel::new(alphabet, params.files(), params.file_bits(), entries)?;

    let mut config = ExperimentConfig::new(model, params.clone())?;
    if let Some(eps) = &doc.epsilon {
        config = config
            .with_epsilon(eps.get_ref().as_f64())
            .map_err(|e| src.at(eps, e.to_string()))?;
    }
    config = config.with_seed(doc.seed.unwrap_or(0));
    if let Some(d) = &doc.demands {
        let set = match d.get_ref() {
            DemandsValue::Keyword(k) if k == "all" => DemandSet::All,
            DemandsValue::Keyword(k) => parse_demand_list(k, &params).map_err(|e| src.at(d, e.to_string()))?,
            DemandsValue::List(list) => DemandSet::List(
                list.iter()
                    .map(|v| DemandVector::from_one_based(v, &params))
                    .collect::<crate::Result<_>>()
                    .map_err(|e| src.at(d, e.to_string()))?,
            ),
        };
        config = config.with_demands(set);
    }
    Ok(config)
}

/// Parses `all` or `1,2;2,1` (one-based).
pub fn parse_demand_list(text: &str, params: &SystemParams) -> crate::Result<DemandSet> {
    let text = text.trim();
    if text == "all" {
        return Ok(DemandSet::All);
    }
    text.split(';')
        .map(|vector| {
            let files = vector
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::usage(format!("bad file number {f:?} in {text:?}")))
                })
                .collect::<crate::Result<Vec<_>>>()?;
            DemandVector::from_one_based(&files, params)
        })
        .collect::<crate::Result<Vec<_>>>()
        .map(DemandSet::List)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, InputError> {
    let label = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| InputError::Io {
        path: label.clone(),
        message: e.to_string(),
    })?;
    parse_config(&label, &text)
}

/// Round-half-even of an exact rational to `digits` decimals.
pub fn round_half_even(value: &Rational, digits: u32) -> String {
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = value * Rational::from_integer(scale.clone());
    let floor = scaled.floor().to_integer();
    let frac = &scaled - Rational::from_integer(floor.clone());
    let half = Rational::new(1.into(), 2.into());
    let rounded = if frac > half || (frac == half && floor.is_odd()) {
        floor + 1
    } else {
        floor
    };
    let negative = rounded.is_negative();
    let (int, rem) = rounded.abs().div_rem(&scale);
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    write!(out, "{int}").unwrap();
    if digits > 0 {
        write!(out, ".{:0>width$}", rem.to_string(), width = digits as usize).unwrap();
    }
    out
}

/// Round-half-even of the exact binary value of `value`.
pub fn format_f64(value: f64, digits: u32) -> String {
    match rational_from_f64(value) {
        Some(r) => round_half_even(&r, digits),
        None => value.to_string(),
    }
}

pub const CSV_HEADER: [&str; 8] = [
    "demand",
    "achieved_length",
    "entropy_length",
    "leakage",
    "ub_entropy",
    "ub_cardinality",
    "ub_deterministic",
    "flags",
];

/// Label of the summary row that closes the report.
pub const WORST_CASE_LABEL: &str = "worst-case";

/// The CSV report: one row per demand vector and a closing worst-case row.
pub fn report_csv(out: &RunOutput) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for (a, b) in out.audit.per_demand.iter().zip(&out.bounds.per_demand) {
        let mut flags = Vec::new();
        if a.demand == out.audit.worst_case_demand {
            flags.push("worst");
        }
        if a.channel.epsilon_exceeds_source_information {
            flags.push("eps-exceeds-info");
        }
        if !a.violations.is_empty() {
            flags.push("violation");
        }
        w.write_record([
            a.demand.to_string(),
            round_half_even(&a.expected_length(), LENGTH_DIGITS),
            format_f64(b.entropy_accounted_length, LENGTH_DIGITS),
            format_f64(a.leakage_bits, LEAKAGE_DIGITS),
            format_f64(a.upper.entropy, LENGTH_DIGITS),
            a.upper.cardinality.to_string(),
            a.upper.deterministic.map_or(String::new(), |d| d.to_string()),
            flags.join("|"),
        ])
        .expect("in-memory write");
    }
    let max_leak = out.audit.per_demand.iter().map(|a| a.leakage_bits).fold(0.0, f64::max);
    let max_entropy = out.bounds.per_demand.iter().map(|b| b.upper.entropy).fold(f64::MIN, f64::max);
    let max_card = out.bounds.per_demand.iter().map(|b| b.upper.cardinality).max().unwrap_or(0);
    w.write_record([
        WORST_CASE_LABEL.to_string(),
        format_f64(out.bounds.worst_case_achieved, LENGTH_DIGITS),
        format_f64(out.bounds.worst_case_entropy_accounted, LENGTH_DIGITS),
        format_f64(max_leak, LEAKAGE_DIGITS),
        format_f64(max_entropy, LENGTH_DIGITS),
        max_card.to_string(),
        String::new(),
        if out.audit.is_ok() { "pass" } else { "fail" }.to_string(),
    ])
    .expect("in-memory write");
    w.into_inner().expect("in-memory flush")
}

fn optional(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |v| format!("{v:.4}"))
}

fn write_lower_bounds(out: &mut dyn Write, b: &BoundReport) -> std::io::Result<()> {
    writeln!(out, "L1 = {:.4} bits", b.lb_l1)?;
    writeln!(
        out,
        "L2 (stated form) = {}, L2 (cut-set form) = {}",
        optional(b.lb_l2.stated),
        optional(b.lb_l2.cutset)
    )
}

fn write_run_table(out: &mut dyn Write, r: &RunOutput) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<10} {:>10} {:>10} {:>12} {:>10} {:>5} {:>5} {:>5}",
        "demand", "achieved", "entropy", "leakage", "ub_H", "ub_|U|", "ub_det", "|U|"
    )?;
    for (a, b) in r.audit.per_demand.iter().zip(&r.bounds.per_demand) {
        writeln!(
            out,
            "{:<10} {:>10} {:>10} {:>12} {:>10} {:>5} {:>5} {:>5}",
            a.demand.to_string(),
            round_half_even(&a.expected_length(), 4),
            format_f64(b.entropy_accounted_length, 4),
            format_f64(a.leakage_bits, LEAKAGE_DIGITS),
            format_f64(a.upper.entropy, 4),
            a.upper.cardinality,
            a.upper.deterministic.map_or("-".into(), |d| d.to_string()),
            a.codebook_size,
        )?;
    }
    writeln!(
        out,
        "worst case: achieved {:.4} bits at d={}, entropy-accounted {:.4} bits",
        r.audit.worst_case_length, r.audit.worst_case_demand, r.bounds.worst_case_entropy_accounted
    )?;
    write_lower_bounds(out, &r.bounds)?;
    writeln!(out, "note: one representation is built per demand vector")?;
    let violations: Vec<_> = r.audit.violations().collect();
    if violations.is_empty() {
        writeln!(out, "audit: pass")
    } else {
        writeln!(out, "audit: FAIL")?;
        for v in violations {
            writeln!(out, "  {v}")?;
        }
        Ok(())
    }
}

fn cmd_run(
    config: &Path,
    epsilon: Option<f64>,
    seed: Option<u64>,
    out_dir: &Path,
    demands: Option<&str>,
    stdout: &mut dyn Write,
) -> Result<i32, InputError> {
    let mut cfg = load_config(config)?;
    if let Some(eps) = epsilon {
        cfg = cfg.with_epsilon(eps)?;
    }
    if let Some(seed) = seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(d) = demands {
        let set = parse_demand_list(d, &cfg.params)?;
        cfg = cfg.with_demands(set);
    }
    let result = run(&cfg)?;
    let io = |e: std::io::Error| InputError::Io {
        path: out_dir.display().to_string(),
        message: e.to_string(),
    };
    std::fs::create_dir_all(out_dir).map_err(io)?;
    std::fs::write(out_dir.join("report.csv"), report_csv(&result)).map_err(io)?;
    write_run_table(stdout, &result).map_err(io)?;
    Ok(if result.audit.is_ok() { EXIT_OK } else { EXIT_AUDIT })
}

fn cmd_bounds(config: &Path, epsilon: Option<f64>, stdout: &mut dyn Write) -> Result<i32, InputError> {
    let mut cfg = load_config(config)?;
    if let Some(eps) = epsilon {
        cfg = cfg.with_epsilon(eps)?;
    }
    let (_, report) = bounds_only(&cfg)?;
    let io = |e: std::io::Error| InputError::Io {
        path: "stdout".into(),
        message: e.to_string(),
    };
    (|| -> std::io::Result<()> {
        writeln!(stdout, "epsilon = {}", cfg.epsilon)?;
        writeln!(
            stdout,
            "{:<10} {:>12} {:>10} {:>6} {:>6} {:>10}",
            "demand", "sum H(C'|x)", "ub_H", "ub_|U|", "ub_det", "entropy"
        )?;
        for b in &report.per_demand {
            writeln!(
                stdout,
                "{:<10} {:>12} {:>10} {:>6} {:>6} {:>10}",
                b.demand.to_string(),
                format_f64(b.upper.sum_conditional_entropy, 4),
                format_f64(b.upper.entropy, 4),
                b.upper.cardinality,
                b.upper.deterministic.map_or("-".into(), |d| d.to_string()),
                format_f64(b.entropy_accounted_length, 4),
            )?;
        }
        write_lower_bounds(stdout, &report)
    })()
    .map_err(io)?;
    Ok(EXIT_OK)
}

fn cmd_trials(config: &Path, n: usize, seed: Option<u64>, stdout: &mut dyn Write) -> Result<i32, InputError> {
    let mut cfg = load_config(config)?;
    if let Some(seed) = seed {
        cfg = cfg.with_seed(seed);
    }
    let summary = simulate_trials(&cfg, n)?;
    let io = |e: std::io::Error| InputError::Io {
        path: "stdout".into(),
        message: e.to_string(),
    };
    (|| -> std::io::Result<()> {
        writeln!(stdout, "trials = {n}, seed = {}", summary.seed)?;
        writeln!(
            stdout,
            "{:<10} {:>10} {:>10} {:>10} {:>9} {:>5}",
            "demand", "empirical", "exact", "5σ/√n", "failures", "band"
        )?;
        for d in &summary.per_demand {
            writeln!(
                stdout,
                "{:<10} {:>10.4} {:>10.4} {:>10.4} {:>9} {:>5}",
                d.demand.to_string(),
                d.empirical_mean,
                d.analytical_mean,
                5.0 * d.length_std_dev / (d.trials as f64).sqrt(),
                d.decode_failures,
                if d.within_band() { "ok" } else { "out" },
            )?;
        }
        writeln!(stdout, "trials: {}", if summary.is_ok() { "pass" } else { "FAIL" })
    })()
    .map_err(io)?;
    Ok(if summary.is_ok() { EXIT_OK } else { EXIT_AUDIT })
}

/// Runs the tool on `args` (including the program name) and returns the exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{rendered}");
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run {
            config,
            epsilon,
            seed,
            out,
            demands,
        } => cmd_run(config, *epsilon, *seed, out, demands.as_deref(), stdout),
        Command::Bounds { config, epsilon } => cmd_bounds(config, *epsilon, stdout),
        Command::Trials { config, n, seed } => cmd_trials(config, *n, *seed, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INPUT
        }
    }
}
