//! Command-line front end: `transform`, `fit`, `simulate` and `experiment`.
//!
//! Exit codes:
//!
//! | code | meaning                                              |
//! |------|------------------------------------------------------|
//! | 0    | success                                              |
//! | 1    | fit failed for another reason (e.g. all starts fail) |
//! | 2    | usage, parse, I/O or configuration error             |
//! | 3    | `transform --direction inverse` outside the region   |
//! | 4    | `fit` succeeded and the estimate is on the boundary  |
//! | 5    | `fit` series too short for the requested order       |

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::MaError;
use crate::estimator::{fit_ma, FitOptions};
use crate::likelihood::TimeSeries;
use crate::montecarlo::{run_experiment_with_progress, simulate_ma, ExperimentConfig, SimSpec};
use crate::reparam::{
    b_pseudo_inverse_with, b_transform, MaCoefficients, PartialParams, DEFAULT_EPSILON,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_IN_REGION: i32 = 3;
pub const EXIT_BOUNDARY: i32 = 4;
pub const EXIT_TOO_SHORT: i32 = 5;

/// Environment variable that caps the experiment's worker threads.
pub const THREADS_ENV: &str = "MAFIT_THREADS";

const TOOL: &str = env!("CARGO_PKG_NAME");
const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "mafit", version, about = "Exact ML fitting of MA(q) models in the closed invertible region")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Map between cube coordinates and MA coefficients.
    Transform(TransformArgs),
    /// Fit an MA(q) model to a single-column CSV series.
    Fit(FitArgs),
    /// Simulate an MA(q) series to CSV.
    Simulate(SimulateArgs),
    /// Run the boundary-frequency Monte Carlo experiment.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Args, Serialize)]
struct TransformArgs {
    #[arg(long, value_enum)]
    direction: Direction,
    /// Comma-separated coordinates (forward) or coefficients (inverse).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    values: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
}

#[derive(Debug, Args, Serialize)]
struct FitArgs {
    /// Series file: one value per line, optional header `z`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    q: usize,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    n_starts: usize,
    /// Subtract the sample mean before fitting.
    #[arg(long)]
    demean: bool,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    /// Comma-separated MA coefficients theta_1..theta_q.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    theta: Vec<f64>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ExperimentArgs {
    /// TOML configuration; inline flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory receiving `table.csv` and `report.json`.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta1_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    q_values: Option<Vec<usize>>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    n_starts: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Suppress progress output on standard error.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<MaError> for CliError {
    fn from(e: MaError) -> Self {
        let code = match e {
            MaError::NotInClosedRegion { .. } => EXIT_NOT_IN_REGION,
            MaError::TooShortSeries { .. } => EXIT_TOO_SHORT,
            MaError::AllStartsFailed | MaError::DegenerateVariance { .. } => EXIT_FAILURE,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<i32, CliError>;

/// Entry point for the binary.
pub fn main_exit_code() -> i32 {
    // unlocked handles: experiment workers report progress on stderr
    run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr())
}

/// Parses `args` (including the program name) and runs the command, writing
/// documents to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Transform(a) => cmd_transform(a, out),
        Command::Fit(a) => cmd_fit(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Experiment(a) => cmd_experiment(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn emit(out: &mut dyn Write, command: &str, invocation: &impl Serialize, result: serde_json::Value) -> Result<(), CliError> {
    let doc = json!({
        "tool": TOOL,
        "version": VERSION,
        "command": command,
        "invocation": invocation,
        "result": result,
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::usage(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| CliError::usage(e.to_string()))
}

fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::usage(e.to_string()))
}

fn cmd_transform(a: &TransformArgs, out: &mut dyn Write) -> CliResult {
    match a.direction {
        Direction::Forward => {
            let zeta = PartialParams::new(a.values.clone()).map_err(|e| CliError::usage(e.to_string()))?;
            let theta = b_transform(&zeta);
            emit(out, "transform", a, json!({ "zeta": zeta, "theta": theta }))?;
        }
        Direction::Inverse => {
            let theta = MaCoefficients::new(a.values.clone())?;
            let (zeta, boundary) = b_pseudo_inverse_with(&theta, a.epsilon)?;
            emit(
                out,
                "transform",
                a,
                json!({ "theta": theta, "zeta": zeta, "boundary": boundary }),
            )?;
        }
    }
    Ok(EXIT_OK)
}

/// Reads a single-column series, skipping blank lines and an optional `z`
/// header on the first non-blank line.
pub fn read_series(path: &Path) -> Result<TimeSeries, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut values = Vec::new();
    let mut first = true;
    for (lineno, line) in text.lines().enumerate() {
        let token = line.trim();
        if token.is_empty() {
            continue;
        }
        if first && token.trim_matches('"').eq_ignore_ascii_case("z") {
            first = false;
            continue;
        }
        first = false;
        let v: f64 = token
            .parse()
            .map_err(|_| format!("line {}: cannot parse {token:?} as a number", lineno + 1))?;
        if !v.is_finite() {
            return Err(format!("line {}: non-finite value {token:?}", lineno + 1));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(format!("{} contains no observations", path.display()));
    }
    TimeSeries::new(values).map_err(|e| e.to_string())
}

fn cmd_fit(a: &FitArgs, out: &mut dyn Write) -> CliResult {
    let mut z = read_series(&a.input).map_err(CliError::usage)?;
    if a.demean {
        z = z.demeaned();
    }
    if z.is_all_zero() {
        return Err(CliError::usage("series is identically zero"));
    }
    let mut opts = FitOptions::new(a.q).with_seed(a.seed);
    opts.epsilon = a.epsilon;
    opts.n_starts = a.n_starts;
    let fit = fit_ma(&z, &opts)?;
    let mut result = to_value(&fit)?;
    result["n"] = json!(z.len());
    result["q"] = json!(a.q);
    emit(out, "fit", a, result)?;
    Ok(if fit.boundary.on_boundary { EXIT_BOUNDARY } else { EXIT_OK })
}

/// Series file contents: header `z` and one value per line.
pub fn format_series(z: &TimeSeries) -> String {
    let mut s = String::from("z\n");
    for v in z.values() {
        s.push_str(&format!("{v:?}\n"));
    }
    s
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> CliResult {
    let theta = MaCoefficients::new(a.theta.clone())?;
    let spec = SimSpec {
        theta,
        sigma: a.sigma,
        n: a.n,
        seed: a.seed,
    };
    let z = simulate_ma(&spec)?;
    fs::write(&a.output, format_series(&z))
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", a.output.display())))?;
    emit(
        out,
        "simulate",
        a,
        json!({ "spec": spec, "output": a.output, "rows": z.len() }),
    )?;
    Ok(EXIT_OK)
}

fn experiment_config(a: &ExperimentArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::usage(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| CliError::usage(format!("config: {e}")))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(v) = &a.n_values {
        cfg.n_values = v.clone();
    }
    if let Some(v) = &a.theta1_values {
        cfg.theta1_values = v.clone();
    }
    if let Some(v) = &a.q_values {
        cfg.q_values = v.clone();
    }
    if let Some(v) = a.replications {
        cfg.replications = v;
    }
    if let Some(v) = a.master_seed {
        cfg.master_seed = v;
    }
    if let Some(v) = a.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = a.n_starts {
        cfg.n_starts = v;
    }
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let t = v
            .parse()
            .map_err(|_| CliError::usage(format!("{THREADS_ENV} must be a positive integer")))?;
        cfg.threads = Some(t);
    }
    if let Some(v) = a.threads {
        cfg.threads = Some(v);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_experiment(a: &ExperimentArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let cfg = experiment_config(a)?;
    fs::create_dir_all(&a.output)
        .map_err(|e| CliError::usage(format!("cannot create {}: {e}", a.output.display())))?;

    let quiet = a.quiet;
    let step = 10usize;
    let report = run_experiment_with_progress(&cfg, |done, total| {
        if !quiet && (done * step / total) != ((done - 1) * step / total) {
            eprintln!("experiment: {done}/{total} replications");
        }
    })?;

    let csv_path = a.output.join("table.csv");
    let json_path = a.output.join("report.json");
    let csv = report.to_csv_string()?;
    fs::write(&csv_path, csv)
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", csv_path.display())))?;
    let json_text = serde_json::to_string_pretty(&report).map_err(|e| CliError::usage(e.to_string()))?;
    fs::write(&json_path, json_text)
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", json_path.display())))?;

    if !quiet {
        let _ = write!(err, "{}", report.render_table());
    }
    emit(
        out,
        "experiment",
        a,
        json!({ "csv": csv_path, "json": json_path, "cells": report.cells.len() }),
    )?;
    Ok(EXIT_OK)
}
