//! Command-line front end for blowup-core.
//!
//! Every command resolves its options (flags > config file > defaults),
//! runs, and yields a JSON report plus a data table. The table goes to
//! `--out` as CSV; stdout carries the report (`--format json`) or the table
//! (`--format csv`).

pub mod commands;
pub mod config;
pub mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;

pub const SCHEMA: u32 = 1;

/// Values of sigma this close to 2 are refused: alpha and beta blow up there.
pub const SIGMA_MARGIN: f64 = 1e-3;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<blowup_core::Error> for Failure {
    fn from(e: blowup_core::Error) -> Self {
        use blowup_core::Error::*;
        let code = match e {
            Inconclusive(_) | Numerical(_) | InsufficientData(_) => EXIT_INCONCLUSIVE,
            Constraint(_) | Domain(_) | Controls(_) | Bracket(_) | Config(_) => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::usage(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self::usage(format!("csv error: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::usage(format!("json error: {e}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "blowup", version, about = "Self-similar blow-up profiles for u_t = (u^m)_xx + |x|^sigma u^p, m + p = 2")]
pub struct Cli {
    /// key=value file, one per line; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// What goes to stdout: the JSON report or the data table as CSV
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the data table to this CSV file
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Add wall-time to the report (the report is then no longer reproducible)
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exponents, P2 and the parabola of critical points
    Params(ModelArgs),
    /// Launch an orbit, integrate it and classify its fate
    Classify(ClassifyArgs),
    /// Shoot in sigma for the orbit from P2 that reaches the vertex
    SigmaStar(SigmaStarArgs),
    /// Integrate the profile equation directly
    Profile(ProfileArgs),
    /// Sample barrier surfaces and check the sign of the flux
    Verify(VerifyArgs),
    /// Fate of the orbit from P2 over a grid of sigma
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ControlArgs {
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub max_step: Option<f64>,
    #[arg(long)]
    pub max_time: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Keep every n-th accepted step
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitSource {
    P2,
    P0,
    Q1,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub source: Option<OrbitSource>,
    /// Centre-family constant for p0
    #[arg(long = "K", alias = "k")]
    pub k: Option<f64>,
    /// Starting Z for p0
    #[arg(long)]
    pub z0: Option<f64>,
    /// Launch offset for p2 and q1
    #[arg(long)]
    pub delta: Option<f64>,
    /// f(0) for q1
    #[arg(long)]
    pub a: Option<f64>,
    #[command(flatten)]
    pub controls: ControlArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SigmaStarArgs {
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub lo: Option<f64>,
    #[arg(long)]
    pub hi: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub controls: ControlArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileOrigin {
    P1,
    P2,
    P0,
}

#[derive(Debug, Clone, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub origin: Option<ProfileOrigin>,
    /// Coefficient of the power law for p0
    #[arg(long = "K", alias = "k")]
    pub k: Option<f64>,
    /// Single p1 run with f(0) = a
    #[arg(long)]
    pub a: Option<f64>,
    /// Bisect p1 profiles between these values of f(0)
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub a_bracket: Option<Vec<f64>>,
    /// Range and size of the log-spaced p1 scan used when no bracket is given
    #[arg(long)]
    pub scan_lo: Option<f64>,
    #[arg(long)]
    pub scan_hi: Option<f64>,
    #[arg(long)]
    pub scan_points: Option<usize>,
    /// Relative bisection tolerance on a
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub xi_start: Option<f64>,
    #[command(flatten)]
    pub controls: ControlArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Barrier id; repeat for several
    #[arg(long)]
    pub barrier: Vec<String>,
    /// Every barrier in the catalog
    #[arg(long)]
    pub all: bool,
    /// Samples per barrier
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub m: Option<f64>,
    /// Comma-separated values of sigma
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Vec<f64>,
    /// Run the grid on worker threads; results are merged in grid order
    #[arg(long)]
    pub parallel: bool,
    #[command(flatten)]
    pub controls: ControlArgs,
}

macro_rules! from_str_via_value_enum {
    ($t:ty) => {
        impl std::str::FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                <$t as ValueEnum>::from_str(s, true)
            }
        }
    };
}
from_str_via_value_enum!(OrbitSource);
from_str_via_value_enum!(ProfileOrigin);

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Params(_) => "params",
            Command::Classify(_) => "classify",
            Command::SigmaStar(_) => "sigma-star",
            Command::Profile(_) => "profile",
            Command::Verify(_) => "verify",
            Command::Sweep(_) => "sweep",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: BTreeMap<String, Value>,
    pub results: Value,
    pub warnings: Vec<String>,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

/// Run a parsed command line, writing to `stdout`. Returns the exit code.
pub fn run<W: Write>(cli: &Cli, stdout: &mut W) -> Result<i32, Failure> {
    let start = Instant::now();
    let mut res = config::Resolver::from_path(cli.config.as_deref())?;
    let out_path = res.optional("out", cli.out.clone().map(|p| p.display().to_string()))?;
    let (config, outcome) = commands::execute(&cli.command, res)?;
    if let Some(p) = &out_path {
        let f = std::fs::File::create(p).map_err(|e| Failure::usage(format!("cannot create {p}: {e}")))?;
        outcome.table.write(std::io::BufWriter::new(f))?;
    }
    match cli.format {
        Format::Csv => outcome.table.write(&mut *stdout)?,
        Format::Json => {
            let report = Report {
                schema: SCHEMA,
                tool: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                command: cli.command.name(),
                config,
                results: outcome.results,
                warnings: outcome.warnings,
                exit_code: outcome.code,
                wall_time_s: cli.timing.then(|| start.elapsed().as_secs_f64()),
            };
            writeln!(stdout, "{}", output::to_json(&report)?)?;
        }
    }
    Ok(outcome.code)
}
