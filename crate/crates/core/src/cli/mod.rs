//! The `nonequiv` command line front end.
//!
//! Every subcommand computes its tables first and writes its files once at
//! the end, so a failed run leaves no partial output. Exit codes: 0 success,
//! 1 I/O or numerical failure, 2 configuration error, 3 infeasible
//! construction, 4 validation failure.

mod commands;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::output::{to_stable_json, Table};
use crate::Error;

pub const OUT_DIR_ENV: &str = "NONEQUIV_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Build the counterexample pair; writes the JSON result and the figure grid.
    Construct,
    /// Distances and the deficiency lower bound over --n-grid.
    DeficiencyTable,
    /// Monte Carlo total variation in both experiments against closed forms and bounds.
    McValidate,
    /// Hölder / flat-Hölder norm reports for f0, f1, f2.
    NormsCheck,
    /// Fisher information, Hellinger, QMD and metric-dimension tables of the location family.
    ParametricCheck,
    /// Pointwise and deficiency rate tables.
    Rates,
}

#[derive(Debug, Parser)]
#[command(name = "nonequiv", version, about = "Nonequivalence of density estimation and white noise for small densities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Smoothness index.
    #[arg(long, global = true, default_value_t = 1.0)]
    beta: f64,
    /// H^beta radius of f0 (default: its computed norm rounded up to 3 significant figures).
    #[arg(long = "r", global = true)]
    radius: Option<f64>,
    /// Sample size for single-n commands.
    #[arg(long, global = true, default_value_t = 100)]
    n: u64,
    /// Comma-separated increasing sample sizes, e.g. 1e2,1e3,1e4.
    #[arg(long = "n-grid", global = true, value_parser = parse_n_grid)]
    n_grid: Option<NGrid>,
    #[arg(long, global = true, default_value_t = 2000)]
    reps: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Uniform cells of the white-noise time grid.
    #[arg(long = "grid-m", global = true, default_value_t = 4096)]
    grid_m: usize,
    /// Output directory (default: $NONEQUIV_OUT_DIR, else the current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Omit the generation timestamp so reruns are byte-identical.
    #[arg(long = "no-timestamp", global = true)]
    no_timestamp: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct NGrid(Vec<u64>);

fn parse_n_grid(s: &str) -> Result<NGrid, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            let v: f64 = t.parse().map_err(|_| format!("'{t}' is not a number"))?;
            if !(v >= 1.0) || v.fract() != 0.0 || v > 1e15 {
                return Err(format!("'{t}' is not a positive integer"));
            }
            Ok(v as u64)
        })
        .collect::<Result<Vec<_>, _>>()
        .map(NGrid)
}

pub const DEFAULT_N_GRID: [u64; 5] = [100, 1_000, 10_000, 100_000, 1_000_000];
pub const DEFAULT_MC_N_GRID: [u64; 2] = [100, 1_000];

/// Validated configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub beta: f64,
    pub radius: Option<f64>,
    pub n: u64,
    pub n_grid: Vec<u64>,
    pub reps: usize,
    pub seed: u64,
    pub grid_m: usize,
    pub output_path: PathBuf,
    pub format: Format,
    pub timestamp: bool,
}

impl RunConfig {
    pub fn new(command: Command, output_path: impl Into<PathBuf>) -> Self {
        Self {
            command,
            beta: 1.0,
            radius: None,
            n: 100,
            n_grid: default_grid(command),
            reps: 2000,
            seed: 0,
            grid_m: 4096,
            output_path: output_path.into(),
            format: Format::Csv,
            timestamp: false,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return bad(format!("--beta must be positive, got {}", self.beta));
        }
        if let Some(r) = self.radius {
            if !(r > 0.0) || !r.is_finite() {
                return bad(format!("--r must be positive, got {r}"));
            }
        }
        if self.n < 2 {
            return bad(format!("--n must be at least 2, got {}", self.n));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("--n-grid must be strictly increasing, got {:?}", self.n_grid));
        }
        if self.n_grid[0] < 2 {
            return bad("--n-grid entries must be at least 2".into());
        }
        if self.reps < crate::experiments::MIN_REPS {
            return bad(format!("--reps must be at least {}, got {}", crate::experiments::MIN_REPS, self.reps));
        }
        if self.grid_m < 16 {
            return bad(format!("--grid-m must be at least 16, got {}", self.grid_m));
        }
        Ok(())
    }
}

fn default_grid(command: Command) -> Vec<u64> {
    match command {
        Command::McValidate => DEFAULT_MC_N_GRID.to_vec(),
        _ => DEFAULT_N_GRID.to_vec(),
    }
}

/// Failure of a run, carrying its exit code.
#[derive(Debug)]
pub struct RunError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) => EXIT_CONFIG,
            Error::Infeasible(_) | Error::InsufficientMass { .. } => EXIT_INFEASIBLE,
            Error::Validation(_) => EXIT_VALIDATION,
            _ => EXIT_IO,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("I/O error: {e}"),
        }
    }
}

/// What a run produced.
#[derive(Debug, Default)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// Human-readable summary lines.
    pub messages: Vec<String>,
    /// Set when a validation check failed; files are still written.
    pub validation_failure: Option<String>,
}

/// An artifact to be written at the end of a run.
pub(crate) enum Artifact {
    Table { stem: String, table: Table },
    Json { stem: String, value: Value },
}

pub(crate) struct Produced {
    pub artifacts: Vec<Artifact>,
    pub messages: Vec<String>,
    pub validation_failure: Option<String>,
}

/// Runs one command and writes its artifacts.
pub fn run(config: &RunConfig) -> Result<RunOutcome, RunError> {
    config.validate()?;
    let produced = commands::dispatch(config)?;
    fs::create_dir_all(&config.output_path)?;
    let stamp = config.timestamp.then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    let mut files = Vec::new();
    for a in produced.artifacts {
        files.push(write_artifact(&config.output_path, a, config.format, stamp)?);
    }
    Ok(RunOutcome {
        files,
        messages: produced.messages,
        validation_failure: produced.validation_failure,
    })
}

fn write_artifact(dir: &Path, a: Artifact, format: Format, stamp: Option<u64>) -> Result<PathBuf, RunError> {
    let (path, bytes) = match (a, format) {
        (Artifact::Table { stem, table }, Format::Csv) => {
            let mut buf = Vec::new();
            let comment = stamp.map(|s| format!("generated_at_unix={s}"));
            table.write_csv(&mut buf, comment.as_deref())?;
            (dir.join(format!("{stem}.csv")), buf)
        }
        (Artifact::Table { stem, table }, Format::Json) => {
            (dir.join(format!("{stem}.json")), json_bytes(table.to_json(), stamp)?)
        }
        (Artifact::Json { stem, value }, _) => (dir.join(format!("{stem}.json")), json_bytes(value, stamp)?),
    };
    fs::write(&path, bytes)?;
    Ok(path)
}

fn json_bytes(value: Value, stamp: Option<u64>) -> Result<Vec<u8>, RunError> {
    let value = match stamp {
        Some(s) => serde_json::json!({ "generated_at_unix": s, "data": value }),
        None => value,
    };
    let text = to_stable_json(&value).map_err(|e| RunError {
        code: EXIT_IO,
        message: format!("JSON serialization failed: {e}"),
    })?;
    Ok(text.into_bytes())
}

fn config_from_cli(cli: Cli) -> RunConfig {
    let output_path = cli
        .out
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    RunConfig {
        command: cli.command,
        beta: cli.beta,
        radius: cli.radius,
        n: cli.n,
        n_grid: cli.n_grid.map_or_else(|| default_grid(cli.command), |g| g.0),
        reps: cli.reps,
        seed: cli.seed,
        grid_m: cli.grid_m,
        output_path,
        format: cli.format,
        timestamp: !cli.no_timestamp,
    }
}

/// Parses arguments, runs, reports on stdout/stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&config_from_cli(cli)) {
        Ok(outcome) => {
            for m in &outcome.messages {
                println!("{m}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            match outcome.validation_failure {
                Some(msg) => {
                    eprintln!("validation failed: {msg}");
                    EXIT_VALIDATION
                }
                None => EXIT_OK,
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
