//! Command-line front end.
//!
//! Exit codes: 0 success or pass, 1 configuration/usage/I-O error,
//! 2 trajectory abort (the partial CSV is still written), 3 verification
//! failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::{run_trajectory, TrajectoryState};
use crate::error::Error;
use crate::experiments::{report_all, Experiment, DEFAULT_SEED};
use crate::gauge::{BodyDescriptor, Gauge};
use crate::linalg::Vector;
use crate::projective::ProjectiveMap;
use crate::sampling::{interior_start, seeded_rng};
use crate::table::{Table, TableDescriptor};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_ABORT: u8 = 2;
pub const EXIT_FAIL: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "normed-billiards",
    version,
    about = "Billiards in non-symmetric normed spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one trajectory and write it as CSV.
    Simulate(SimulateArgs),
    /// Run one certification experiment and write its JSON report.
    Verify(VerifyArgs),
    /// Run every experiment with default parameters and write one aggregate JSON.
    ReportAll(ReportAllArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Seed for the random start used when the config has no initial state.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub bounces: Option<usize>,
    /// Output CSV path (stdout when omitted).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Experiment name.
    pub name: Option<String>,
    #[arg(long = "experiment", value_name = "NAME")]
    pub experiment: Option<String>,
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub bounces: Option<usize>,
    /// Output JSON path (stdout when omitted).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportAllArgs {
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Starting point and direction of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub position: Vec<f64>,
    pub direction: Vec<f64>,
}

/// `simulate` configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub body: BodyDescriptor,
    /// Optional map applied to `body` before simulating.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<ProjectiveMap>,
    pub table: TableDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounces: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// `verify` configuration file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(default)]
    pub params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// `report-all` configuration file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportAllConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub const DEFAULT_BOUNCES: usize = 100;

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::GrazingIncidence { .. }
            | Error::RayEscapes
            | Error::NumericFailure { .. }
            | Error::SingularSurface { .. } => EXIT_ABORT,
            _ => EXIT_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::config(format!("invalid config {}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::config(format!("cannot write stdout: {e}"))),
    }
}

fn to_json_bytes(value: &impl Serialize) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report serializes");
    bytes.push(b'\n');
    bytes
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<u8, Failure> {
    let config: SimulateConfig = read_json(&args.config)?;
    let mut body = config.body.build()?;
    if let Some(map) = config.map {
        body = body.image(map)?;
    }
    let table = config.table.build()?;
    if table.dim() != body.dim() {
        return Err(Failure::config("table and body dimensions differ"));
    }
    let bounces = args.bounces.or(config.bounces).unwrap_or(DEFAULT_BOUNCES);
    let start = match config.initial {
        Some(init) => {
            let state =
                TrajectoryState::new(Vector::new(init.position), Vector::new(init.direction))?;
            if state.position.dim() != body.dim() {
                return Err(Failure::config(
                    "initial state dimension differs from the body",
                ));
            }
            if table.level(&state.position) >= 0.0 {
                return Err(Failure::config("initial position is not inside the table"));
            }
            state
        }
        None => {
            let seed = args.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
            interior_start(&mut seeded_rng(seed, 0), &table)
        }
    };
    let (trajectory, abort) = match run_trajectory(&body, &table, &start, bounces) {
        Ok(t) => (t, None),
        Err(a) => (a.partial, Some(a.error)),
    };
    if trajectory.states.is_empty() {
        return Err(abort.expect("empty trajectories come from an abort").into());
    }
    let mut csv = Vec::new();
    trajectory.write_csv(&mut csv).expect("in-memory write");
    write_output(args.out.as_deref(), &csv)?;
    match abort {
        None => Ok(EXIT_OK),
        Some(e) => Err(Failure {
            code: EXIT_ABORT,
            message: format!(
                "trajectory aborted after {} bounces: {e}",
                trajectory.bounces()
            ),
        }),
    }
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<u8, Failure> {
    let config: VerifyConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => VerifyConfig::default(),
    };
    let name = args
        .experiment
        .clone()
        .or_else(|| args.name.clone())
        .or(config.experiment.clone())
        .ok_or_else(|| Failure::config("no experiment named"))?;
    if let (Some(a), Some(b)) = (&args.experiment, &args.name) {
        if a != b {
            return Err(Failure::config(format!(
                "conflicting experiment names {a} and {b}"
            )));
        }
    }
    let experiment = Experiment::from_name(&name).ok_or_else(|| {
        let known: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
        Failure::config(format!(
            "unknown experiment {name}; known: {}",
            known.join(", ")
        ))
    })?;
    let mut params = match config.params {
        Value::Null => Value::Object(Default::default()),
        Value::Object(m) => Value::Object(m),
        _ => return Err(Failure::config("params must be an object")),
    };
    if let Some(n) = args.samples {
        params["samples"] = n.into();
    }
    if let Some(n) = args.bounces {
        params["bounces"] = n.into();
    }
    let seed = args.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let report = experiment.run(&params, seed)?;
    write_output(args.out.as_deref(), &to_json_bytes(&report))?;
    if report.pass {
        Ok(EXIT_OK)
    } else {
        Err(Failure {
            code: EXIT_FAIL,
            message: format!(
                "{} failed: deviation {:e} exceeds tolerance {:e}",
                report.experiment, report.max_abs_deviation, report.tolerance
            ),
        })
    }
}

pub fn cmd_report_all(args: &ReportAllArgs) -> Result<u8, Failure> {
    let config: ReportAllConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => ReportAllConfig::default(),
    };
    let seed = args.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let aggregate = report_all(seed);
    write_output(args.out.as_deref(), &to_json_bytes(&aggregate))?;
    if aggregate.all_pass {
        Ok(EXIT_OK)
    } else {
        Err(Failure {
            code: EXIT_FAIL,
            message: format!("failing experiments: {}", aggregate.failing.join(", ")),
        })
    }
}

/// Parses `args`, runs the command and returns the exit code, printing
/// diagnostics to stderr.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::ReportAll(a) => cmd_report_all(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
