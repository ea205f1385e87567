//! `detsim` command-line front end.

mod commands;
mod error;
mod inputs;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use error::exit;

/// Documented caps on numeric parameters.
pub mod caps {
    pub const VOLUME: u64 = 10_000_000;
    pub const SCENARIO_STEPS: u64 = 4096;
    pub const EVOLVE_STEPS: u64 = 100_000_000;
    pub const DB_POINTS: u64 = 4096;
}

/// Deterministic option sweeps, grid evolution and propagator databases.
#[derive(Debug, Parser)]
#[command(name = "detsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one scenario over every option value.
    Sweep(SweepArgs),
    /// Evaluate and rank several scenarios against one sample chain.
    Compare(CompareArgs),
    /// Split-step evolution of a wave function on a grid.
    Evolve(EvolveArgs),
    /// Build (or load) the propagator for a grid, potential, dt and step count.
    DbBuild(DbBuildArgs),
    /// Apply a stored propagator to a wave function.
    DbApply(DbApplyArgs),
    /// Print the key and unitarity residual of a stored propagator.
    DbInspect(DbInspectArgs),
    /// Write the scenario and table files for a pulse sequence.
    PhotonGen(PhotonGenArgs),
    /// Solve the Lippmann-Schwinger equation by fixed-point iteration.
    LsSolve(LsSolveArgs),
    /// Turn matrix elements and densities of states into outcome weights.
    GoldenRule(GoldenRuleArgs),
    /// Measure a state vector with the deterministic model.
    Measure(MeasureArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct OutputArgs {
    /// Write the JSON report here.
    #[arg(short, long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub table: PathBuf,
    /// Sample chain letters; defaults to the scenario file's `sample` line.
    #[arg(long)]
    pub sample: Option<String>,
    /// Option volume L.
    #[arg(short = 'L', long, default_value_t = 1000)]
    pub volume: u64,
    /// Longest scenario accepted (T0).
    #[arg(long, default_value_t = 64)]
    pub max_steps: usize,
    /// Compare unit coordinates as well as letters.
    #[arg(long)]
    pub coordinates: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    /// Scenario files; all must share the initial active system.
    #[arg(long = "scenario", required = true)]
    pub scenarios: Vec<PathBuf>,
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub sample: Option<String>,
    #[arg(short = 'L', long, default_value_t = 1000)]
    pub volume: u64,
    #[arg(long, default_value_t = 64)]
    pub max_steps: usize,
    /// Lucky fraction at which a scenario counts as successful.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long)]
    pub coordinates: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct GridArgs {
    /// Grid qubits l; the grid has 2^l points.
    #[arg(short = 'l', long)]
    pub qubits: u32,
    /// `zero`, `harmonic:<omega>`, `linear:<slope>` or a potential file.
    #[arg(long, default_value = "zero")]
    pub potential: String,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(long)]
    pub dt: f64,
    #[arg(long)]
    pub steps: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct InitialArgs {
    /// Initial wave-function dump.
    #[arg(long, conflicts_with = "gaussian")]
    pub initial: Option<PathBuf>,
    /// Gaussian packet `x0,p0,sigma`.
    #[arg(long, allow_hyphen_values = true)]
    pub gaussian: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub initial: InitialArgs,
    /// Record norm, <X> and <P> every this many steps.
    #[arg(long)]
    pub trace_every: Option<usize>,
    /// Add the classical trajectory of the Gaussian's (x0, p0) to the trace.
    #[arg(long, requires = "gaussian")]
    pub classical: bool,
    /// Write the final wave function here.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct DbArgs {
    /// Database directory; overrides DETSIM_CACHE_DIR.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, default_value_t = detsim::propagator_db::DEFAULT_MAX_POINTS)]
    pub max_points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct DbBuildArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub db: DbArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct DbApplyArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub db: DbArgs,
    #[command(flatten)]
    pub initial: InitialArgs,
    /// Build the propagator when it is not stored yet.
    #[arg(long)]
    pub build: bool,
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct DbInspectArgs {
    /// Key digest, as printed by db-build.
    #[arg(long)]
    pub digest: String,
    #[command(flatten)]
    pub db: DbArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct PhotonGenArgs {
    /// Pulse letters, e.g. "A A B".
    #[arg(long)]
    pub word: String,
    /// Pulse bias l >= 1.
    #[arg(long)]
    pub bias: f64,
    /// The two assembly letters.
    #[arg(long, default_value = "A,B")]
    pub pair: String,
    /// Primer letter starting both chains.
    #[arg(long, default_value = "P")]
    pub primer: String,
    #[arg(long, default_value = "g")]
    pub state: String,
    #[arg(long, default_value_t = 64)]
    pub max_steps: usize,
    #[arg(long)]
    pub scenario_out: PathBuf,
    #[arg(long)]
    pub table_out: PathBuf,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct LsSolveArgs {
    /// System file with H, V and phi.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub energy: f64,
    #[arg(long)]
    pub eta: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct GoldenRuleArgs {
    /// `<outcome>=<re>,<im>,<rho>` where outcome is
    /// `admitted:<elem>:<bond>:<x>,<y>,<z>` or `rejected:<label>`.
    #[arg(long = "channel", required = true)]
    pub channels: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    pub hbar: f64,
    /// Context `<bond> <coding> <growing> <incoming> <state>` for a table fragment.
    #[arg(long, requires = "table_out")]
    pub context: Option<String>,
    #[arg(long, requires = "context")]
    pub table_out: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct MeasureArgs {
    #[arg(long)]
    pub state: PathBuf,
    /// Option volume; defaults to the state file's L.
    #[arg(short = 'L', long)]
    pub volume: Option<u64>,
    /// Option value k; without it only the sweep statistics are reported.
    #[arg(short = 'k', long)]
    pub option: Option<u64>,
    /// Measure only this many leading bits first.
    #[arg(long, requires = "option")]
    pub partial_bits: Option<u32>,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let start = Instant::now();
    let result = match cli.command {
        Command::Sweep(a) => commands::sweep(a),
        Command::Compare(a) => commands::compare(a),
        Command::Evolve(a) => commands::evolve(a),
        Command::DbBuild(a) => commands::db_build(a),
        Command::DbApply(a) => commands::db_apply(a),
        Command::DbInspect(a) => commands::db_inspect(a),
        Command::PhotonGen(a) => commands::photon_gen(a),
        Command::LsSolve(a) => commands::ls_solve(a),
        Command::GoldenRule(a) => commands::golden_rule(a),
        Command::Measure(a) => commands::measure_cmd(a),
    };
    eprintln!("elapsed: {:.3?}", start.elapsed());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
