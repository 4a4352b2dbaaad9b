//! `etas`: generate task allocations, apply elastic events, simulate traces
//! and run the verification suites.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use etas_core::engine::Strategy;

use output::{Format, Status, UsageError};

#[derive(Debug, Parser)]
#[command(name = "etas", version, about = "Elastic task allocation toolkit")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    format: Format,
    /// Directory for written files when no explicit path is given.
    #[arg(long, env = "ETAS_OUTPUT_DIR", global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a task allocation or configuration.
    Generate(GenerateArgs),
    /// Apply one join or leave to an allocation file.
    Transition(TransitionArgs),
    /// Run an event trace.
    Simulate(SimulateArgs),
    /// Run the verification suites.
    Verify(VerifyArgs),
    /// Waste of a cyclic transition for every shift, as two columns.
    ShiftProfile(ShiftProfileArgs),
    /// Zero-waste range of a configuration.
    Zwr(ZwrArgs),
    /// Coded matrix-vector multiplication over an elastic pool.
    CodedDemo(CodedDemoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Cyclic,
    Shifted,
    Random,
    Fano,
    Projective,
    Q2,
    Q2m1,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    kind: Kind,
    /// Machines.
    #[arg(long)]
    n: Option<usize>,
    /// Redundancy.
    #[arg(long)]
    l: Option<usize>,
    /// Tasks. Configurations default to one task per point.
    #[arg(long)]
    f: Option<usize>,
    #[arg(long, default_value_t = 0)]
    shift: usize,
    /// Field order for configuration kinds.
    #[arg(long)]
    q: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Emit the configuration itself rather than its allocation.
    #[arg(long)]
    configuration: bool,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Cyclic,
    #[value(alias = "shifted_cyclic")]
    Shifted,
    #[value(alias = "zero_waste")]
    ZeroWaste,
    #[value(alias = "zero_waste_with_fallback")]
    Fallback,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Cyclic => Strategy::Cyclic,
            StrategyArg::Shifted => Strategy::ShiftedCyclic,
            StrategyArg::ZeroWaste => Strategy::ZeroWaste,
            StrategyArg::Fallback => Strategy::ZeroWasteWithFallback,
        }
    }
}

#[derive(Debug, Args)]
pub struct TransitionArgs {
    /// Allocation file.
    tas: PathBuf,
    /// `leave:<id>`, `join` or `join:<id>`.
    #[arg(long)]
    event: String,
    #[arg(long, value_enum, default_value_t = StrategyArg::ZeroWaste)]
    strategy: StrategyArg,
    /// Search every shift when no closed-form shift applies.
    #[arg(long)]
    brute_force: bool,
    /// Where to write the new allocation.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Trace file.
    trace: PathBuf,
    /// Overrides the trace's strategy.
    #[arg(long, value_enum, conflicts_with = "compare")]
    strategy: Option<StrategyArg>,
    /// Run every strategy and tabulate cumulative waste.
    #[arg(long)]
    compare: bool,
    /// Where to write the report.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scope {
    All,
    Formulas,
    Hall,
    Zwr,
    Coded,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum, default_value_t = Scope::All)]
    scope: Scope,
    #[arg(long, default_value_t = 5)]
    lmax: usize,
    /// Largest pool for the formula grid.
    #[arg(long, default_value_t = 8)]
    nmax: usize,
    /// Random allocations for the Hall suite.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Largest pool for the Hall suite.
    #[arg(long, default_value_t = 7)]
    hall_nmax: usize,
    #[arg(long, default_value_t = 42)]
    fmax: usize,
    /// `fano`, `l3:<n>`, `l4:<n>`, `projective:<q>`, `q2:<q>` or `q2m1:<q>`.
    #[arg(long, default_value = "fano")]
    family: String,
    /// Tasks for the zero-waste range suite.
    #[arg(long)]
    f: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    max_nodes: usize,
    /// Straggler tolerance for the coded suite.
    #[arg(long, default_value_t = 1)]
    e: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args)]
pub struct ShiftProfileArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    l: usize,
    #[arg(long)]
    f: usize,
    /// Shift of the starting allocation.
    #[arg(long, default_value_t = 0)]
    prev: usize,
    /// Profile the departure of this position instead of a join.
    #[arg(long)]
    leave: Option<usize>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ZwrArgs {
    /// Configuration family; see `verify --family`.
    #[arg(long, conflicts_with_all = ["nmax", "l"])]
    family: Option<String>,
    #[arg(long, requires = "l")]
    nmax: Option<usize>,
    #[arg(long, requires = "nmax")]
    l: Option<usize>,
    /// Explore leaves below the range floor.
    #[arg(long)]
    probe: bool,
    /// Smallest pool the probe descends to. Defaults to two below the range
    /// floor, but never below the redundancy.
    #[arg(long)]
    floor: Option<usize>,
    /// Tasks for the probe allocation. Defaults to the least count that keeps
    /// every pool size down to the floor divisible.
    #[arg(long)]
    f: Option<usize>,
    #[arg(long, default_value_t = 5_000)]
    max_states: usize,
    /// Seconds before the probe stops and reports what it reached.
    #[arg(long, default_value_t = 10.0)]
    time_limit: f64,
}

#[derive(Debug, Args)]
pub struct CodedDemoArgs {
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    l: usize,
    #[arg(long, default_value_t = 20)]
    f: usize,
    #[arg(long, default_value_t = 1)]
    e: usize,
    /// Rows of the random matrix.
    #[arg(long, default_value_t = 40)]
    rows: usize,
    /// Columns of the random matrix.
    #[arg(long, default_value_t = 8)]
    cols: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma-separated straggler labels. Without it every straggler set of
    /// size at most `e` is tried.
    #[arg(long, value_delimiter = ',')]
    stragglers: Option<Vec<u32>>,
    /// Matrix file instead of a random matrix.
    #[arg(long, requires = "vector")]
    matrix: Option<PathBuf>,
    #[arg(long, requires = "matrix")]
    vector: Option<PathBuf>,
    /// Also run elastic linear regression with a leave and a join mid-run.
    #[arg(long)]
    regression: bool,
    #[arg(long, default_value_t = 100)]
    steps: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let dir = cli.output_dir.as_deref();
    let result = match &cli.command {
        Command::Generate(a) => commands::generate(a, dir),
        Command::Transition(a) => commands::transition(a, dir),
        Command::Simulate(a) => commands::simulate(a, dir),
        Command::Verify(a) => commands::verify(a),
        Command::ShiftProfile(a) => commands::shift_profile(a, dir),
        Command::Zwr(a) => commands::zwr(a),
        Command::CodedDemo(a) => commands::coded_demo(a),
    };
    match result {
        Ok(report) => {
            print!("{}", report.render(cli.format));
            match report.status {
                Status::Ok => ExitCode::SUCCESS,
                Status::Failed => ExitCode::from(1),
            }
        }
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
