//! `phaselift` command-line tool.

mod commands;
mod modelfile;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phaselift::random::DEFAULT_SEED;

#[derive(Debug, Parser)]
#[command(name = "phaselift", version, about = "Symmetries of planar autonomous systems: check, reduce, lift, integrate")]
pub struct Cli {
    /// Write the main artifact (report or CSV) here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for random jet sampling
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Tolerance; each command has its own default
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Time step for trajectories and characteristics
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub h: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify a generator as a symmetry on sampled regions
    Check(CheckArgs),
    /// Push a time-domain generator to the phase plane and verify commutation
    Reduce(ReduceArgs),
    /// Integrate the time tangent of a lifted generator along a characteristic
    Lift(LiftArgs),
    /// Integrate a trajectory of the system
    Flow(FlowArgs),
    /// Apply the finite transformation of a generator to a trajectory
    Transform(TransformArgs),
    /// List built-in models or print one in model-file form
    Models(ModelsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Domain {
    Time,
    Phase,
}

#[derive(Debug, Args)]
pub struct ModelArg {
    /// Built-in model name or path to a model file
    #[arg(long)]
    pub model: String,
}

#[derive(Debug, Args)]
pub struct GeneratorArgs {
    /// Generator name; time-domain commands also accept the name of a lifted phase generator
    #[arg(long)]
    pub generator: String,
    /// Free function of `c` added to the lift's time tangent
    #[arg(long = "F", allow_hyphen_values = true)]
    pub free: Option<String>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, value_enum, default_value_t = Domain::Phase)]
    pub domain: Domain,
    /// Replace the model's regions by `min1,max1,min2,max2`
    #[arg(long, allow_hyphen_values = true)]
    pub region: Option<String>,
    /// Points per axis for --region
    #[arg(long, default_value_t = phaselift::region::DEFAULT_GRID)]
    pub grid: usize,
    /// Extra exclusion `expression,threshold` for --region (repeatable)
    #[arg(long = "exclude-near", allow_hyphen_values = true)]
    pub exclude_near: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Number of random jets
    #[arg(long, default_value_t = 100)]
    pub jets: usize,
}

#[derive(Debug, Args)]
pub struct LiftArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Constant of motion composed with --F (defaults to the model's)
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    /// Initial state `u0,v0`
    #[arg(long, allow_hyphen_values = true)]
    pub initial: String,
    /// Initial time tangent; defaults to the closed-form lift at the initial point
    #[arg(long, allow_hyphen_values = true)]
    pub xi0: Option<f64>,
    /// Time span `t0,t1`
    #[arg(long = "t-span", allow_hyphen_values = true, default_value = "0,1")]
    pub t_span: String,
    /// Write the JSON report here instead of stderr
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub model: ModelArg,
    /// Initial state `u0,v0`
    #[arg(long, allow_hyphen_values = true)]
    pub initial: String,
    /// Time span `t0,t1`
    #[arg(long = "t-span", allow_hyphen_values = true, default_value = "0,1")]
    pub t_span: String,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: f64,
    #[arg(long = "h-eps", default_value_t = phaselift::flow::DEFAULT_H_EPS)]
    pub h_eps: f64,
    /// Trajectory CSV with header `t,u,v`
    #[arg(long)]
    pub input: PathBuf,
    /// Write the JSON preservation report here instead of stderr
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelsArgs {
    /// Print this model in model-file form
    #[arg(long)]
    pub show: Option<String>,
}

/// Reasons for a non-zero exit.
#[derive(Debug)]
pub enum Failure {
    /// The certification or comparison ran and did not pass.
    CheckFailed,
    Usage(String),
    Load(String),
    Io(String),
    Core(phaselift::Error),
}

impl From<phaselift::Error> for Failure {
    fn from(e: phaselift::Error) -> Failure {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::CheckFailed => 1,
            Failure::Core(e) if e.is_numeric_domain() => 3,
            _ => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::CheckFailed => {}
                Failure::Usage(m) | Failure::Load(m) | Failure::Io(m) => eprintln!("error: {m}"),
                Failure::Core(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(failure.exit_code())
        }
    }
}
