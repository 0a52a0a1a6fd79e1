//! `gibbslab`: experiments on mean-field Glauber dynamics for the generalized
//! Curie-Weiss-Potts model.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use config::RangeArg;
use output::{diag, Format};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config; exit code 2.
    Usage(String),
    /// A computation failed or did not converge; exit code 1.
    Compute(String),
    Io(String),
}

impl From<gibbslab_core::Error> for CliError {
    fn from(e: gibbslab_core::Error) -> Self {
        CliError::Compute(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "gibbslab", version, about = "Glauber dynamics, greedy couplings and contraction checks for mean-field Potts-type models")]
struct Cli {
    /// JSON file of settings; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file (directory for `couple`); standard output when omitted.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Worker threads (default: logical cores).
    #[arg(long, global = true, env = "GIBBSLAB_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// beta_c, beta_s, their gap and the order of the transition.
    Critical(CriticalArgs),
    /// Equilibrium macrostate at one inverse temperature.
    Equilibrium(EquilibriumArgs),
    /// Contraction, Riemann-sum and local contraction conditions.
    Check(CheckArgs),
    /// Glauber trajectory of the spin counts.
    Simulate(SimulateArgs),
    /// Greedy coupling times over independent trials.
    Couple(CoupleArgs),
    /// Exact mixing times of the counts chain over a grid of n.
    MixingExact(MixingArgs),
    /// Critical values, order parameter and contraction ratios over a beta grid.
    PhaseDiagram(PhaseArgs),
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalArgs {
    #[arg(long)]
    pub q: Option<usize>,
    /// Interaction exponent (default 2).
    #[arg(long)]
    pub r: Option<f64>,
    /// Output format (default json).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumArgs {
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Simplex grid used to cross-check the minimizer (q <= 4).
    #[arg(long)]
    pub grid_resolution: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionSel {
    All,
    Contraction,
    Riemann,
    Local,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckArgs {
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Step size of the monotone paths in the Riemann-sum condition (default 0.05).
    #[arg(long, alias = "eps")]
    pub epsilon: Option<f64>,
    #[arg(long, alias = "grid")]
    pub grid_resolution: Option<u32>,
    /// Which condition to check (default all).
    #[arg(long, value_enum)]
    pub condition: Option<ConditionSel>,
    /// Random directions for the local condition (default 500).
    #[arg(long)]
    pub directions: Option<usize>,
    /// Seed of the direction set for the local condition (default 0).
    #[arg(long)]
    pub direction_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SimInit {
    /// Every spin equal to 1.
    Pure,
    /// Independent uniform spins.
    Random,
    /// The most balanced counts, randomly arranged.
    Balanced,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub steps: Option<u64>,
    /// Record counts every this many steps (default 1).
    #[arg(long)]
    pub record_every: Option<u64>,
    #[arg(long, value_enum)]
    pub init: Option<SimInit>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CoupleInit {
    WorstPurePair,
    RandomPair,
    EquilibriumVsPure,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupleArgs {
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Independent coupling trials (default 100).
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_enum)]
    pub init: Option<CoupleInit>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Steps after which a trial is censored (default 1e9).
    #[arg(long)]
    pub cap: Option<u64>,
    /// Sample the mean distance every this many steps (default 1).
    #[arg(long)]
    pub curve_stride: Option<u64>,
    /// Burn-in sweeps for equilibrium starts too large to sample exactly (default 1000).
    #[arg(long)]
    pub burn_in_sweeps: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Starts {
    /// Pure states and the most balanced state.
    Default,
    /// Every state of the counts chain.
    All,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingArgs {
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Population sizes, `a:b:s` or a single value.
    #[arg(long)]
    pub n: Option<RangeArg>,
    /// Total-variation threshold (default 0.25).
    #[arg(long, alias = "eps")]
    pub epsilon: Option<f64>,
    /// Give up after this many steps (default 1e7).
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long, value_enum)]
    pub starts: Option<Starts>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also write each distance curve `t,d_tv` to DIR/mixing_n<N>.csv.
    #[arg(long)]
    #[serde(skip)]
    pub curves: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseArgs {
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub r: Option<f64>,
    /// Inverse temperatures, `a:b:s`.
    #[arg(long)]
    pub beta: Option<RangeArg>,
    /// Grid for the contraction ratio (default 100; q <= 4 only).
    #[arg(long, alias = "grid")]
    pub grid_resolution: Option<u32>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn thread_pool(threads: Option<usize>) -> Result<(), CliError> {
    let n = match threads {
        Some(0) => return Err(CliError::Usage("--threads must be positive".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    thread_pool(cli.threads)?;
    let file = cli.config.as_deref();
    let out = cli.output.as_deref();
    match cli.command {
        Command::Critical(a) => commands::critical(a, file, out),
        Command::Equilibrium(a) => commands::equilibrium(a, file, out),
        Command::Check(a) => commands::check(a, file, out),
        Command::Simulate(a) => commands::simulate(a, file, out),
        Command::Couple(a) => commands::couple(a, file, out),
        Command::MixingExact(a) => commands::mixing_exact(a, file, out),
        Command::PhaseDiagram(a) => commands::phase_diagram(a, file, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            diag("error", "usage", json!({ "message": m }));
            ExitCode::from(2)
        }
        Err(CliError::Compute(m)) => {
            diag("error", "computation", json!({ "message": m }));
            ExitCode::from(1)
        }
        Err(CliError::Io(m)) => {
            diag("error", "io", json!({ "message": m }));
            ExitCode::from(1)
        }
    }
}
