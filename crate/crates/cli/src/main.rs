//! `cmjlab`: solve, simulate and verify the collaboration-graph CMJ model.
//!
//! Exit codes: 0 success, 1 input or numerical error, 2 regime gate,
//! 3 cap or budget hit.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cmjlab::Threads;
use thiserror::Error;

use commands::Outcome;
use config::{CharKind, GridScale, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] cmjlab::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(cmjlab::Error::Regime(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "cmjlab",
    version,
    about = "Branching-process and collaboration-graph laboratory"
)]
struct Cli {
    /// TOML file with run settings; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for replica fan-out (0 = all cores). Does not affect results.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Print the effective configuration as TOML and exit without running.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Growth rates, extinction roots and discount factors.
    Solve(SolveArgs),
    /// Simulate the collaboration graph and export time series.
    Simulate(SimulateArgs),
    /// Normalized L_k series of a counted process and the C_k bound.
    Moments(MomentsArgs),
    /// Maximal degree against its plug-in limit.
    Maxdeg(MaxdegArgs),
    /// Relabel a family tree so no child shares its parent's birth time.
    Relabel(RelabelArgs),
    /// Degree-process and Malthusian Monte Carlo consistency checks.
    Crosscheck(CrosscheckArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Baseline death hazard of an edge.
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    /// Death hazard added per offspring.
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    /// Probability that a birth event has jump size 2.
    #[arg(long, allow_hyphen_values = true)]
    p: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    /// Master seed; replica seeds are derived from it by index.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Maximum number of individuals (edges) per replica.
    #[arg(long)]
    event_budget: Option<usize>,
    /// Simulated time span.
    #[arg(long, allow_hyphen_values = true)]
    horizon: Option<f64>,
}

#[derive(Args)]
struct GridArgs {
    /// First grid time.
    #[arg(long)]
    t_start: Option<f64>,
    /// Last grid time; defaults to the horizon.
    #[arg(long)]
    t_stop: Option<f64>,
    #[arg(long)]
    t_points: Option<usize>,
    #[arg(long, value_parser = ["linear", "log"])]
    t_scale: Option<String>,
}

#[derive(Args)]
struct TolArgs {
    /// Absolute quadrature tolerance.
    #[arg(long)]
    quad_tol: Option<f64>,
    /// Root bracket width.
    #[arg(long)]
    root_tol: Option<f64>,
}

#[derive(Args)]
struct OutArgs {
    /// Output directory; defaults to $CMJLAB_OUT_DIR, then the working directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Output file stem.
    #[arg(long)]
    output: Option<String>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    tol: TolArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Moment order for the discount factor m_k.
    #[arg(long, allow_hyphen_values = true)]
    k: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutArgs,
    /// One CSV of per-time means and standard errors instead of one per replica.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    aggregate: Option<bool>,
    /// Times at which to export full graph snapshots.
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<f64>>,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    tol: TolArgs,
    #[command(flatten)]
    out: OutArgs,
    #[arg(long = "char", value_enum)]
    characteristic: Option<CharKind>,
    /// Moment order of the norm.
    #[arg(long, allow_hyphen_values = true)]
    k: Option<f64>,
    /// Exponential normalization: alpha, beta or a number.
    #[arg(long)]
    rate: Option<String>,
    /// Knots of a weighted characteristic, e.g. 0,1,inf.
    #[arg(long, value_delimiter = ',')]
    knots: Option<Vec<f64>>,
    /// Weights on the intervals between knots.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Lives sampled for the A and B estimates.
    #[arg(long)]
    lives: Option<usize>,
    /// Override for C_1 (default: max of the k = 1 series plus 3 SE over the last half of the grid).
    #[arg(long)]
    c1: Option<f64>,
}

#[derive(Args)]
struct MaxdegArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    tol: TolArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Moment order of the distance; must exceed alpha/beta.
    #[arg(long, allow_hyphen_values = true)]
    k: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<f64>>,
}

#[derive(Args)]
struct RelabelArgs {
    /// Family tree JSON: {"nodes": [{"label": [..], "birth_time": ..}, ..]}.
    input: Option<PathBuf>,
    /// Deepest label length that must be free of same-instant children.
    #[arg(long)]
    depth_cap: Option<usize>,
    #[command(flatten)]
    out: OutArgs,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CrosscheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    tol: TolArgs,
    #[command(flatten)]
    out: OutArgs,
    #[arg(long)]
    lives: Option<usize>,
}

macro_rules! set {
    ($cfg:ident; $($src:expr => $field:ident),* $(,)?) => {
        $(if let Some(v) = $src.clone() { $cfg.$field = v.into(); })*
    };
}

impl ModelArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set!(cfg; self.b => b, self.c => c, self.p => p);
    }
}

impl RunArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set!(cfg; self.seed => seed, self.replicas => replicas, self.event_budget => event_budget, self.horizon => horizon);
    }
}

impl GridArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set!(cfg; self.t_start => t_start, self.t_points => t_points);
        if self.t_stop.is_some() {
            cfg.t_stop = self.t_stop;
        }
        match self.t_scale.as_deref() {
            Some("log") => cfg.t_scale = GridScale::Log,
            Some(_) => cfg.t_scale = GridScale::Linear,
            None => {}
        }
    }
}

impl TolArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set!(cfg; self.quad_tol => quad_tol, self.root_tol => root_tol);
    }
}

impl OutArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if self.out_dir.is_some() {
            cfg.out_dir = self.out_dir.clone();
        }
        if self.output.is_some() {
            cfg.output = self.output.clone();
        }
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Simulate(_) => "simulate",
            Command::Moments(_) => "moments",
            Command::Maxdeg(_) => "maxdeg",
            Command::Relabel(_) => "relabel",
            Command::Crosscheck(_) => "crosscheck",
        }
    }

    fn apply(&self, cfg: &mut RunConfig) {
        match self {
            Command::Solve(a) => {
                a.model.apply(cfg);
                a.tol.apply(cfg);
                a.out.apply(cfg);
                set!(cfg; a.k => k, a.seed => seed);
            }
            Command::Simulate(a) => {
                a.model.apply(cfg);
                a.run.apply(cfg);
                a.grid.apply(cfg);
                a.out.apply(cfg);
                set!(cfg; a.aggregate => aggregate, a.snapshots => snapshots);
            }
            Command::Moments(a) => {
                a.model.apply(cfg);
                a.run.apply(cfg);
                a.grid.apply(cfg);
                a.tol.apply(cfg);
                a.out.apply(cfg);
                set!(cfg; a.characteristic => characteristic, a.k => k, a.rate => rate,
                    a.knots => knots, a.weights => weights, a.lives => lives);
                if a.c1.is_some() {
                    cfg.c1 = a.c1;
                }
            }
            Command::Maxdeg(a) => {
                a.model.apply(cfg);
                a.run.apply(cfg);
                a.tol.apply(cfg);
                a.out.apply(cfg);
                set!(cfg; a.k => k, a.horizons => horizons);
            }
            Command::Relabel(a) => {
                a.out.apply(cfg);
                set!(cfg; a.depth_cap => depth_cap, a.seed => seed);
                if a.input.is_some() {
                    cfg.input = a.input.clone();
                }
            }
            Command::Crosscheck(a) => {
                a.model.apply(cfg);
                a.run.apply(cfg);
                a.tol.apply(cfg);
                a.out.apply(cfg);
                set!(cfg; a.lives => lives);
            }
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let name = cli.command.name();
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(name, path)?,
        None => RunConfig::defaults(name),
    };
    cli.command.apply(&mut cfg);
    cfg.validate()?;
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return Ok(Outcome::Ok);
    }
    let threads = Threads(cli.threads);
    match &cli.command {
        Command::Solve(_) => commands::solve(&cfg),
        Command::Simulate(_) => commands::simulate(&cfg, threads),
        Command::Moments(_) => commands::moments(&cfg, threads),
        Command::Maxdeg(_) => commands::maxdeg(&cfg, threads),
        Command::Relabel(_) => commands::relabel(&cfg),
        Command::Crosscheck(_) => commands::crosscheck(&cfg, threads),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Regime) => ExitCode::from(2),
        Ok(Outcome::CapHit) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
