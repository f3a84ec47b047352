mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Exact engine for the genus-0 quantum K-theory hierarchy.
#[derive(Parser, Debug)]
#[command(name = "kthier", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Emit the flows P(n,i) as term tables.
    Flows(FlowsArgs),
    /// Run the identity ledger and exit nonzero on any failure.
    Verify(VerifyArgs),
    /// Solve for τ(t) and the topological solution w(t).
    Tau(TauArgs),
    /// Tabulate point invariants from the string equation.
    Invariants(InvariantsArgs),
    /// Evolve loop data under one flow.
    Simulate(SimulateArgs),
    /// Check the topological recursion relation.
    Trr(TrrArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Built-in model (`pt` or `pt2`).
    #[arg(long, default_value = "pt", conflicts_with = "model_file")]
    pub model: String,
    /// Model description file (TOML).
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    /// Truncation degree in v.
    #[arg(long = "d-v", default_value_t = 10, value_parser = clap::value_parser!(i32).range(1..))]
    pub d_v: i32,
    /// Truncation degree in the Novikov variables.
    #[arg(long = "d-q", default_value_t = 0, value_parser = clap::value_parser!(i32).range(0..))]
    pub d_q: i32,
    /// Minimum number of u-orders of S to compute.
    #[arg(long = "n-u", default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub n_u: u64,
    /// Directory for CSV and JSON artifacts; nothing is written when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
    /// Seed recorded in reports and used by randomized steps.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct FlowsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Emit only this n.
    #[arg(long, conflicts_with = "max_n")]
    pub n: Option<usize>,
    /// Emit every n up to this bound.
    #[arg(long, default_value_t = 3)]
    pub max_n: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Largest n in the flow budget; pairs are checked for n1 + n2 <= max-n.
    #[arg(long, default_value_t = 4)]
    pub max_n: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct TauArgs {
    #[command(flatten)]
    pub common: Common,
    /// Largest descendant index k of the active variables t(k,i).
    #[arg(long = "k-t", default_value_t = 2)]
    pub k_t: usize,
    /// Total degree in t through which τ is computed.
    #[arg(long = "d-t", default_value_t = 4, value_parser = clap::value_parser!(i32).range(1..))]
    pub d_t: i32,
    /// Also verify that τ and w solve the flows P(n,i) for n up to this bound.
    #[arg(long)]
    pub check_flows: Option<usize>,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
pub enum Mode {
    Minimal,
    DimensionVanishing,
}

#[derive(Args, Debug, Serialize)]
pub struct InvariantsArgs {
    /// Largest number of (L-1)-power insertions besides the two units.
    #[arg(long, default_value_t = 4)]
    pub max_degree: usize,
    /// Largest power of (L-1) in a single insertion.
    #[arg(long, default_value_t = 3)]
    pub max_k: u32,
    /// How correlators the string equation cannot reduce are treated.
    #[arg(long, value_enum, default_value_t = Mode::DimensionVanishing)]
    pub mode: Mode,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Flow index n.
    #[arg(long, default_value_t = 1)]
    pub flow_n: usize,
    /// Flow index i.
    #[arg(long, default_value_t = 0)]
    pub flow_i: usize,
    /// Number of grid points (a power of two).
    #[arg(long, default_value_t = 256)]
    pub m: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    #[arg(long, default_value_t = 0.1)]
    pub t_end: f64,
    /// Amplitude of the initial sine profile, same for every component.
    #[arg(long, default_value_t = 0.1)]
    pub amplitude: f64,
    /// Mean of the initial profile.
    #[arg(long, default_value_t = 0.0)]
    pub mean: f64,
    /// Record conserved quantities every this many steps.
    #[arg(long, default_value_t = 100)]
    pub cadence: usize,
    /// Conserved quantities H(m,i) are monitored for m up to this bound.
    #[arg(long, default_value_t = 4)]
    pub max_density: usize,
    /// Relative drift above which the run is reported as failed.
    #[arg(long, default_value_t = 1e-8)]
    pub drift_tol: f64,
    /// Numerical values of the Novikov variables.
    #[arg(long, value_delimiter = ',')]
    pub novikov: Vec<f64>,
    /// Disable the 2/3-rule dealiasing.
    #[arg(long)]
    pub no_dealias: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct TrrArgs {
    #[command(flatten)]
    pub common: Common,
    /// Values of k (each >= 1), comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub k: Vec<usize>,
    /// Values of k2, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub k2: Vec<usize>,
    /// Values of k3, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub k3: Vec<usize>,
    #[arg(long = "d-t", default_value_t = 5, value_parser = clap::value_parser!(i32).range(1..))]
    pub d_t: i32,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Flows(a) => commands::flows(a),
        Command::Verify(a) => commands::verify(a),
        Command::Tau(a) => commands::tau(a),
        Command::Invariants(a) => commands::invariants(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Trr(a) => commands::trr(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
