use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

mod commands;
mod manifest;

/// Liquid-state proton NMR spectra from Trotterized circuits.
#[derive(Debug, Parser)]
#[command(name = "nmrqsim", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Acquire an FID and its spectrum.
    Simulate(SimulateArgs),
    /// Cosine distance of product-formula spectra against the exact one.
    Compare(CompareArgs),
    /// Native two-qubit gate count and depth after routing.
    Gates(GatesArgs),
    /// List the independent spin clusters.
    Clusters(ClustersArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 4096)]
    pub points: usize,
    #[arg(long, default_value_t = 8000.0)]
    pub rate_hz: f64,
    /// 0 gives exact expectation values.
    #[arg(long, default_value_t = 4000)]
    pub shots: usize,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    /// lie, suzuki2, suzuki4, ...
    #[arg(long, default_value = "lie")]
    pub formula: String,
    /// trotter or exact
    #[arg(long, default_value = "trotter")]
    pub engine: String,
    #[arg(long, default_value_t = 0.0)]
    pub lb_hz: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Also write the circuit of the last time point to circuit.txt.
    #[arg(long)]
    pub dump_circuit: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CompareArgs {
    /// Spin-system file or directory of them.
    #[arg(long)]
    pub input: PathBuf,
    /// Lie-Trotter repetition counts; 1,2,3,4 when neither list is given.
    #[arg(long, value_delimiter = ',')]
    pub reps: Vec<usize>,
    /// Suzuki orders.
    #[arg(long, value_delimiter = ',')]
    pub orders: Vec<u32>,
    #[arg(long, default_value_t = 4096)]
    pub points: usize,
    #[arg(long, default_value_t = 8000.0)]
    pub rate_hz: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GatesArgs {
    /// Spin-system file or directory of them.
    #[arg(long)]
    pub input: PathBuf,
    /// heavy-hex-<n> or a topology JSON file.
    #[arg(long, default_value = "heavy-hex-127")]
    pub topology: String,
    #[arg(long, default_value = "ecr")]
    pub basis: String,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ClustersArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub threshold_hz: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn exit_code(err: &nmrqsim::Error) -> u8 {
    use nmrqsim::Error::*;
    match err {
        Schema(_) | Validation(_) | Parameter(_) | UndefinedMetric(_) => 2,
        Resource(_) => 3,
        Decomposition(_) | Io(_) => 4,
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("NMRQSIM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match commands::run(cli.command, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nmrqsim: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
