use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod error;

use error::CliError;

#[derive(Parser)]
#[command(name = "firsthit", version, about = "First-hitting densities and barrier digitals from European digital puts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the hitting density and price the contract.
    Solve(CommonArgs),
    /// Flat-vol cross-check against the closed form and Monte Carlo.
    Validate(CommonArgs),
    /// Price along a skew or vol axis.
    Sweep(CommonArgs),
    /// Price an equity default swap and its stress ladder.
    Eds(CommonArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for output files; created if missing.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Overrides the number of time steps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Overrides the Monte Carlo seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Clamp negative densities to zero instead of failing.
    #[arg(long)]
    pub clamp_density: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Validate(a) => commands::validate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Eds(a) => commands::eds(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}

impl From<firsthit::Error> for CliError {
    fn from(e: firsthit::Error) -> Self {
        match e.kind() {
            firsthit::ErrorKind::Config => CliError::Config(e.to_string()),
            firsthit::ErrorKind::Numerical => CliError::Numerical(e.to_string()),
        }
    }
}
