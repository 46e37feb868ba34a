mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::output::{Context, Failure};

#[derive(Parser)]
#[command(name = "legendrian", version, about = "Legendrian surface experiments")]
struct Cli {
    /// JSON experiment config; unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Comma-separated mesh resolutions, e.g. "16,32,64,128".
    #[arg(long, global = true, value_delimiter = ',')]
    resolution_ladder: Option<Vec<usize>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Random-point checks of the contact structures.
    VerifyIdentities,
    /// Legendrian lift of a Lagrangian sample grid.
    Lift,
    /// Penalized energy and gradient of a surface.
    Energy,
    /// Hamiltonian descent along the epsilon schedule.
    Descend,
    /// Truncated monotonicity balance and gauge defects over the ladder.
    Monotonicity,
    /// Density ratios, theta_0 and quasi-monotonicity constants over the ladder.
    Density,
    /// Refinement study of the Clifford torus.
    CliffordDemo,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut config: ExperimentConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(ladder) = &cli.resolution_ladder {
        config.resolution_ladder = Some(ladder.clone());
    }
    if config.ladder().is_empty() {
        return Err(Failure::Validation("empty resolution ladder".into()));
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let config = load(cli)?;
    let name = match cli.command {
        Command::VerifyIdentities => "verify-identities",
        Command::Lift => "lift",
        Command::Energy => "energy",
        Command::Descend => "descend",
        Command::Monotonicity => "monotonicity",
        Command::Density => "density",
        Command::CliffordDemo => "clifford-demo",
    };
    let ctx = Context::new(name, config, cli.out.clone())?;
    match cli.command {
        Command::VerifyIdentities => commands::verify_identities(&ctx),
        Command::Lift => commands::lift(&ctx),
        Command::Energy => commands::energy(&ctx),
        Command::Descend => commands::descend(&ctx),
        Command::Monotonicity => commands::monotonicity(&ctx),
        Command::Density => commands::density(&ctx),
        Command::CliffordDemo => commands::clifford_demo(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
