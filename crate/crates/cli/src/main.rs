use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ergodic_opuc_cli::{run, Command, Overrides};

/// Ergodic Verblunsky coefficients: Boshernitzan diagnostics, Szegő
/// cocycles, CMV spectra.
#[derive(Debug, Parser)]
#[command(name = "opuc", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `out` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Number of θ grid points.
    #[arg(long, global = true)]
    grid: Option<usize>,

    /// Cocycle steps n.
    #[arg(long, global = true)]
    steps: Option<usize>,

    /// Base points per estimate.
    #[arg(long, global = true)]
    samples: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Boshernitzan scan; exit 0 SupportsB, 2 Weak, 3 Inconclusive.
    Bosh,
    /// Lyapunov estimates on a θ grid.
    Lyapunov,
    /// Spectrum scan, optionally compared with approximant bands.
    Spectrum,
    /// Orbit and continued-fraction checks for a partition point β.
    ClassifyBeta,
    /// Eigenvalues of a CMV truncation.
    CmvEig,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Bosh => Command::Bosh,
        Cmd::Lyapunov => Command::Lyapunov,
        Cmd::Spectrum => Command::Spectrum,
        Cmd::ClassifyBeta => Command::ClassifyBeta,
        Cmd::CmvEig => Command::CmvEig,
    };
    let Some(config) = cli.config else {
        eprintln!("opuc: --config is required");
        return ExitCode::from(1);
    };
    let over = Overrides {
        out: cli.out,
        grid: cli.grid,
        steps: cli.steps,
        samples: cli.samples,
    };
    match run(command, &config, &over) {
        Ok(outcome) => {
            println!("{}: {}", command.name(), outcome.summary);
            ExitCode::from(outcome.status as u8)
        }
        Err(e) => {
            eprintln!("opuc: {e}");
            ExitCode::from(1)
        }
    }
}
