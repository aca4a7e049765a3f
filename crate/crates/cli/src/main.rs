use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pauli_current_cli::{config::ScenarioConfig, CliError, PathMode};

#[derive(Parser)]
#[command(
    name = "pauli-current",
    version,
    about = "Spinor current decomposition: verification, evolution, and convergence studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every identity check for the configured scenario
    Verify(CommonArgs),
    /// Step the state in time, tracking continuity and writing snapshots
    Evolve(CommonArgs),
    /// Rerun the grid checks across refinement levels and fit orders
    Converge {
        #[command(flatten)]
        common: CommonArgs,
        /// Override the number of refinement levels from the config
        #[arg(long)]
        refinements: Option<usize>,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the scenario config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output_dir`
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's random seed
    #[arg(long)]
    seed: Option<u64>,
    /// Which evaluation paths to exercise
    #[arg(long, value_enum, default_value_t = PathArg::Both)]
    path: PathArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PathArg {
    Grid,
    Analytic,
    Both,
}

impl PathArg {
    fn mode(self) -> PathMode {
        match self {
            PathArg::Grid => PathMode {
                grid: true,
                analytic: false,
            },
            PathArg::Analytic => PathMode {
                grid: false,
                analytic: true,
            },
            PathArg::Both => PathMode {
                grid: true,
                analytic: true,
            },
        }
    }
}

fn run() -> Result<bool, CliError> {
    let cli = Cli::parse();
    let (common, refinements_override) = match &cli.command {
        Command::Verify(c) | Command::Evolve(c) => (c, None),
        Command::Converge {
            common,
            refinements,
        } => (common, *refinements),
    };

    let mut config = ScenarioConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(r) = refinements_override {
        config.convergence.refinements = r;
    }
    config.validate()?;

    let out_dir = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output_dir));
    let seed = config.seed;
    let mode = common.path.mode();

    let report = match cli.command {
        Command::Verify(_) => pauli_current_cli::run_verify(&config, seed, mode, &out_dir)?,
        Command::Evolve(_) => pauli_current_cli::run_evolve(&config, seed, mode, &out_dir)?,
        Command::Converge { .. } => pauli_current_cli::run_converge(&config, seed, mode, &out_dir)?,
    };
    println!(
        "{}: {}",
        report.command,
        if report.all_passed { "all checks passed" } else { "CHECKS FAILED" }
    );
    Ok(report.all_passed)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
