use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use orlicz_bounds_cli::{cmd_bounds, cmd_conjugate, cmd_partition, cmd_simulate, cmd_verify_sobolev, load_config, CliResult};

/// Bounds on the sample-boundedness constant and Sobolev-type inequality checks.
#[derive(Parser)]
#[command(name = "orlicz-bounds", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (key = value with [section] headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = pool default).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override a config field, e.g. --set space.n=2.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Tabulate phi, its conjugate and the Young gap.
    Conjugate,
    /// Build the partition radii.
    Partition,
    /// Solve every level constant and report the envelope.
    Bounds,
    /// Check the extremal process by Monte Carlo.
    Simulate,
    /// Check the Sobolev-type inequality on the standard corpus.
    VerifySobolev,
}

fn run(cli: &Cli) -> CliResult<i32> {
    let mut overrides = cli.set.clone();
    if let Some(out) = &cli.out {
        overrides.push(format!("output.dir={}", out.display()));
    }
    if let Some(seed) = cli.seed {
        overrides.push(format!("monte_carlo.seed={seed}"));
    }
    if let Some(jobs) = cli.jobs {
        overrides.push(format!("monte_carlo.jobs={jobs}"));
    }
    let cfg = load_config(cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Conjugate => cmd_conjugate(&cfg),
        Command::Partition => cmd_partition(&cfg),
        Command::Bounds => cmd_bounds(&cfg),
        Command::Simulate => cmd_simulate(&cfg),
        Command::VerifySobolev => cmd_verify_sobolev(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = run(&cli).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
