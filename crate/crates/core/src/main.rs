use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qdcascade::config::RunConfig;
use qdcascade::runner;

/// Pulsed three-level cascade simulator: Rabi power sweeps, Ramsey
/// interference, spin echo, lifetimes, and pair-efficiency arithmetic.
#[derive(Parser)]
#[command(name = "qdcascade", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file; omitted means all defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV files and summary.txt.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Worker threads for sweeps (default: all cores). Output bytes do
    /// not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Configuration overrides, e.g. --override "pulse.detuning=22 GHz".
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Time-resolved populations and g-b coherence for one pulse.
    Trajectory,
    /// Power dependence of the biexciton yield per detuning.
    Rabi,
    /// Ramsey fringe visibility versus pulse delay.
    Ramsey,
    /// Three-pulse echo visibility versus total delay.
    Echo,
    /// Dark-decay lifetime fits for both transitions.
    Lifetime,
    /// Heralding-efficiency and pair-rate arithmetic.
    Efficiency,
    /// Resolve the configuration and print every key with provenance.
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> qdcascade::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| qdcascade::Error::Config(format!("thread pool: {e}")))?;
    }
    let cfg = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    let sub = match cli.command {
        Command::Trajectory => runner::Subcommand::Trajectory,
        Command::Rabi => runner::Subcommand::Rabi,
        Command::Ramsey => runner::Subcommand::Ramsey,
        Command::Echo => runner::Subcommand::Echo,
        Command::Lifetime => runner::Subcommand::Lifetime,
        Command::Efficiency => runner::Subcommand::Efficiency,
        Command::Validate => {
            print!("{}", runner::validate_report(&cfg));
            return Ok(());
        }
    };
    let files = runner::run(sub, &cfg, &cli.out)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
