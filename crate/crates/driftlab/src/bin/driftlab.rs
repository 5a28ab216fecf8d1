use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use driftlab::commands::{cmd_bounds, cmd_check, cmd_convergence, cmd_simulate};
use driftlab::scenario::{Mode, ScenarioConfig};

/// Filtering laboratory for a market with hidden mean-reverting drift and
/// expert opinions.
#[derive(Parser)]
#[command(name = "driftlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one seeded path per intensity and write filter trajectories.
    Simulate(RunArgs),
    /// Monte Carlo convergence study across intensities.
    Convergence(RunArgs),
    /// Bound constants and scaled-variance table.
    Bounds(RunArgs),
    /// Randomized property checks; exit status reflects the outcome.
    Check(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML); the built-in reference scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self, mode: Mode) -> driftlab::Result<ScenarioConfig> {
        let mut config = match &self.config {
            Some(path) => ScenarioConfig::from_path(path)?,
            None => ScenarioConfig::default(),
        };
        config.run.mode = mode;
        if let Some(seed) = self.seed {
            config.run.seed = seed;
        }
        if let Some(out) = &self.out {
            config.run.output_dir = out.clone();
        }
        Ok(config)
    }
}

fn run() -> driftlab::Result<u8> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(args) => {
            let config = args.load(Mode::Simulate)?;
            let files = cmd_simulate(&config)?;
            for f in &files {
                println!("wrote {}", f.display());
            }
            Ok(0)
        }
        Command::Convergence(args) => {
            let config = args.load(Mode::Convergence)?;
            let files = cmd_convergence(&config)?;
            for f in &files {
                println!("wrote {}", f.display());
            }
            Ok(0)
        }
        Command::Bounds(args) => {
            let config = args.load(Mode::Bounds)?;
            let output = cmd_bounds(&config)?;
            print!("{}", output.text);
            for f in &output.files {
                println!("wrote {}", f.display());
            }
            Ok(0)
        }
        Command::Check(args) => {
            let config = args.load(Mode::Check)?;
            let report = cmd_check(&config)?;
            print!("{}", report.render());
            if let Some(f) = &report.failure_file {
                eprintln!("offending sample written to {}", f.display());
            }
            Ok(if report.all_pass() { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
