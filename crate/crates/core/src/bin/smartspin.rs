use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use smartspin::scenario::{self, WORKERS_ENV};

#[derive(Parser)]
#[command(
    name = "smartspin",
    version,
    about = "Global-field spin qubit simulator: pulse calibration, noise maps and ramp sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config (or re-run a manifest.json)
    Run {
        /// Scenario config path
        config: PathBuf,
        /// Override the output directory
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: SMARTSPIN_WORKERS or all cores)
        #[arg(long)]
        workers: Option<usize>,
        /// Seed for optimizer restarts
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List available experiments and their config fields
    List,
    /// Parse and validate a config without running it
    Validate {
        /// Scenario config path
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> smartspin::Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
            seed,
        } => {
            let mut scenario = scenario::load_scenario(&config)?;
            if let Some(dir) = out {
                scenario.out_dir = dir;
            }
            if let Some(seed) = seed {
                scenario.seed = seed;
            }
            scenario.workers = workers
                .or(scenario.workers)
                .or_else(|| {
                    std::env::var(WORKERS_ENV)
                        .ok()
                        .and_then(|v| v.parse().ok())
                });
            let summary = scenario::run(&scenario)?;
            for path in &summary.outputs {
                println!("wrote {}", path.display());
            }
            println!("wrote {}", summary.manifest_path.display());
            Ok(())
        }
        Command::List => {
            print!("{}", scenario::list_experiments());
            Ok(())
        }
        Command::Validate { config } => {
            let scenario = scenario::load_scenario(&config)?;
            println!(
                "ok: {} (omega_r = {} MHz, f_mod = {} MHz)",
                scenario.experiment.name(),
                scenario.omega_r_mhz,
                scenario.f_mod_mhz
            );
            Ok(())
        }
    }
}
