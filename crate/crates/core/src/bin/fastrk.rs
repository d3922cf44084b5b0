use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fastrk::cli::{cmd_bench_solves, cmd_plan, cmd_quaderr, cmd_run, exit_code, RunConfig};
use fastrk::{Error, Result};

#[derive(Parser)]
#[command(name = "fastrk", version, about = "Fast Runge-Kutta stepping by contour integrals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the fast algorithm and direct stepping, and compare them.
    Run {
        /// JSON config file, or the name of a built-in profile such as `paper-sec5`.
        #[arg(long)]
        config: PathBuf,
        /// Print the predicted solve counts without solving anything.
        #[arg(long)]
        dry_run: bool,
    },
    /// Solve counts of both methods over a list of step counts.
    BenchSolves {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated step counts, e.g. `5,25,125,625`.
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
    },
    /// Measured quadrature error against the a priori bound.
    Quaderr {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print a built-in profile as JSON.
    ShowConfig {
        #[arg(default_value = "paper-sec5")]
        profile: String,
    },
}

fn load(path: &Path) -> Result<RunConfig> {
    if !path.exists() {
        if let Some(cfg) = path.to_str().and_then(RunConfig::profile) {
            return Ok(cfg);
        }
    }
    RunConfig::load(path)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, dry_run } => {
            let cfg = load(&config)?;
            if dry_run {
                print!("{}", cmd_plan(&cfg)?);
            } else {
                println!("{}", cmd_run(&cfg)?);
            }
        }
        Command::BenchSolves { config, n_list } => {
            let cfg = load(&config)?;
            let table = cmd_bench_solves(&cfg, &n_list)?;
            print!("{}", table.to_csv());
            match table.crossover() {
                Some(n) => eprintln!("crossover: fast count below direct count from N = {n}"),
                None => eprintln!("crossover: not reached in this sweep"),
            }
        }
        Command::Quaderr { config } => {
            let cfg = load(&config)?;
            let table = cmd_quaderr(&cfg)?;
            print!("{}", table.to_csv());
            if !table.skipped.is_empty() {
                eprintln!("{} combinations skipped: bound preconditions not met", table.skipped.len());
            }
        }
        Command::ShowConfig { profile } => {
            let cfg =
                RunConfig::profile(&profile).ok_or_else(|| Error::Config(format!("unknown profile {profile}")))?;
            println!("{}", cfg.to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
