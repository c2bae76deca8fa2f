use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fpam_experiments::config::{Experiment, ExperimentConfig};
use fpam_experiments::{execute, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "fpam", version, about = "Renormalized fractional PAM experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat key=value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of seeds / Monte Carlo samples (overrides `n_samples`).
    #[arg(long, global = true)]
    seeds: Option<usize>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// `key=value`, applied after the config file; repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Renormalization constant: two routes and the log asymptotics.
    Renorm,
    /// Convergence of u_eps along a coupled ladder.
    Converge,
    /// Change-of-variables identities and spectral batteries.
    Identity,
    /// Monte Carlo checks of the Gaussian identities and moment trends.
    Chaos,
    /// Fitted regularity exponents and Schauder slopes.
    Regularity,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::Renorm => Experiment::Renorm,
            Command::Converge => Experiment::Converge,
            Command::Identity => Experiment::Identity,
            Command::Chaos => Experiment::Chaos,
            Command::Regularity => Experiment::Regularity,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { EXIT_PASS as u8 });
        }
    };
    let mut overrides = cli.overrides.clone();
    if let Some(n) = cli.seeds {
        overrides.push(format!("n_samples={n}"));
    }
    if let Some(dir) = &cli.out {
        overrides.push(format!("output_dir={}", dir.display()));
    }
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(EXIT_USAGE as u8);
    }
    let cfg = match ExperimentConfig::load(cli.command.into(), cli.config.as_deref(), &overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    match execute(&cfg, cli.threads, &cfg.output_dir) {
        Ok(outcome) => {
            for c in &outcome.report.checks {
                println!("{c}");
            }
            println!("wrote {} tables to {}", outcome.files.len(), cfg.output_dir.display());
            ExitCode::from(if outcome.report.passed() { EXIT_PASS } else { EXIT_FAIL } as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
