//! `pipenav`: characterization, controller synthesis, missions and sweeps.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration error,
//! 3 the mission ended in a fault.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "pipenav", version, about = "In-pipe robot navigation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spring stiffness curve, wall normal force and battery capacity.
    Characterize {
        /// Geometry/condition file (.toml or .json); built-in defaults if omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Diameter sweep in inches as START:STOP:STEP, e.g. 9:22:0.5.
        #[arg(long, value_parser = commands::parse_diameters)]
        diameters: Option<(f64, f64, f64)>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize the stabilizer and print gains and closed-loop poles as JSON.
    TuneReport {
        /// Mission file providing plant and control sections; defaults if omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write tune_report.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one seeded mission.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stop-position distribution under RSS jitter, with and without the rangefinder.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Number of seeds (defaults to the config's sweep.runs).
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        first_seed: Option<u64>,
        /// RSS jitter standard deviation in dB.
        #[arg(long)]
        jitter: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config file without running anything.
    ValidateConfig {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = ConfigKind::Auto)]
        kind: ConfigKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConfigKind {
    Auto,
    Mission,
    Characterization,
}

/// How a command failed, which decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Fault(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Config(_) => 2,
            Failure::Fault(_) => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Characterize { config, diameters, out } => {
            commands::characterize(config.as_deref(), diameters, out.as_deref())
        }
        Command::TuneReport { config, out } => commands::tune_report(config.as_deref(), out.as_deref()),
        Command::Run { config, seed, out } => commands::run(&config, seed, out.as_deref()),
        Command::Sweep {
            config,
            seeds,
            first_seed,
            jitter,
            out,
        } => commands::sweep(&config, seeds, first_seed, jitter, out.as_deref()),
        Command::ValidateConfig { path, kind } => commands::validate_config(&path, kind),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(e) => eprintln!("config error: {e:#}"),
                Failure::Fault(m) => eprintln!("mission fault: {m}"),
                Failure::Other(e) => eprintln!("error: {e:#}"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}
