//! Experiment runner: scene generation, single pipeline runs, parameter
//! sweeps and server benchmarks, with CSV/JSON report emission.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use edgefuse::Error;

mod commands;
mod sweep;

#[derive(Parser)]
#[command(name = "edgefuse", version, about = "Edge-cloud detection pipeline simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic ground-truth trace.
    Generate {
        /// Scene parameters JSON; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output trace path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one pipeline configuration over a trace and report metrics.
    Run {
        /// Scenario JSON; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trace: PathBuf,
        /// edge-only | cloud-only | edge-cloud | ef-edge-det
        #[arg(long)]
        mode: String,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for metrics.json, predictions.jsonl, events.jsonl and
        /// the appended report.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep described by a sweep spec.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Directory for rows.csv and cells.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Benchmark the model server across concurrent client counts.
    Servebench {
        /// Scenario JSON supplying the server config; defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated client counts, e.g. 2,10,50.
        #[arg(long)]
        clients: String,
        /// One request per client per this many milliseconds.
        #[arg(long, default_value_t = 2000.0)]
        period: f64,
        #[arg(long, default_value_t = 60_000.0)]
        duration: f64,
        /// Benchmark a live service at this address instead of simulating.
        #[arg(long)]
        live: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// CSV output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Start the model server wire service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value = "127.0.0.1:7171")]
        bind: String,
    },
}

fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Config(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { config, seed, out } => commands::generate(config, seed, &out),
        Command::Run { config, trace, mode, seed, out } => {
            commands::run(config, &trace, &mode, seed, out)
        }
        Command::Sweep { config, out } => commands::sweep(&config, &out),
        Command::Servebench { config, clients, period, duration, live, seed, out } => {
            commands::servebench(config, &clients, period, duration, live, seed, out)
        }
        Command::Serve { config, trace, bind } => commands::serve(config, &trace, &bind),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(exit_code(&error))
        }
    }
}
