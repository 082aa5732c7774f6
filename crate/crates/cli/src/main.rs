use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rug::Integer;

use roulette_cli::{
    default_cache_dir, parse_precision, run, CliError, Command, RunConfig, Simulation, FULL_N, QUICK_N,
};

/// Certified bounds and coupling experiments for the Russian roulette process.
#[derive(Debug, Parser)]
#[command(name = "roulette", version)]
struct Cli {
    /// Largest n of the bounds table (default 1200, or 6000 with --full).
    #[arg(long, global = true)]
    n: Option<u32>,

    /// Use the full-size table, N = 6000.
    #[arg(long, global = true)]
    full: bool,

    /// Fixed-point scale of the stored bounds.
    #[arg(long, global = true, default_value = "10000000000")]
    scale: String,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Enclosure width target, e.g. 1e-30 or 1/1000.
    #[arg(long, global = true, default_value = "1e-30")]
    precision: String,

    /// Output file for the command's CSV.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Recompute the bounds table even if a cache covers it.
    #[arg(long, global = true)]
    force_recompute: bool,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Compute or load the bounds table.
    Bounds,
    /// Check the non-convergence certificate.
    Certify,
    /// Run a coupling experiment.
    #[command(subcommand)]
    Simulate(Sim),
    /// Export n, log n and the bounds for plotting.
    Figure,
}

#[derive(Debug, Subcommand)]
enum Sim {
    /// One round for every n in a range, checking the pathwise invariants.
    RoundSweep {
        #[arg(long, default_value_t = 2)]
        from: u32,
        #[arg(long, default_value_t = 200)]
        to: u32,
        #[arg(long, default_value_t = 10_000)]
        realizations: u64,
    },
    /// Follow one process through successive rounds.
    Multiround {
        #[arg(long)]
        start: u32,
        #[arg(long, default_value_t = 100)]
        rounds: u32,
        /// Copy index of the first round.
        #[arg(long, default_value_t = 0)]
        copy: i64,
    },
    /// Frequency of S_a = S_b against its lower bound.
    Collision {
        #[arg(long)]
        a: u32,
        #[arg(long)]
        b: u32,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
}

fn config(cli: Cli) -> Result<RunConfig, CliError> {
    let command = match cli.command {
        Cmd::Bounds => Command::Bounds,
        Cmd::Certify => Command::Certify,
        Cmd::Figure => Command::Figure,
        Cmd::Simulate(Sim::RoundSweep { from, to, realizations }) => {
            Command::Simulate(Simulation::RoundSweep { from, to, realizations })
        }
        Cmd::Simulate(Sim::Multiround { start, rounds, copy }) => {
            Command::Simulate(Simulation::Multiround { start, rounds, copy })
        }
        Cmd::Simulate(Sim::Collision { a, b, trials }) => Command::Simulate(Simulation::Collision { a, b, trials }),
    };
    let scale: Integer = cli
        .scale
        .parse()
        .ok()
        .filter(|s: &Integer| *s > 0)
        .ok_or_else(|| CliError::Usage(format!("invalid scale {:?}", cli.scale)))?;
    Ok(RunConfig {
        command,
        n: cli.n.unwrap_or(if cli.full { FULL_N } else { QUICK_N }),
        scale,
        precision: parse_precision(&cli.precision)?,
        seed: cli.seed,
        threads: cli.threads,
        out: cli.out,
        cache_dir: default_cache_dir(),
        force_recompute: cli.force_recompute,
    })
}

fn main() -> ExitCode {
    let result = config(Cli::parse()).and_then(|c| run(&c, &mut std::io::stdout().lock()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("roulette: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
