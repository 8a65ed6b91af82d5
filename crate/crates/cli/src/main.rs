use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use wordperc_cli::{config::KEYS, main_with, Command};

/// Simulation and estimation tools for percolation of words.
#[derive(Parser)]
#[command(name = "wordperc", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Monte Carlo estimate of one experiment.
    Estimate(RunArgs),
    /// Estimates over a list of values of one key.
    Sweep(RunArgs),
    /// Exact set of words seen from a vertex.
    Oracle(RunArgs),
    /// Black-point exploration step log.
    Explore(RunArgs),
    /// Oriented percolation event estimates.
    Oriented(RunArgs),
    /// Closed-form bounds.
    Bounds(RunArgs),
    /// Lists every configuration key.
    Keys,
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file of `key = value` lines.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Overrides of the form `--key=value`.
    #[arg(value_name = "--KEY=VALUE", allow_hyphen_values = true, trailing_var_arg = true)]
    overrides: Vec<String>,
}

fn main() {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Estimate(a) => (Command::Estimate, a),
        Sub::Sweep(a) => (Command::Sweep, a),
        Sub::Oracle(a) => (Command::Oracle, a),
        Sub::Explore(a) => (Command::Explore, a),
        Sub::Oriented(a) => (Command::Oriented, a),
        Sub::Bounds(a) => (Command::Bounds, a),
        Sub::Keys => {
            for (key, _, help) in KEYS {
                println!("{key:<20} {help}");
            }
            return;
        }
    };
    std::process::exit(main_with(command, args.config.as_deref(), &args.overrides));
}
