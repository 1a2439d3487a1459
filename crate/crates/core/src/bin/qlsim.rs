use std::path::PathBuf;

use clap::{Parser, Subcommand};
use qlattice::cli::{list_experiments, run, Invocation};

/// Run quantized-lattice experiments and write results.csv, summary.json and PGM maps.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[command(subcommand)]
    command: Option<Command>,
    /// Config file with one [section] per experiment.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run only this experiment (a section name or a registered experiment).
    #[arg(long)]
    experiment: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for all random draws; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// List registered experiments and exit.
    #[arg(long)]
    list: bool,
}

#[derive(Subcommand)]
enum Command {
    /// List registered experiments.
    List,
}

fn main() {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if args.list || matches!(args.command, Some(Command::List)) {
        print!("{}", list_experiments());
        return;
    }
    std::process::exit(run(&Invocation {
        config: args.config,
        experiment: args.experiment,
        out: args.out,
        seed: args.seed,
        threads: args.threads,
    }));
}
