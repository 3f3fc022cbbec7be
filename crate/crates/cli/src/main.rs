mod adversary;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use adversary::AdversarySpec;
use stabverify::GraphSpec;

/// Simulator and exact analytics for stabilizer-testing verification of
/// measurement-only blind quantum computation.
#[derive(Debug, Parser)]
#[command(name = "stabverify", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the protocol repeatedly and summarise acceptance and fidelity.
    Simulate(SimulateArgs),
    /// Print the conversion matrices and parity checks of a graph.
    Reduce(GraphArgs),
    /// Sweep every class profile up to --k-max and check the bounds exactly.
    VerifyBounds(VerifyBoundsArgs),
    /// Compare the enumeration oracle with the closed forms for one profile.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct GraphSource {
    /// Built-in graph: path:N, grid:WxH, rhg:XxYxZ or edgeless:N.
    #[arg(long)]
    graph: Option<GraphSpec>,
    /// Graph document: {"n_b": .., "n_w": .., "edges": [[b, w], ..]}.
    #[arg(long, value_name = "FILE")]
    graph_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GraphArgs {
    #[command(flatten)]
    source: GraphSource,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: GraphSource,
    /// Copies per test group; 2k+1 copies are sent in total.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// honest, single-bad:S,T, iid:PX,PZ or mixture:FILE.
    #[arg(long, default_value = "honest")]
    adversary: AdversarySpec,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Significance level for the fidelity bound, e.g. 0.5 or 1/3.
    /// Defaults to the observed acceptance rate.
    #[arg(long)]
    alpha: Option<String>,
    /// Sample measurement outcomes and evaluate the stabilizer relations
    /// instead of reading syndromes directly.
    #[arg(long)]
    raw_outcomes: bool,
    /// Run trials on a single thread.
    #[arg(long)]
    sequential: bool,
    /// Directory for the default output files.
    #[arg(long, env = "STABVERIFY_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    /// JSON-lines transcript file [default: OUT_DIR/transcripts.jsonl].
    #[arg(long)]
    transcripts: Option<PathBuf>,
    /// CSV summary file [default: OUT_DIR/summary.csv].
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyBoundsArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k_max: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    k_min: u64,
    /// Only emit profiles with at most this many (1,1) copies.
    #[arg(long)]
    max_c: Option<usize>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Copies of class (1,0).
    a: usize,
    /// Copies of class (0,1).
    b: usize,
    /// Copies of class (1,1).
    c: usize,
    k: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(args),
        Command::Reduce(args) => commands::reduce(args),
        Command::VerifyBounds(args) => commands::verify_bounds(args),
        Command::Oracle(args) => commands::oracle(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
