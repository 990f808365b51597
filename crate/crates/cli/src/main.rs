//! Command-line front end for the tiled analog CAM simulator.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

use monosparse::experiments::ExperimentKind;
use monosparse::{Corner, Strategy, TileConfig};

/// Environment variable naming the default calibration file.
pub const CALIB_ENV: &str = "MONOSPARSE_CALIB";

#[derive(Parser, Debug)]
#[command(
    name = "monosparse",
    version,
    about = "Decision-tree inference on tiled analog CAM arrays"
)]
struct Cli {
    /// Cap worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic array with Gaussian don't-care placement.
    Gen(GenArgs),
    /// Compile a tree JSON into an array, optionally quantized.
    Compile(CompileArgs),
    /// Feature-reorder an array and save the permutation.
    Reorder(ReorderArgs),
    /// Run queries through a tiled array and print a JSON report.
    Simulate(SimulateArgs),
    /// Run one experiment of the suite and write its report.
    Experiment(ExperimentArgs),
    /// Summarize an experiment CSV as a text table.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    /// Target don't-care fraction.
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Place exactly round(lambda * cells) don't-cares instead of sampling.
    #[arg(long)]
    exact: bool,
    #[arg(short, long)]
    output: PathBuf,
    /// Also draw this many uniform queries.
    #[arg(long, requires = "queries_out")]
    queries: Option<usize>,
    #[arg(long, requires = "queries")]
    queries_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompileArgs {
    #[arg(short, long)]
    tree: PathBuf,
    /// JSON list of [min, max] per feature, or a metrics file with
    /// `feature_bounds`; defaults to [0, 1] for every feature.
    #[arg(long)]
    bounds: Option<PathBuf>,
    /// Quantize to this many conductance levels.
    #[arg(long)]
    levels: Option<u32>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct ReorderArgs {
    #[arg(short, long)]
    array: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Where to write the row/column permutation.
    #[arg(long)]
    perm_out: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(short, long)]
    array: PathBuf,
    /// Tile shape RxC.
    #[arg(long, default_value = "24x48", value_parser = parse_tile)]
    tile: TileConfig,
    /// raw, fr, mono or monosparse.
    #[arg(long, default_value = "monosparse", value_parser = parse_strategy)]
    strategy: Strategy,
    /// JSON list of query vectors in feature units.
    #[arg(long, conflicts_with = "random_queries")]
    queries: Option<PathBuf>,
    /// Draw this many uniform queries instead of reading a file.
    #[arg(long)]
    random_queries: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Permutation from `reorder`: queries are permuted to match the array
    /// and matched rows are reported in original indices.
    #[arg(long)]
    perm: Option<PathBuf>,
    #[arg(long)]
    calib: Option<PathBuf>,
    #[arg(long, value_parser = parse_corner)]
    corner: Option<Corner>,
    /// Omit per-query matched rows from the report.
    #[arg(long)]
    no_matches: bool,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: Option<ExperimentKind>,
    /// JSON experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long)]
    calib: Option<PathBuf>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long, value_parser = parse_tile)]
    tile: Option<TileConfig>,
    /// Comma-separated lambda values.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    #[arg(long)]
    mu: Option<f64>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seed: Option<Vec<u64>>,
    #[arg(long)]
    queries: Option<usize>,
    /// Comma-separated strategies.
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
    strategy: Option<Vec<Strategy>>,
    /// Comma-separated corners.
    #[arg(long, value_delimiter = ',', value_parser = parse_corner)]
    corner: Option<Vec<Corner>>,
    #[arg(long)]
    levels: Option<u32>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    corpus_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Experiment CSV in the shared schema.
    #[arg(long)]
    csv: PathBuf,
}

fn parse_tile(s: &str) -> Result<TileConfig, String> {
    s.parse().map_err(|e: monosparse::Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: monosparse::Error| e.to_string())
}

fn parse_corner(s: &str) -> Result<Corner, String> {
    s.parse().map_err(|e: monosparse::Error| e.to_string())
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    s.parse().map_err(|e: monosparse::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(commands::EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(commands::EXIT_INVALID);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(commands::EXIT_INVALID);
        }
    }
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Compile(a) => commands::compile(a),
        Command::Reorder(a) => commands::reorder(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
