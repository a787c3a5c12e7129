//! `genconv` command-line tool.

mod commands;
mod run_config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use genconv::Error;

#[derive(Debug, Parser)]
#[command(name = "genconv", version, about = "Point-cloud classification with generalized convolution layers")]
struct Cli {
    /// Worker threads for evaluation and dataset loading.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the circles-vs-squares dataset as PCLD files.
    GenToy(GenToyArgs),
    /// Print a preset run configuration as TOML.
    Config(ConfigArgs),
    /// Train a model and write a checkpoint plus a per-epoch log.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a test set.
    Eval(EvalArgs),
    /// Render the learned filters of one layer as images.
    Visualize(VisualizeArgs),
    /// Time neighbour search and a layer forward pass against cloud size.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenToyArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub n_train: usize,
    #[arg(long, default_value_t = 500)]
    pub n_test: usize,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    Toy,
    Modelnet10,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long, value_enum, default_value = "toy")]
    pub preset: Preset,
}

/// Where to read clouds from; overrides the `[data]` section.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// PCLD dataset directory.
    #[arg(long, conflicts_with = "modelnet10")]
    pub data: Option<PathBuf>,
    /// Root of an extracted ModelNet10 tree.
    #[arg(long)]
    pub modelnet10: Option<PathBuf>,
    /// Points sampled per mesh when reading ModelNet10.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Run configuration; the toy preset is used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Neighbours per query for every layer.
    #[arg(long)]
    pub k: Option<usize>,
    /// Continue from `model.gckp` in the output directory.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Run configuration supplying the `[data]` section.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    /// Directory for `confusion.csv`; defaults to the checkpoint's directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ColormapArg {
    Gray,
    Diverging,
}

#[derive(Debug, Args)]
pub struct VisualizeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Layer index; the number of strided layers selects the global head.
    #[arg(long, default_value_t = 0)]
    pub layer: usize,
    /// Render only this output channel.
    #[arg(long)]
    pub channel: Option<usize>,
    #[arg(long, default_value_t = 51)]
    pub resolution: usize,
    /// Half-width of the probed offset window.
    #[arg(long, default_value_t = 0.5)]
    pub extent: f64,
    #[arg(long, value_enum, default_value = "diverging")]
    pub colormap: ColormapArg,
    /// Defaults to `filters/` next to the checkpoint.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [2048usize, 4096, 8192, 16384])]
    pub counts: Vec<usize>,
    #[arg(long, default_value_t = 16)]
    pub k: usize,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "bench")]
    pub out: PathBuf,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } | Error::Parse { .. } | Error::InvalidArgument(_) => 2,
        Error::Data(_) | Error::Io { .. } | Error::Checkpoint(_) | Error::EmptyInput(_) | Error::Shape(_) => 3,
        Error::NonFiniteLoss { .. } => 4,
        _ => 1,
    }
}

fn run(cli: Cli) -> genconv::Result<()> {
    if cli.threads == 0 {
        return Err(Error::InvalidArgument("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    match cli.command {
        Command::GenToy(args) => commands::gen_toy(&args),
        Command::Config(args) => commands::print_config(&args),
        Command::Train(args) => commands::train(&args),
        Command::Eval(args) => commands::eval(&args),
        Command::Visualize(args) => commands::visualize(&args),
        Command::Bench(args) => commands::bench(&args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
