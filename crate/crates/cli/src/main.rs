mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "tedkit",
    version,
    about = "Train classifiers that predict a decision and its explanation"
)]
struct Cli {
    /// TOML file with default options; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labeled dataset CSV (and codec sidecar when explained).
    Gen(GenArgs),
    /// Train a baseline or explanation-augmented model.
    Train(TrainArgs),
    /// Score a trained model on a dataset.
    Eval(EvalArgs),
    /// Predict the label and explanation for one feature row.
    Predict(PredictArgs),
    /// Run the full baseline vs. explanation-augmented accuracy table.
    #[command(name = "reproduce-table1")]
    ReproduceTable1(ReproduceArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Tictactoe,
    Loan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LearnerKind {
    Mlp,
    Forest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Baseline,
    Ted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SplitPart {
    Train,
    Test,
    All,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(value_enum)]
    target: Target,
    /// Attach explanations (tic-tac-toe; loan data always carries them).
    #[arg(long)]
    with_explanations: bool,
    /// Number of loan records.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "CSV")]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long, value_name = "CSV")]
    data: PathBuf,
    #[arg(long, value_enum)]
    learner: Option<LearnerKind>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Score labels derived from predicted explanations (loan default).
    #[arg(long)]
    derive_y_from_e: bool,
    /// Allow baseline training on a CSV that has an explanation column.
    #[arg(long)]
    drop_explanations: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Fraction of the data used for training; the rest is held out.
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Train on every instance instead of a split.
    #[arg(long, conflicts_with = "train_fraction")]
    full: bool,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    hidden_units: Option<usize>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long, value_name = "MODEL")]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long, value_name = "MODEL")]
    model: PathBuf,
    #[arg(long, value_name = "CSV")]
    data: PathBuf,
    /// Which part of the model's training split to score.
    #[arg(long, value_enum)]
    split: Option<SplitPart>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long, value_name = "MODEL")]
    model: PathBuf,
    /// Comma-separated feature values.
    #[arg(long, allow_hyphen_values = true)]
    row: String,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    /// Loan seeds, comma-separated.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Tic-tac-toe split and network seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Loan records to generate.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Include wall-clock timings (makes reports differ between runs).
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome =
        config::FileConfig::load(cli.config.as_deref()).and_then(|file| match cli.command {
            Command::Gen(args) => commands::gen(&file, args),
            Command::Train(args) => commands::train(&file, args),
            Command::Eval(args) => commands::eval(&file, args),
            Command::Predict(args) => commands::predict(&file, args),
            Command::ReproduceTable1(args) => commands::reproduce_table1(&file, args),
        });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
