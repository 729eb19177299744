use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "trialsent", version, about = "Clinical-trial abstract sentiment pipeline")]
pub struct Cli {
    /// Run configuration file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory holding every stage artifact [default: run]
    #[arg(long, global = true)]
    pub run_dir: Option<PathBuf>,
    /// Seed for every randomised stage; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Harvest clinical-trial abstracts for one medical field.
    Fetch(FetchArgs),
    /// Extract and tokenize conclusions.
    Preprocess(PreprocessArgs),
    #[command(subcommand)]
    Labels(LabelsCommand),
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Semi-supervised adversarial fine-tuning.
    Train(TrainArgs),
    /// Predict sentiment for tokenized rows.
    Classify(ClassifyArgs),
    /// Score predictions or a rater against gold labels.
    Evaluate(EvaluateArgs),
    /// Sentiment fractions grouped by year or field.
    Trend(TrendArgs),
    /// Start the annotation service.
    Serve(ServeArgs),
    /// Run several stages in order with default artifact paths.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Subcommand)]
pub enum LabelsCommand {
    /// Majority-vote the gold panel's annotations.
    Aggregate(AggregateArgs),
}

#[derive(Debug, Subcommand)]
pub enum CorpusCommand {
    /// Resample labeled abstracts to the median class size.
    Balance(BalanceArgs),
    /// Hold out a validation set and assemble the training corpus.
    Split(SplitArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct FetchArgs {
    #[arg(long)]
    pub field: Option<String>,
    #[arg(long)]
    pub max: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub from_year: Option<i32>,
    #[arg(long)]
    pub to_year: Option<i32>,
    /// Environment variable holding the API key.
    #[arg(long)]
    pub api_key_env: Option<String>,
    /// Replay recorded responses instead of using the network.
    #[arg(long, conflicts_with = "record")]
    pub fixtures: Option<PathBuf>,
    /// Record every live response into this directory.
    #[arg(long)]
    pub record: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PreprocessArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct AggregateArgs {
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Comma-separated gold panel.
    #[arg(long, value_delimiter = ',')]
    pub gold_raters: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BalanceArgs {
    #[arg(long)]
    pub tokens: Option<PathBuf>,
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SplitArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub unlabeled: Option<PathBuf>,
    #[arg(long)]
    pub holdout: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub validation: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvaluateArgs {
    /// Predictions file; the model predicts the validation set when absent.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Held-out rater's annotations.
    #[arg(long)]
    pub rater: Option<PathBuf>,
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupByArg {
    Year,
    Field,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrendArgs {
    #[arg(long)]
    pub pred: Option<PathBuf>,
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub by: Option<GroupByArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[arg(long)]
    pub addr: Option<String>,
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Rating interface bundle served at `/`.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Stage {
    Fetch,
    Preprocess,
    Aggregate,
    Balance,
    Split,
    Train,
    Classify,
    Evaluate,
    Trend,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Fetch,
        Stage::Preprocess,
        Stage::Aggregate,
        Stage::Balance,
        Stage::Split,
        Stage::Train,
        Stage::Classify,
        Stage::Evaluate,
        Stage::Trend,
    ];

    /// The command line that runs this stage.
    pub fn command(self) -> &'static str {
        match self {
            Stage::Fetch => "fetch",
            Stage::Preprocess => "preprocess",
            Stage::Aggregate => "labels aggregate",
            Stage::Balance => "corpus balance",
            Stage::Split => "corpus split",
            Stage::Train => "train",
            Stage::Classify => "classify",
            Stage::Evaluate => "evaluate",
            Stage::Trend => "trend",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            Stage::Aggregate => "labels-aggregate",
            Stage::Balance => "corpus-balance",
            Stage::Split => "corpus-split",
            other => other.command(),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// Stages to run, in the order given [default: all]
    #[arg(long, value_enum, value_delimiter = ',')]
    pub stages: Vec<Stage>,
}
