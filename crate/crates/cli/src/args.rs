use std::path::PathBuf;

use binsel_core::generate::{ItemDistribution, Preset};
use binsel_core::HeuristicKind;
use binsel_models::{CellKind, TabularKind};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "binsel", version, about = "Algorithm selection workbench for online bin packing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create datasets.
    #[command(subcommand)]
    Generate(GenerateCommand),
    /// Label plain-text instances, or relabel a dataset over other candidates.
    Label(LabelArgs),
    /// Write the feature table of a dataset as CSV.
    Features(FeaturesArgs),
    /// Fit a selector with k-fold validation and save a snapshot.
    #[command(subcommand)]
    Train(TrainCommand),
    /// Score a selector on a labelled dataset.
    Evaluate(EvaluateArgs),
    /// Generate, train and evaluate over a list of structure thresholds.
    Sweep(SweepArgs),
    /// Standalone statistical tests.
    #[command(subcommand)]
    Stats(StatsCommand),
}

/// Instance family: a preset, optionally with individual fields overridden.
#[derive(Debug, Clone, Args)]
pub struct SpecArgs {
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Items per instance.
    #[arg(long)]
    pub items: Option<usize>,
    #[arg(long)]
    pub lower: Option<u32>,
    #[arg(long)]
    pub upper: Option<u32>,
    #[arg(long)]
    pub dist: Option<ItemDistribution>,
    #[arg(long)]
    pub capacity: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum GenerateCommand {
    /// Independent random instances labelled over all four heuristics.
    Random {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        /// Falkenauer exponent.
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Instances whose BF/FF fitness gap is at least tau.
    Structured {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        count_bf: usize,
        #[arg(long)]
        count_ff: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        /// Abort when a class still being filled qualifies on fewer trials than this.
        #[arg(long)]
        min_rate: Option<f64>,
        /// Trials before the rate floor applies.
        #[arg(long)]
        min_trials: Option<usize>,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Instances evolved to favour one heuristic.
    Evolve {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        target: HeuristicKind,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        population: Option<usize>,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        mutation_rate: Option<f64>,
        #[arg(long)]
        swap_probability: Option<f64>,
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Concatenate datasets, optionally drawing a fixed number per class from each.
    Merge {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        per_class: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    /// Plain-text instances (one per line, optional `id:` prefix) or a dataset file.
    #[arg(long)]
    pub input: PathBuf,
    /// Capacity for plain-text input.
    #[arg(long, default_value_t = 150)]
    pub capacity: u32,
    /// Comma-separated candidate heuristics.
    #[arg(long, value_delimiter = ',', default_value = "BF,FF,NF,WF")]
    pub candidates: Vec<HeuristicKind>,
    #[arg(long, default_value_t = 2.0)]
    pub k: f64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StdChoice {
    Population,
    Sample,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = StdChoice::Population)]
    pub std: StdChoice,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Options shared by both selector families.
#[derive(Debug, Clone, Args)]
pub struct CommonTrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Validation folds before the final fit; 0 skips validation.
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Hold out this fraction (stratified) and train on the rest.
    #[arg(long, requires = "test_out")]
    pub test_fraction: Option<f64>,
    /// Where the held-out split is written.
    #[arg(long, requires = "test_fraction")]
    pub test_out: Option<PathBuf>,
    /// Snapshot path; history and fold tables are written next to it.
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum TrainCommand {
    Rnn {
        #[command(flatten)]
        common: CommonTrainArgs,
        #[arg(long, default_value = "gru")]
        cell: CellKind,
        /// Defaults to 300 for sequences up to 120 items, 700 otherwise.
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long, default_value_t = 0.001)]
        lr: f64,
        #[arg(long, value_delimiter = ',', default_value = "32,32")]
        hidden: Vec<usize>,
    },
    Tabular {
        #[command(flatten)]
        common: CommonTrainArgs,
        #[arg(long)]
        kind: TabularKind,
        /// Override the MLP epoch count.
        #[arg(long)]
        epochs: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, conflicts_with = "predictions", required_unless_present = "predictions")]
    pub model: Option<PathBuf>,
    /// CSV with `id,prediction` columns instead of a model.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Selector name used in the summary.
    #[arg(long)]
    pub name: Option<String>,
    /// Report directory.
    #[arg(long, default_value = "report")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub taus: Vec<f64>,
    #[arg(long)]
    pub count_bf: usize,
    #[arg(long)]
    pub count_ff: usize,
    /// Exact BF training count; the rest of the class is test data.
    #[arg(long, requires = "train_ff")]
    pub train_bf: Option<usize>,
    #[arg(long, requires = "train_bf")]
    pub train_ff: Option<usize>,
    /// Comma-separated: gru, lstm, knn, gnb, tree, forest, mlp.
    #[arg(long, value_delimiter = ',', default_value = "gru")]
    pub selectors: Vec<String>,
    /// Recurrent epochs (default by sequence length).
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub min_rate: Option<f64>,
    #[arg(long)]
    pub min_trials: Option<usize>,
    /// Output directory for `sweep.csv`.
    #[arg(long, default_value = "sweep")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Paired signed-rank test of x against y.
    Wilcoxon {
        /// CSV with a header and two numeric columns.
        #[arg(long, conflicts_with_all = ["x", "y"])]
        input: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', requires = "y")]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',', requires = "x")]
        y: Vec<f64>,
    },
    /// Bonferroni-adjust a family of p-values.
    Bonferroni {
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
    },
}
