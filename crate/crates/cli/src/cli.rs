use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rankforge::dataset_features::{OverlapFormula, TtrDistance};
use rankforge::ranking::{RelevanceConvention, Representation, SyntacticSource};

use crate::settings::ImputeMethod;

#[derive(Debug, Parser)]
#[command(name = "rankforge", version, about = "Rank transfer languages for a target language")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SourceArg {
    Uriel,
    Grambank,
}

impl From<SourceArg> for SyntacticSource {
    fn from(a: SourceArg) -> Self {
        match a {
            SourceArg::Uriel => SyntacticSource::Uriel,
            SourceArg::Grambank => SyntacticSource::Grambank,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RepresentationArg {
    Distance,
    Full,
}

impl From<RepresentationArg> for Representation {
    fn from(a: RepresentationArg) -> Self {
        match a {
            RepresentationArg::Distance => Representation::Distance,
            RepresentationArg::Full => Representation::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

impl OnOff {
    pub fn is_on(self) -> bool {
        matches!(self, OnOff::On)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OverlapArg {
    SharedOverSum,
    Jaccard,
}

impl From<OverlapArg> for OverlapFormula {
    fn from(a: OverlapArg) -> Self {
        match a {
            OverlapArg::SharedOverSum => OverlapFormula::SharedOverSum,
            OverlapArg::Jaccard => OverlapFormula::Jaccard,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TtrArg {
    Absolute,
    SquaredRatio,
}

impl From<TtrArg> for TtrDistance {
    fn from(a: TtrArg) -> Self {
        match a {
            TtrArg::Absolute => TtrDistance::Absolute,
            TtrArg::SquaredRatio => TtrDistance::SquaredRatio,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RelevanceArg {
    BestIsP,
    #[value(name = "best-is-p-minus-1")]
    BestIsPMinus1,
}

impl From<RelevanceArg> for RelevanceConvention {
    fn from(a: RelevanceArg) -> Self {
        match a {
            RelevanceArg::BestIsP => RelevanceConvention::BestIsP,
            RelevanceArg::BestIsPMinus1 => RelevanceConvention::BestIsPMinus1,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ImputeArg {
    Missforest,
    Knn,
}

impl From<ImputeArg> for ImputeMethod {
    fn from(a: ImputeArg) -> Self {
        match a {
            ImputeArg::Missforest => ImputeMethod::Missforest,
            ImputeArg::Knn => ImputeMethod::Knn,
        }
    }
}

/// Options shared by every subcommand. Unset options fall back to the
/// config file, then to built-in defaults.
#[derive(Debug, Args)]
pub struct Common {
    /// TOML config file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice [default: 42]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Syntax block [default: uriel]
    #[arg(long, global = true, value_enum)]
    pub syntactic_source: Option<SourceArg>,
    /// Typology as per-block distances or full AND vectors [default: distance]
    #[arg(long, global = true, value_enum)]
    pub representation: Option<RepresentationArg>,
    /// Word overlap and type-token ratio features [default: on]
    #[arg(long, global = true, value_enum)]
    pub dataset_features: Option<OnOff>,
    /// NDCG cutoff and number of relevance levels [default: 5]
    #[arg(long, global = true)]
    pub p: Option<usize>,
    /// Relevance of the best candidate [default: best-is-p]
    #[arg(long, global = true, value_enum)]
    pub relevance: Option<RelevanceArg>,
    /// Target corpus cap in sentences [default: 500]
    #[arg(long, global = true)]
    pub target_cap: Option<usize>,
    /// Source corpus cap in sentences [default: 2000]
    #[arg(long, global = true)]
    pub source_cap: Option<usize>,
    /// Rows reported by rank and importance [default: 5]
    #[arg(long, global = true)]
    pub top_k: Option<usize>,
    /// Lowercase tokens before building vocabularies
    #[arg(long, global = true, num_args = 0..=1, require_equals = true, default_missing_value = "true")]
    pub casefold: Option<bool>,
    /// [default: shared-over-sum]
    #[arg(long, global = true, value_enum)]
    pub overlap: Option<OverlapArg>,
    /// [default: absolute]
    #[arg(long, global = true, value_enum)]
    pub ttr_distance: Option<TtrArg>,
    /// Compute dataset statistics on whole corpora instead of the capped ones
    #[arg(long, global = true, num_args = 0..=1, require_equals = true, default_missing_value = "true")]
    pub full_corpus_stats: Option<bool>,
    /// Keep source == target pairs
    #[arg(long, global = true, num_args = 0..=1, require_equals = true, default_missing_value = "true")]
    pub include_self_pairs: Option<bool>,
    /// Report sample rather than population standard deviation
    #[arg(long, global = true, num_args = 0..=1, require_equals = true, default_missing_value = "true")]
    pub sample_std: Option<bool>,

    /// Boosting rounds [default: 100]
    #[arg(long, global = true)]
    pub rounds: Option<usize>,
    /// Shrinkage per round [default: 0.1]
    #[arg(long, global = true)]
    pub learning_rate: Option<f64>,
    /// LambdaRank logistic scale [default: 1]
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Leaves per tree [default: 31]
    #[arg(long, global = true)]
    pub max_leaves: Option<usize>,
    /// [default: 1]
    #[arg(long, global = true)]
    pub min_samples_leaf: Option<usize>,
    /// L2 penalty on leaf values [default: 1]
    #[arg(long = "lambda", global = true)]
    pub lambda_reg: Option<f64>,

    /// Imputation method [default: missforest]
    #[arg(long = "method", global = true, value_enum)]
    pub impute_method: Option<ImputeArg>,
    /// Neighbours for kNN imputation [default: 5]
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// MissForest iteration limit [default: 10]
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    /// Trees per MissForest forest [default: 100]
    #[arg(long, global = true)]
    pub trees: Option<usize>,
    /// Crop sparse features and languages before imputing
    #[arg(long, global = true, num_args = 0..=1, require_equals = true, default_missing_value = "true")]
    pub crop: Option<bool>,
    /// Largest missing fraction a feature may keep [default: 0.25]
    #[arg(long, global = true)]
    pub feature_threshold: Option<f64>,
    /// Largest missing fraction a language may keep [default: 0.25]
    #[arg(long, global = true)]
    pub language_threshold: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the pair-feature TSV for every target x source pair
    ExtractFeatures(ExtractArgs),
    /// Crop and impute a typology matrix
    Impute(ImputeArgs),
    /// Turn a performance CSV into relevance-labelled gold rankings
    MakeGold(MakeGoldArgs),
    /// Train a ranker on pair features and gold rankings
    Train(TrainArgs),
    /// Rank candidate sources for one target with a trained model
    Rank(RankArgs),
    /// Leave-one-target-out evaluation over feature tables and performance tables
    EvaluateLoo(LooArgs),
    /// Average gain per feature over one or more models
    Importance(ImportanceArgs),
    /// Compare the pair rankings induced by two performance tables
    AnalyzeDivergence(DivergenceArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Target-language corpus as LANG=PATH (CoNLL-U); repeatable
    #[arg(long = "target-corpus", value_name = "LANG=PATH")]
    pub target_corpora: Vec<String>,
    /// Source-language corpus as LANG=PATH (CoNLL-U); repeatable
    #[arg(long = "source-corpus", value_name = "LANG=PATH")]
    pub source_corpora: Vec<String>,
    /// Comma-separated target codes [default: codes of --target-corpus]
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<String>,
    /// Comma-separated source codes [default: codes of --source-corpus]
    #[arg(long, value_delimiter = ',')]
    pub sources: Vec<String>,
    /// CSV language_code,path with `>`-separated lineage
    #[arg(long)]
    pub lineages: PathBuf,
    /// CSV language_code,lat,lon
    #[arg(long)]
    pub geography: PathBuf,
    #[arg(long)]
    pub uriel_syntax: Option<PathBuf>,
    #[arg(long)]
    pub grambank_syntax: Option<PathBuf>,
    #[arg(long)]
    pub phonology: PathBuf,
    #[arg(long)]
    pub inventory: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ImputeArgs {
    /// Language x feature matrix, CSV or TSV, `?` or empty for missing
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Imputation report [default: <out>.report.json]
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MakeGoldArgs {
    /// CSV source,target,score
    #[arg(long)]
    pub performance: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub performance: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub target: String,
    /// Print all candidates instead of the top k
    #[arg(long)]
    pub all: bool,
    /// Print scores next to source codes
    #[arg(long)]
    pub scores: bool,
}

#[derive(Debug, Args)]
pub struct LooArgs {
    /// Pair-feature TSV as [LABEL=]PATH; repeatable
    #[arg(long, required = true, value_name = "[LABEL=]PATH")]
    pub features: Vec<String>,
    /// Performance CSV as [NAME=]PATH; repeatable, one per architecture
    #[arg(long, required = true, value_name = "[NAME=]PATH")]
    pub performance: Vec<String>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also write every fold model here
    #[arg(long)]
    pub save_models: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImportanceArgs {
    /// Model JSON; repeatable
    #[arg(long = "model", required = true)]
    pub models: Vec<PathBuf>,
    /// Also write the table here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DivergenceArgs {
    #[arg(long)]
    pub perf_a: PathBuf,
    #[arg(long)]
    pub perf_b: PathBuf,
    #[arg(long, default_value = "A")]
    pub label_a: String,
    #[arg(long, default_value = "B")]
    pub label_b: String,
    /// CSV language_code,family for the family-pair tally
    #[arg(long)]
    pub families: Option<PathBuf>,
    /// Rows per side in the side-by-side table
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}
