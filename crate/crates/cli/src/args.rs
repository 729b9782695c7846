use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "keyphrase",
    version,
    about = "Keyphrase extraction with BiLSTM-CRF taggers and self-distillation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on labeled documents only.
    Train(RunArgs),
    /// Train a teacher, then self-distill with unlabeled documents.
    Jlsd(RunArgs),
    /// Train on a source corpus, then fine-tune on the target corpus.
    Pretrain(RunArgs),
    /// Train on the target corpus mixed with source documents.
    Joint(RunArgs),
    /// Score a checkpoint on labeled documents.
    Eval(RunArgs),
    /// Print the keyphrases a checkpoint extracts from each document.
    Extract(RunArgs),
    /// Print confidence-ranked keyphrases for each document.
    Rank(RunArgs),
    /// Write a synthetic labeled corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Labeled training documents (JSONL).
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Labeled development documents used for model selection.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Documents to evaluate, extract from or rank.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Unlabeled documents for self-distillation.
    #[arg(long)]
    pub unlabeled: Option<PathBuf>,
    /// Labeled source-domain documents for pretrain and joint.
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Checkpoint to read, or to write when training (default: <out>/model.ckpt).
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    /// Output directory when training; output file otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON file with hyperparameters; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cutoffs for F1@k.
    #[arg(long, value_delimiter = ',', default_value = "5,10,15")]
    pub k: Vec<usize>,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct HyperArgs {
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Pseudo-labeled documents per labeled document in each batch.
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Learning rate of the embedding layer.
    #[arg(long)]
    pub lr_lower: Option<f64>,
    /// Learning rate of the BiLSTM, projection and CRF.
    #[arg(long)]
    pub lr_upper: Option<f64>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// Evaluations without improvement before stopping (0 disables).
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub min_count: Option<usize>,
    #[arg(long)]
    pub source_iterations: Option<usize>,
    #[arg(long)]
    pub source_per_epoch: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub docs: usize,
    #[arg(long, default_value_t = 200)]
    pub vocab_size: usize,
    /// Fraction of word types that start a planted keyphrase.
    #[arg(long, default_value_t = 0.1)]
    pub keyword_fraction: f64,
    /// Split name; splits of the same seed share the planted phrases.
    #[arg(long, default_value = "syn")]
    pub split: String,
    /// Write documents without labels or keyphrases.
    #[arg(long)]
    pub strip_labels: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
