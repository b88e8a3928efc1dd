use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Chord embeddings and music structure segmentation.
///
/// Every flag can also be given in a `--config` file as a `key = value`
/// line (`hidden_size = 100` or `hidden-size = 100`); flags on the command
/// line win. Set CHORDSEG_THREADS to cap the number of worker threads.
#[derive(Debug, Parser)]
#[command(name = "chordseg", version)]
pub struct Cli {
    /// Flat `key = value` file supplying defaults for the subcommand flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic corpus from section templates.
    SynthCorpus(SynthArgs),
    /// Shuffle a corpus into train, validation and test files.
    SplitCorpus(SplitArgs),
    /// Train a skipgram chord embedding.
    TrainEmbedding(EmbeddingArgs),
    /// Train the LSTM section labeler on embedded chords.
    TrainSegmenter(SegmenterArgs),
    /// Segment every track of a corpus.
    Segment(SegmentArgs),
    /// Segment with a non-learned method (form-raw, form-simple, random, fixed-pop).
    Baseline(SegmentArgs),
    /// Score estimated segmentations against a labeled corpus.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub n_tracks: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub min_sections: usize,
    #[arg(long, default_value_t = 8)]
    pub max_sections: usize,
    /// Transpose each track by a random interval.
    #[arg(long)]
    pub transpose: bool,
    /// Output corpus JSONL.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SplitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Train, validation and test fractions.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.75, 0.17, 0.08])]
    pub ratios: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving train.jsonl, valid.jsonl and test.jsonl.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Word2vec,
    Fasttext,
    Pitchclass2vec,
}

#[derive(Debug, Args, Serialize)]
pub struct EmbeddingArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum)]
    pub kind: EmbeddingKind,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
    /// Embedding width; 10 for pitchclass2vec and 300 otherwise.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub window: usize,
    #[arg(long, default_value_t = 20)]
    pub negatives: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub subsample_t: f64,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 512)]
    pub batch_progressions: usize,
    #[arg(long, default_value_t = 0.025)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
    /// Training threads; values above 1 give up run-to-run reproducibility.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value_t = 2)]
    pub ngram_min: usize,
    #[arg(long, default_value_t = 5)]
    pub ngram_max: usize,
    #[arg(long, default_value_t = 100_000)]
    pub ngram_buckets: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct SegmenterArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Validation corpus for early stopping.
    #[arg(long)]
    pub valid: Option<PathBuf>,
    #[arg(long)]
    pub embedding: PathBuf,
    /// Second embedding, concatenated after the first.
    #[arg(long)]
    pub embedding2: Option<PathBuf>,
    /// Output manifest; parameters go to the same stem with `.params.bin`.
    #[arg(long)]
    pub out: PathBuf,
    /// Tuned size to start from (word2vec, fasttext, pitchclass2vec,
    /// pitchclass2vec+word2vec, pitchclass2vec+fasttext); inferred from the
    /// embedding kinds when omitted.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub hidden_size: Option<usize>,
    #[arg(long)]
    pub num_layers: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long, default_value_t = 128)]
    pub batch_tracks: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 100)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Lstm,
    FormRaw,
    FormSimple,
    Random,
    FixedPop,
}

#[derive(Debug, Args, Serialize)]
pub struct SegmentArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    /// Output segmentation JSONL.
    #[arg(long)]
    pub out: PathBuf,
    /// Segmenter manifest (lstm only).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Embedding files overriding those recorded in the model (lstm only).
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    #[arg(long)]
    pub embedding2: Option<PathBuf>,
    /// Shortest repeated pattern for the FORM methods.
    #[arg(long, default_value_t = 2)]
    pub min_pattern_len: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Labeled reference corpus.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Estimated segmentation JSONL.
    #[arg(long)]
    pub est: PathBuf,
    /// JSON report path; a CSV with the same stem is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
