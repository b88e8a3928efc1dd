//! Chord embeddings trained with skipgram and negative sampling.
//!
//! The trainer is generic over how a chord label is broken into input
//! components ([`DecompositionKind`]): the whole label (word2vec), hashed
//! character n-grams (fasttext), or the `(root, pitch class)` pairs of the
//! chord (pitchclass2vec). A label's vector is the sum of its component
//! vectors. Several models can be concatenated with [`hybrid_embed`].

mod decompose;
mod model;
mod train;
mod vocab;

use std::io;

use thiserror::Error;

use crate::harte::HarteError;

pub use decompose::{
    char_ngrams, decompose, fnv1a, DecompositionKind, DEFAULT_NGRAM_BUCKETS, DEFAULT_NGRAM_MAX,
    DEFAULT_NGRAM_MIN,
};
pub use model::{cosine, dot, hybrid_embed, ChordEmbedder, EmbeddingModel, HybridEmbedding};
pub use train::{
    discard_probability, generate_examples, negative_distribution, skipgram_gradient,
    skipgram_loss, train_embedding, EpochStats, NegativeSampler, SkipgramExample,
    SkipgramGradient, TrainConfig, TrainedEmbedding,
};
pub use vocab::{build_vocab, Vocabulary};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("corpus has no chords to train on")]
    EmptyCorpus,
    #[error("cannot decompose {token:?}: {source}")]
    ParseFailure {
        token: String,
        #[source]
        source: HarteError,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("loss became non-finite ({loss}) in epoch {epoch}")]
    NonFiniteLoss { epoch: usize, loss: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("unsupported model file header: {0:?}")]
    FormatVersionMismatch(String),
    #[error("model file line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
}
