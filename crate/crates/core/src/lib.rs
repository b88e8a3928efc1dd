//! Symbolic music structure segmentation from chord sequences.
//!
//! * [`harte`]: chord label parsing into pitch-class structure.
//! * [`corpus`]: annotated track I/O, section label normalization, dataset
//!   splits and a synthetic corpus generator.
//! * [`embeddings`]: skipgram chord embeddings over whole labels, character
//!   n-grams or `(root, pitch class)` components.
//! * [`form`]: the repeated-pattern baseline plus random and fixed-template
//!   segmenters.
//! * [`lstm`]: the stacked LSTM section labeler.
//! * [`metrics`]: pairwise and conditional-entropy segmentation scores.

pub mod corpus;
pub mod embeddings;
pub mod form;
pub mod harte;
pub mod lstm;
pub mod metrics;
pub mod segmentation;

pub use corpus::{AnnotatedTrack, CorpusError};
pub use embeddings::{ChordEmbedder, DecompositionKind, EmbeddingError, EmbeddingModel, TrainConfig};
pub use form::FormError;
pub use harte::{parse_chord, Chord, HarteError, PitchClass, PitchClassSet};
pub use lstm::{LstmParams, SegmenterConfig, SegmenterError, SegmenterModel};
pub use metrics::{MetricsError, SegmentScores};
pub use segmentation::{Segment, Segmentation, SegmentationError};
