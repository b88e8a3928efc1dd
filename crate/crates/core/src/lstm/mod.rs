//! Stacked LSTM section labeler.
//!
//! Each chord of a track is embedded, the vector sequence runs through a
//! unidirectional LSTM stack, and every timestep is classified into one of
//! the section labels. Consecutive equal predictions become segments.

mod network;
mod segmenter;

use std::io;

use thiserror::Error;

pub use network::{
    argmax, forward, gradient_check, lstm_cell, sequence_loss, softmax, LayerView, LstmParams,
    LstmShape,
};
#[doc(hidden)]
pub use network::{gradient_check_with, sequence_gradient, Backward};
pub use segmenter::{
    batch_loss_and_gradient, embed_track, labeled_sequences, labels_to_segments, predict_sections,
    train_segmenter, EpochLog, LabelMap, LabeledSequence, PaddedBatch, SegmenterConfig,
    SegmenterModel, TrainedSegmenter, SEGMENTER_FORMAT,
};

#[derive(Debug, Error)]
pub enum SegmenterError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("label index {label} out of range for {n_labels} labels")]
    LabelOutOfRange { label: usize, n_labels: usize },
    #[error("empty input sequence")]
    EmptyInput,
    #[error("no labeled training tracks")]
    EmptyDataset,
    #[error("unknown section label {0:?}")]
    UnknownLabel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("loss became non-finite ({loss}) in epoch {epoch}")]
    NonFiniteLoss { epoch: usize, loss: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed segmenter artifact: {0}")]
    MalformedArtifact(String),
}
