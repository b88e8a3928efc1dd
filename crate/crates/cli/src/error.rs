use std::fmt;
use std::io;

use chordseg::corpus::CorpusError;
use chordseg::embeddings::EmbeddingError;
use chordseg::form::FormError;
use chordseg::lstm::SegmenterError;
use chordseg::metrics::MetricsError;
use chordseg::segmentation::SegmentationError;

/// Failure classes, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        CliError::Data(msg.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::data(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::data(e)
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::data(e)
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        match e {
            EmbeddingError::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
            EmbeddingError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::data(e),
        }
    }
}

impl From<SegmenterError> for CliError {
    fn from(e: SegmenterError) -> Self {
        match e {
            SegmenterError::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
            SegmenterError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::data(e),
        }
    }
}

impl From<FormError> for CliError {
    fn from(e: FormError) -> Self {
        CliError::data(e)
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::data(e)
    }
}

impl From<SegmentationError> for CliError {
    fn from(e: SegmentationError) -> Self {
        CliError::data(e)
    }
}
