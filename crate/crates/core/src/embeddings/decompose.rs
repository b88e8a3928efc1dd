use std::fmt;
use std::str::FromStr;

use crate::harte::parse_chord;

use super::{EmbeddingError, Vocabulary};

/// How a chord label is broken into input components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecompositionKind {
    /// One component per vocabulary label (word2vec).
    WholeToken,
    /// Hashed character n-grams of `<label>` plus the label itself
    /// (fasttext).
    CharNgram { min_n: usize, max_n: usize, buckets: u64 },
    /// `(root, pitch class)` pairs, ids `root * 12 + pitch` (pitchclass2vec).
    PitchClass,
}

pub const DEFAULT_NGRAM_MIN: usize = 2;
pub const DEFAULT_NGRAM_MAX: usize = 5;
pub const DEFAULT_NGRAM_BUCKETS: u64 = 100_000;

impl DecompositionKind {
    pub fn char_ngram_default() -> Self {
        DecompositionKind::CharNgram {
            min_n: DEFAULT_NGRAM_MIN,
            max_n: DEFAULT_NGRAM_MAX,
            buckets: DEFAULT_NGRAM_BUCKETS,
        }
    }

    pub fn validate(&self) -> Result<(), EmbeddingError> {
        match *self {
            DecompositionKind::CharNgram { min_n, max_n, buckets }
                if min_n == 0 || min_n > max_n || buckets == 0 =>
            {
                Err(EmbeddingError::InvalidConfig(format!(
                    "char n-gram bounds {min_n}..={max_n} with {buckets} buckets"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Default embedding width: 10 for pitch-class components, 300 for
    /// label-based models.
    pub fn default_dim(&self) -> usize {
        match self {
            DecompositionKind::PitchClass => 10,
            _ => 300,
        }
    }
}

impl fmt::Display for DecompositionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecompositionKind::WholeToken => f.write_str("whole_token"),
            DecompositionKind::CharNgram { min_n, max_n, buckets } => {
                write!(f, "char_ngram:{min_n}:{max_n}:{buckets}")
            }
            DecompositionKind::PitchClass => f.write_str("pitchclass"),
        }
    }
}

impl FromStr for DecompositionKind {
    type Err = EmbeddingError;

    /// Accepts the serialized names plus the aliases `word2vec`,
    /// `fasttext` and `pitchclass2vec`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let kind = match s {
            "whole_token" | "word2vec" => DecompositionKind::WholeToken,
            "pitchclass" | "pitchclass2vec" => DecompositionKind::PitchClass,
            "fasttext" | "char_ngram" => DecompositionKind::char_ngram_default(),
            _ => {
                let parts: Vec<&str> = s.split(':').collect();
                match parts.as_slice() {
                    ["char_ngram", min_n, max_n, buckets] => {
                        let bad = |_| EmbeddingError::InvalidConfig(format!("bad kind {s:?}"));
                        DecompositionKind::CharNgram {
                            min_n: min_n.parse().map_err(bad)?,
                            max_n: max_n.parse().map_err(bad)?,
                            buckets: buckets.parse().map_err(bad)?,
                        }
                    }
                    _ => return Err(EmbeddingError::InvalidConfig(format!("unknown kind {s:?}"))),
                }
            }
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// 32-bit FNV-1a over UTF-8 bytes.
pub fn fnv1a(text: &str) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for b in text.bytes() {
        h ^= u32::from(b);
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

/// Character n-grams of `<token>` for every `n` in `min_n..=max_n`.
pub fn char_ngrams(token: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let bracketed: Vec<char> = std::iter::once('<').chain(token.chars()).chain(std::iter::once('>')).collect();
    let mut grams = Vec::new();
    for n in min_n..=max_n {
        if n > bracketed.len() {
            break;
        }
        grams.extend(bracketed.windows(n).map(|w| w.iter().collect::<String>()));
    }
    grams
}

/// Component ids of `token`.
///
/// * whole token: the vocabulary index, or nothing when out of vocabulary;
/// * char n-gram: the vocabulary index when known, then
///   `|V| + fnv1a(gram) % buckets` for each n-gram (duplicates kept);
/// * pitch class: `root * 12 + pitch` for every component pair.
pub fn decompose(
    token: &str,
    kind: &DecompositionKind,
    vocab: &Vocabulary,
) -> Result<Vec<u64>, EmbeddingError> {
    match *kind {
        DecompositionKind::WholeToken => Ok(vocab.index_of(token).map(|i| i as u64).into_iter().collect()),
        DecompositionKind::CharNgram { min_n, max_n, buckets } => {
            let offset = vocab.len() as u64;
            let mut ids: Vec<u64> = vocab.index_of(token).map(|i| i as u64).into_iter().collect();
            ids.extend(
                char_ngrams(token, min_n, max_n)
                    .iter()
                    .map(|g| offset + u64::from(fnv1a(g)) % buckets),
            );
            Ok(ids)
        }
        DecompositionKind::PitchClass => {
            let chord = parse_chord(token).map_err(|source| EmbeddingError::ParseFailure {
                token: token.to_owned(),
                source,
            })?;
            Ok(chord.components().iter().map(|p| u64::from(p.id())).collect())
        }
    }
}
