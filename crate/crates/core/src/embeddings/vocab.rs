use std::collections::HashMap;

use crate::corpus::AnnotatedTrack;

use super::EmbeddingError;

/// Chord-label vocabulary. Indices are dense, ordered by descending
/// count with ties broken lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    total: u64,
}

impl Vocabulary {
    /// Builds a vocabulary from `(token, count)` pairs, dropping zero
    /// counts and re-sorting into canonical order.
    pub fn from_counts(counts: impl IntoIterator<Item = (String, u64)>) -> Self {
        let mut entries: Vec<(String, u64)> = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let index = entries.iter().enumerate().map(|(i, (t, _))| (t.clone(), i)).collect();
        let total = entries.iter().map(|(_, c)| c).sum();
        let (tokens, counts) = entries.into_iter().unzip();
        Vocabulary { tokens, counts, index, total }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    /// Sum of retained counts.
    pub fn total_count(&self) -> u64 {
        self.total
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.tokens.iter().map(String::as_str).zip(self.counts.iter().copied())
    }
}

/// Counts every chord occurrence and keeps labels seen at least
/// `min_count` times.
pub fn build_vocab(tracks: &[AnnotatedTrack], min_count: u64) -> Result<Vocabulary, EmbeddingError> {
    if tracks.iter().all(|t| t.chords.is_empty()) {
        return Err(EmbeddingError::EmptyCorpus);
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for chord in tracks.iter().flat_map(|t| &t.chords) {
        *counts.entry(chord.as_str()).or_insert(0) += 1;
    }
    let vocab = Vocabulary::from_counts(
        counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count.max(1))
            .map(|(t, c)| (t.to_owned(), c)),
    );
    if vocab.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }
    Ok(vocab)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn track(chords: &[&str]) -> AnnotatedTrack {
        AnnotatedTrack {
            id: "t".into(),
            chords: chords.iter().map(|c| c.to_string()).collect(),
            sections: vec![],
        }
    }

    #[test]
    fn counts_and_orders() {
        let v = build_vocab(&[track(&["C:maj", "C:maj", "G:maj"])], 1).unwrap();
        assert_eq!(v.iter().collect::<Vec<_>>(), [("C:maj", 2), ("G:maj", 1)]);
        assert_eq!(v.index_of("C:maj"), Some(0));
        assert_eq!(v.total_count(), 3);

        let v = build_vocab(&[track(&["C:maj", "C:maj", "G:maj"])], 2).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.index_of("G:maj"), None);
    }

    #[test]
    fn ties_break_lexicographically() {
        let a = build_vocab(&[track(&["E:min", "A:min", "D:min", "A:min", "E:min"])], 1).unwrap();
        assert_eq!(a.iter().map(|(t, _)| t).collect::<Vec<_>>(), ["A:min", "E:min", "D:min"]);
        let b = build_vocab(&[track(&["D:min", "E:min", "A:min", "E:min", "A:min"])], 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_corpus() {
        assert!(matches!(build_vocab(&[], 1), Err(EmbeddingError::EmptyCorpus)));
        assert!(matches!(build_vocab(&[track(&[])], 1), Err(EmbeddingError::EmptyCorpus)));
        assert!(matches!(build_vocab(&[track(&["C:maj"])], 5), Err(EmbeddingError::EmptyCorpus)));
    }
}
