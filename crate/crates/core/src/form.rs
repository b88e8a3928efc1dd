//! Repetition-based structural segmentation of chord-token sequences.
//!
//! Maximal repeated subsequences are found with a suffix array and its
//! LCP array: every LCP interval is a branching node of the implicit
//! suffix tree (hence right-maximal), and it is a maximal repeat when the
//! tokens preceding its occurrences are not all equal. Segmentation then
//! covers the sequence greedily with the longest patterns first.
//!
//! Two reference heuristics live here as well: uniformly random
//! segment lengths, and a fixed pop-song letter template stretched over
//! the sequence.

use std::collections::HashMap;

use rand::Rng;
use thiserror::Error;

use crate::harte::{parse_chord, simplified_token, HarteError};
use crate::segmentation::{Segment, Segmentation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormError {
    #[error("cannot segment an empty sequence")]
    EmptySequence,
    #[error(transparent)]
    Chord(#[from] HarteError),
}

/// Shortest pattern considered by [`form_segment`].
pub const DEFAULT_MIN_PATTERN_LEN: usize = 2;

/// Letters of the fixed pop-song template.
pub const POP_TEMPLATE: &str = "ABBBBCCBBBBCCDCCE";

/// A subsequence occurring at least twice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepeatedPattern<T> {
    pub tokens: Vec<T>,
    /// Ascending start positions; occurrences may overlap.
    pub occurrences: Vec<usize>,
}

impl<T> RepeatedPattern<T> {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Maps tokens to dense ranks preserving their order.
fn rank_tokens<T: Ord>(seq: &[T]) -> (Vec<usize>, usize) {
    let mut order: Vec<usize> = (0..seq.len()).collect();
    order.sort_by(|&a, &b| seq[a].cmp(&seq[b]));
    let mut ranks = vec![0; seq.len()];
    let mut next = 0;
    for (k, &i) in order.iter().enumerate() {
        if k > 0 && seq[order[k - 1]] != seq[i] {
            next += 1;
        }
        ranks[i] = next;
    }
    let sigma = if seq.is_empty() { 0 } else { next + 1 };
    (ranks, sigma)
}

/// Stable counting sort of `items` by `key`, keys in `[0, buckets)`.
fn counting_sort(items: &[usize], key: impl Fn(usize) -> usize, buckets: usize) -> Vec<usize> {
    let mut count = vec![0usize; buckets + 1];
    for &i in items {
        count[key(i) + 1] += 1;
    }
    for b in 1..=buckets {
        count[b] += count[b - 1];
    }
    let mut out = vec![0; items.len()];
    for &i in items {
        let k = key(i);
        out[count[k]] = i;
        count[k] += 1;
    }
    out
}

/// Suffix array by prefix doubling with radix sorting, `O(n log n)`.
pub fn suffix_array(text: &[usize], sigma: usize) -> Vec<usize> {
    let n = text.len();
    if n == 0 {
        return Vec::new();
    }
    let all: Vec<usize> = (0..n).collect();
    let mut sa = counting_sort(&all, |i| text[i], sigma.max(1));
    let mut rank = text.to_vec();
    let mut classes = sigma;
    let mut tmp = vec![0usize; n];
    let mut k = 1;
    while classes < n {
        // order by second key: suffixes shorter than k come first
        let mut by_second: Vec<usize> = (n - k.min(n)..n).collect();
        by_second.extend(sa.iter().filter(|&&p| p >= k).map(|&p| p - k));
        sa = counting_sort(&by_second, |i| rank[i], classes);

        let second = |i: usize| if i + k < n { Some(rank[i + k]) } else { None };
        tmp[sa[0]] = 0;
        let mut c = 0;
        for w in 1..n {
            let (a, b) = (sa[w - 1], sa[w]);
            if rank[a] != rank[b] || second(a) != second(b) {
                c += 1;
            }
            tmp[b] = c;
        }
        std::mem::swap(&mut rank, &mut tmp);
        classes = c + 1;
        k *= 2;
        if k >= n {
            break;
        }
    }
    sa
}

/// `lcp[i]` is the longest common prefix of suffixes `sa[i-1]` and
/// `sa[i]`; `lcp[0] = 0`. Kasai's linear algorithm.
pub fn lcp_array(text: &[usize], sa: &[usize]) -> Vec<usize> {
    let n = text.len();
    let mut rank = vec![0; n];
    for (i, &p) in sa.iter().enumerate() {
        rank[p] = i;
    }
    let mut lcp = vec![0; n];
    let mut h = 0usize;
    for p in 0..n {
        if rank[p] == 0 {
            h = 0;
            continue;
        }
        let q = sa[rank[p] - 1];
        while p + h < n && q + h < n && text[p + h] == text[q + h] {
            h += 1;
        }
        lcp[rank[p]] = h;
        h = h.saturating_sub(1);
    }
    lcp
}

/// All maximal repeated subsequences of length at least `min_len`, with
/// every (possibly overlapping) occurrence. Sorted by length descending,
/// then by leftmost occurrence.
pub fn repeated_subsequences<T: Ord + Clone>(seq: &[T], min_len: usize) -> Vec<RepeatedPattern<T>> {
    let min_len = min_len.max(1);
    let n = seq.len();
    if n < 2 {
        return Vec::new();
    }
    let (text, sigma) = rank_tokens(seq);
    let sa = suffix_array(&text, sigma);
    let lcp = lcp_array(&text, &sa);

    // Token preceding each suffix in SA order; `None` for the suffix at 0.
    let before: Vec<Option<usize>> = sa.iter().map(|&p| p.checked_sub(1).map(|q| text[q])).collect();
    // changes[k] counts positions j <= k where the preceding token differs
    // from that of j - 1 or is absent.
    let mut changes = vec![0usize; n];
    for k in 1..n {
        let differs = before[k].is_none() || before[k] != before[k - 1];
        changes[k] = changes[k - 1] + usize::from(differs);
    }
    let left_diverse = |lb: usize, rb: usize| before[lb].is_none() || changes[rb] > changes[lb];

    let mut patterns = Vec::new();
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    for i in 1..=n {
        let l = if i < n { lcp[i] } else { 0 };
        let mut lb = i - 1;
        while let Some(&(top_lcp, top_lb)) = stack.last() {
            if l >= top_lcp {
                break;
            }
            stack.pop();
            let rb = i - 1;
            if top_lcp >= min_len && left_diverse(top_lb, rb) {
                let mut occurrences = sa[top_lb..=rb].to_vec();
                occurrences.sort_unstable();
                let start = occurrences[0];
                patterns.push(RepeatedPattern {
                    tokens: seq[start..start + top_lcp].to_vec(),
                    occurrences,
                });
            }
            lb = top_lb;
        }
        if stack.last().is_none_or(|&(top_lcp, _)| l > top_lcp) {
            stack.push((l, lb));
        }
    }
    patterns.sort_by(|a, b| b.len().cmp(&a.len()).then(a.occurrences[0].cmp(&b.occurrences[0])));
    patterns
}

/// Greedy longest-first cover of `seq` by repeated patterns.
///
/// Each pattern claims its occurrences left to right whenever the whole
/// span is still unclaimed; all spans claimed by one pattern share one
/// label (`P0`, `P1`, ... in claiming order). Unclaimed positions join
/// the preceding section, or the following one before the first claimed
/// span. Without any claim the whole sequence is one section.
pub fn form_segment<T: Ord + Clone>(seq: &[T], min_len: usize) -> Result<Segmentation, FormError> {
    if seq.is_empty() {
        return Err(FormError::EmptySequence);
    }
    let n = seq.len();
    let mut claimed = vec![false; n];
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut next_label = 0usize;
    for pattern in repeated_subsequences(seq, min_len) {
        let len = pattern.len();
        let mut any = false;
        for &start in &pattern.occurrences {
            if claimed[start..start + len].iter().any(|&c| c) {
                continue;
            }
            claimed[start..start + len].fill(true);
            spans.push((start, next_label));
            any = true;
        }
        if any {
            next_label += 1;
        }
    }
    if spans.is_empty() {
        spans.push((0, 0));
    }
    spans.sort_unstable();

    let segments = spans
        .iter()
        .enumerate()
        .map(|(k, &(start, label))| {
            let start = if k == 0 { 0 } else { start };
            let end = spans.get(k + 1).map_or(n, |&(s, _)| s);
            Segment::new(start, end, format!("P{label}"))
        })
        .collect();
    Ok(Segmentation::new(segments).expect("greedy cover tiles the sequence"))
}

/// Tokens for FORM on raw chord labels or on the 25-symbol root/quality
/// alphabet.
pub fn form_tokens<S: AsRef<str>>(labels: &[S], simplified: bool) -> Result<Vec<String>, FormError> {
    labels
        .iter()
        .map(|l| {
            let l = l.as_ref();
            if simplified {
                Ok(simplified_token(&parse_chord(l)?))
            } else {
                Ok(l.to_owned())
            }
        })
        .collect()
}

/// Segments of uniformly random length with a fresh label each.
pub fn random_segment<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Segmentation, FormError> {
    if n == 0 {
        return Err(FormError::EmptySequence);
    }
    let mut segments = Vec::new();
    let mut start = 0;
    while start < n {
        let len = rng.gen_range(1..=n - start);
        segments.push(Segment::new(start, start + len, format!("S{}", segments.len())));
        start += len;
    }
    Ok(Segmentation::new(segments).expect("random segments tile the sequence"))
}

/// The pop template stretched to `n` positions: letter `i` starts at
/// `round(i * n / 17)`; letters that receive no position are dropped.
pub fn fixed_pop_segment(n: usize) -> Result<Segmentation, FormError> {
    if n == 0 {
        return Err(FormError::EmptySequence);
    }
    let letters: Vec<char> = POP_TEMPLATE.chars().collect();
    let m = letters.len();
    // exact rounding; i * n / 17 is never a half-integer
    let boundary = |i: usize| (2 * i * n + m) / (2 * m);
    let segments = letters
        .iter()
        .enumerate()
        .filter_map(|(i, letter)| {
            let (start, end) = (boundary(i), boundary(i + 1));
            (end > start).then(|| Segment::new(start, end, letter.to_string()))
        })
        .collect();
    Ok(Segmentation::new(segments).expect("template boundaries tile the sequence"))
}

/// Relabels a segmentation so labels are `P0`, `P1`, ... by first
/// appearance. Useful when comparing methods side by side.
pub fn canonical_labels(seg: &Segmentation) -> Segmentation {
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let segments = seg
        .segments()
        .iter()
        .map(|s| {
            let next = ids.len();
            let id = *ids.entry(s.label.as_str()).or_insert(next);
            Segment::new(s.start, s.end, format!("P{id}"))
        })
        .collect();
    Segmentation::new(segments).expect("relabeling keeps spans")
}
