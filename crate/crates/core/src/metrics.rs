//! Segmentation evaluation: pairwise precision/recall/F1 and the
//! normalized conditional entropy over-/under-segmentation scores.
//!
//! Both families are computed at chord-position granularity. Every
//! position is a frame; a segmentation is expanded into one label per
//! frame and the two labelings are compared through their contingency
//! table.
//!
//! Conventions:
//! - pairwise: with no same-label pairs on either side the scores are
//!   `(1, 1, 1)`; when only one side has none, the ratio with the empty
//!   denominator is 0.
//! - entropy: when a side has a single distinct label its normalizer
//!   `log2(1)` vanishes and the corresponding score is 1.
//! - logarithms are base 2.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::segmentation::Segmentation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("reference has {reference} frames but estimate has {estimate}")]
    LengthMismatch { reference: usize, estimate: usize },
    #[error("nothing to evaluate")]
    EmptyInput,
    #[error("reference covers {reference} positions but estimate covers {estimate}")]
    CoverageMismatch { reference: usize, estimate: usize },
}

/// One dense label id per frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameLabeling {
    labels: Vec<usize>,
}

impl FrameLabeling {
    /// Relabels arbitrary hashable labels to dense ids in order of first
    /// appearance.
    pub fn from_labels<T: Eq + std::hash::Hash>(labels: impl IntoIterator<Item = T>) -> Self {
        let mut ids: HashMap<T, usize> = HashMap::new();
        let labels = labels
            .into_iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l).or_insert(next)
            })
            .collect();
        FrameLabeling { labels }
    }

    pub fn from_segmentation(seg: &Segmentation) -> Self {
        FrameLabeling::from_labels(seg.frame_labels())
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn n_distinct(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }
}

/// Contingency counts of two labelings of the same frames.
struct Contingency {
    // ordered so that float sums are reproducible
    joint: BTreeMap<(usize, usize), u64>,
    reference: Vec<u64>,
    estimate: Vec<u64>,
    n: u64,
}

impl Contingency {
    fn new(reference: &FrameLabeling, estimate: &FrameLabeling) -> Result<Self, MetricsError> {
        if reference.len() != estimate.len() {
            return Err(MetricsError::LengthMismatch {
                reference: reference.len(),
                estimate: estimate.len(),
            });
        }
        if reference.is_empty() {
            return Err(MetricsError::EmptyInput);
        }
        let mut joint = BTreeMap::new();
        let mut ref_counts = vec![0u64; reference.n_distinct()];
        let mut est_counts = vec![0u64; estimate.n_distinct()];
        for (&a, &e) in reference.labels.iter().zip(&estimate.labels) {
            *joint.entry((a, e)).or_insert(0) += 1;
            ref_counts[a] += 1;
            est_counts[e] += 1;
        }
        Ok(Contingency {
            joint,
            reference: ref_counts,
            estimate: est_counts,
            n: reference.len() as u64,
        })
    }
}

fn pairs(count: u64) -> u64 {
    count * count.saturating_sub(1) / 2
}

fn harmonic(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

/// Pairwise precision, recall and F1 over same-label frame pairs.
pub fn pairwise_scores(
    reference: &FrameLabeling,
    estimate: &FrameLabeling,
) -> Result<(f64, f64, f64), MetricsError> {
    let table = Contingency::new(reference, estimate)?;
    let ref_pairs: u64 = table.reference.iter().map(|&c| pairs(c)).sum();
    let est_pairs: u64 = table.estimate.iter().map(|&c| pairs(c)).sum();
    let shared: u64 = table.joint.values().map(|&c| pairs(c)).sum();
    if ref_pairs == 0 && est_pairs == 0 {
        return Ok((1.0, 1.0, 1.0));
    }
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(shared, est_pairs);
    let recall = ratio(shared, ref_pairs);
    Ok((precision, recall, harmonic(precision, recall)))
}

/// Conditional entropy `H(X | Y)` in bits from joint counts, where `given`
/// selects the conditioning coordinate of the joint key.
fn conditional_entropy(table: &Contingency, given_is_reference: bool) -> f64 {
    let n = table.n as f64;
    let mut h = 0.0;
    for (&(a, e), &count) in &table.joint {
        let marginal = if given_is_reference { table.reference[a] } else { table.estimate[e] };
        let p_joint = count as f64 / n;
        h -= p_joint * (count as f64 / marginal as f64).log2();
    }
    h.max(0.0)
}

fn normalized_score(entropy: f64, n_labels: usize) -> f64 {
    if n_labels <= 1 {
        1.0
    } else {
        (1.0 - entropy / (n_labels as f64).log2()).clamp(0.0, 1.0)
    }
}

/// Over-segmentation, under-segmentation and their harmonic mean:
/// `S_O = 1 - H(E|A) / log2 N_E`, `S_U = 1 - H(A|E) / log2 N_A`.
pub fn nce_scores(
    reference: &FrameLabeling,
    estimate: &FrameLabeling,
) -> Result<(f64, f64, f64), MetricsError> {
    let table = Contingency::new(reference, estimate)?;
    let h_est_given_ref = conditional_entropy(&table, true);
    let h_ref_given_est = conditional_entropy(&table, false);
    let over = normalized_score(h_est_given_ref, table.estimate.len());
    let under = normalized_score(h_ref_given_est, table.reference.len());
    Ok((over, under, harmonic(over, under)))
}

/// The six scores reported for one (reference, estimate) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub over: f64,
    pub under: f64,
    pub entropy_f1: f64,
}

impl SegmentScores {
    fn as_array(&self) -> [f64; 6] {
        [self.precision, self.recall, self.f1, self.under, self.over, self.entropy_f1]
    }
}

pub fn score_frames(
    reference: &FrameLabeling,
    estimate: &FrameLabeling,
) -> Result<SegmentScores, MetricsError> {
    let (precision, recall, f1) = pairwise_scores(reference, estimate)?;
    let (over, under, entropy_f1) = nce_scores(reference, estimate)?;
    Ok(SegmentScores { precision, recall, f1, over, under, entropy_f1 })
}

/// Scores an estimated segmentation against a reference covering the
/// same positions.
pub fn score_pair(
    reference: &Segmentation,
    estimate: &Segmentation,
) -> Result<SegmentScores, MetricsError> {
    if reference.len() != estimate.len() {
        return Err(MetricsError::CoverageMismatch {
            reference: reference.len(),
            estimate: estimate.len(),
        });
    }
    score_frames(
        &FrameLabeling::from_segmentation(reference),
        &FrameLabeling::from_segmentation(estimate),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackScores {
    pub id: String,
    #[serde(flatten)]
    pub scores: SegmentScores,
}

/// Per-track scores and their unweighted mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub tracks: Vec<TrackScores>,
    pub aggregate: SegmentScores,
}

/// Scores every pair and averages each score over tracks. Each
/// aggregate F-measure is the mean of per-track F-measures.
pub fn evaluate_corpus<'a, I>(pairs: I) -> Result<CorpusReport, MetricsError>
where
    I: IntoIterator<Item = (&'a str, &'a Segmentation, &'a Segmentation)>,
{
    let tracks = pairs
        .into_iter()
        .map(|(id, reference, estimate)| {
            score_pair(reference, estimate).map(|scores| TrackScores { id: id.to_owned(), scores })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let aggregate = mean_scores(tracks.iter().map(|t| &t.scores))?;
    Ok(CorpusReport { tracks, aggregate })
}

pub fn mean_scores<'a>(
    scores: impl IntoIterator<Item = &'a SegmentScores>,
) -> Result<SegmentScores, MetricsError> {
    let mut sum = [0.0f64; 6];
    let mut n = 0usize;
    for s in scores {
        for (acc, v) in sum.iter_mut().zip(s.as_array()) {
            *acc += v;
        }
        n += 1;
    }
    if n == 0 {
        return Err(MetricsError::EmptyInput);
    }
    let m = sum.map(|v| v / n as f64);
    Ok(SegmentScores {
        precision: m[0],
        recall: m[1],
        f1: m[2],
        under: m[3],
        over: m[4],
        entropy_f1: m[5],
    })
}

impl CorpusReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per track followed by an `aggregate` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,P,R,F1,S_U,S_O,S_F1\n");
        let rows = self
            .tracks
            .iter()
            .map(|t| (t.id.as_str(), &t.scores))
            .chain(std::iter::once(("aggregate", &self.aggregate)));
        for (id, scores) in rows {
            out.push_str(&csv_field(id));
            for v in scores.as_array() {
                let _ = write!(out, ",{v:.6}");
            }
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::Segment;

    fn frames(s: &str) -> FrameLabeling {
        FrameLabeling::from_labels(s.chars())
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn identical_labelings_score_one() {
        let f = frames("AABBC");
        assert_eq!(pairwise_scores(&f, &f).unwrap(), (1.0, 1.0, 1.0));
        assert_eq!(nce_scores(&f, &f).unwrap(), (1.0, 1.0, 1.0));
    }

    #[test]
    fn pairwise_hand_example() {
        let (p, r, f) = pairwise_scores(&frames("AABB"), &frames("AAAB")).unwrap();
        assert!(close(p, 1.0 / 3.0) && close(r, 0.5) && close(f, 0.4), "{p} {r} {f}");
    }

    #[test]
    fn pairwise_no_estimate_pairs() {
        assert_eq!(pairwise_scores(&frames("AAAA"), &frames("ABCD")).unwrap(), (0.0, 0.0, 0.0));
        assert_eq!(pairwise_scores(&frames("ABCD"), &frames("ABCD")).unwrap(), (1.0, 1.0, 1.0));
        assert_eq!(pairwise_scores(&frames("A"), &frames("B")).unwrap(), (1.0, 1.0, 1.0));
    }

    #[test]
    fn entropy_hand_examples() {
        let (o, u, _) = nce_scores(&frames("AABB"), &frames("ABCD")).unwrap();
        assert!(close(o, 0.5) && close(u, 1.0));
        let (o, u, f) = nce_scores(&frames("AABB"), &frames("AAAA")).unwrap();
        assert!(close(o, 1.0) && close(u, 0.0) && close(f, 0.0));
    }

    #[test]
    fn errors() {
        assert_eq!(
            pairwise_scores(&frames("AB"), &frames("A")),
            Err(MetricsError::LengthMismatch { reference: 2, estimate: 1 })
        );
        assert_eq!(nce_scores(&frames(""), &frames("")), Err(MetricsError::EmptyInput));
        let a = Segmentation::from_labels(&["x", "x"]).unwrap();
        let b = Segmentation::from_labels(&["x"]).unwrap();
        assert!(matches!(score_pair(&a, &b), Err(MetricsError::CoverageMismatch { .. })));
        assert_eq!(evaluate_corpus(std::iter::empty()), Err(MetricsError::EmptyInput));
    }

    #[test]
    fn single_segment_estimate_is_under_segmentation() {
        let reference = Segmentation::from_labels(&["v", "v", "c", "c", "v", "b"]).unwrap();
        let estimate = Segmentation::new(vec![Segment::new(0, 6, "x")]).unwrap();
        let s = score_pair(&reference, &estimate).unwrap();
        assert_eq!(s.recall, 1.0);
        assert_eq!(s.over, 1.0);
        assert!(s.precision < 1.0);
        assert!(s.under < 1.0);
    }

    #[test]
    fn every_chord_its_own_segment() {
        let reference = Segmentation::from_labels(&["a", "a", "b", "b"]).unwrap();
        let estimate = Segmentation::from_labels(&["1", "2", "3", "4"]).unwrap();
        let s = score_pair(&reference, &estimate).unwrap();
        assert_eq!(s.precision, 0.0);
        assert!(close(s.under, 1.0));
        assert!(close(s.over, 0.5));
    }

    #[test]
    fn aggregate_is_mean_of_track_scores() {
        let r1 = Segmentation::from_labels(&["a", "a", "b", "b"]).unwrap();
        let e1 = Segmentation::from_labels(&["a", "a", "a", "b"]).unwrap();
        let r2 = Segmentation::from_labels(&["a", "a", "a", "a"]).unwrap();
        let e2 = r2.clone();
        let report = evaluate_corpus([("t1", &r1, &e1), ("t2", &r2, &e2)]).unwrap();
        let s1 = score_pair(&r1, &e1).unwrap();
        assert!(close(report.aggregate.f1, (s1.f1 + 1.0) / 2.0));
        // the mean of F1 differs from the F1 of mean P and R here
        let p = (s1.precision + 1.0) / 2.0;
        let r = (s1.recall + 1.0) / 2.0;
        assert!((report.aggregate.f1 - harmonic(p, r)).abs() > 1e-3);

        let single = evaluate_corpus([("t1", &r1, &e1)]).unwrap();
        assert_eq!(single.aggregate, s1);
    }

    #[test]
    fn mean_of_two_f1_values() {
        let mk = |f1| SegmentScores { precision: 0.0, recall: 0.0, f1, over: 0.0, under: 0.0, entropy_f1: 0.0 };
        let m = mean_scores([&mk(0.2), &mk(0.6)]).unwrap();
        assert!(close(m.f1, 0.4));
    }

    #[test]
    fn report_formats() {
        let r = Segmentation::from_labels(&["a", "b"]).unwrap();
        let report = evaluate_corpus([("x,1", &r, &r)]).unwrap();
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "id,P,R,F1,S_U,S_O,S_F1");
        assert_eq!(lines[1], "\"x,1\",1.000000,1.000000,1.000000,1.000000,1.000000,1.000000");
        assert!(lines[2].starts_with("aggregate,"));
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(json["aggregate"]["f1"], 1.0);
        assert_eq!(json["tracks"][0]["id"], "x,1");
    }
}
