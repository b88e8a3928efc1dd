//! Labeled, contiguous segmentations of a chord sequence.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SegmentationError {
    #[error("segmentation is empty")]
    Empty,
    #[error("segment {index} is empty or reversed ({start}..{end})")]
    EmptySegment { index: usize, start: usize, end: usize },
    #[error("segment {index} starts at {start}, expected {expected}")]
    Gap { index: usize, start: usize, expected: usize },
}

/// A half-open span `[start, end)` carrying a section label. Serialized
/// as a `[start, end, label]` triple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(usize, usize, String)", into = "(usize, usize, String)")]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

impl Segment {
    pub fn new(start: usize, end: usize, label: impl Into<String>) -> Self {
        Segment { start, end, label: label.into() }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Ordered, non-overlapping segments tiling `[0, len)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Segment>", into = "Vec<Segment>")]
pub struct Segmentation {
    segments: Vec<Segment>,
}

impl Segmentation {
    /// Validates contiguity: first start is 0, each segment nonempty and
    /// starting where the previous one ended.
    pub fn new(segments: Vec<Segment>) -> Result<Self, SegmentationError> {
        if segments.is_empty() {
            return Err(SegmentationError::Empty);
        }
        let mut expected = 0;
        for (index, s) in segments.iter().enumerate() {
            if s.start != expected {
                return Err(SegmentationError::Gap { index, start: s.start, expected });
            }
            if s.is_empty() {
                return Err(SegmentationError::EmptySegment { index, start: s.start, end: s.end });
            }
            expected = s.end;
        }
        Ok(Segmentation { segments })
    }

    /// Groups maximal runs of equal labels into segments.
    pub fn from_labels<L: AsRef<str>>(labels: &[L]) -> Result<Self, SegmentationError> {
        let mut segments: Vec<Segment> = Vec::new();
        for (i, label) in labels.iter().enumerate() {
            let label = label.as_ref();
            match segments.last_mut() {
                Some(last) if last.label == label => last.end = i + 1,
                _ => segments.push(Segment::new(i, i + 1, label)),
            }
        }
        Segmentation::new(segments)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Number of positions covered.
    pub fn len(&self) -> usize {
        self.segments.last().map_or(0, |s| s.end)
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Label of every covered position.
    pub fn frame_labels(&self) -> Vec<&str> {
        let mut out = Vec::with_capacity(self.len());
        for s in &self.segments {
            out.extend(std::iter::repeat_n(s.label.as_str(), s.len()));
        }
        out
    }

    pub fn into_segments(self) -> Vec<Segment> {
        self.segments
    }
}

impl From<(usize, usize, String)> for Segment {
    fn from((start, end, label): (usize, usize, String)) -> Self {
        Segment { start, end, label }
    }
}

impl From<Segment> for (usize, usize, String) {
    fn from(s: Segment) -> Self {
        (s.start, s.end, s.label)
    }
}

impl TryFrom<Vec<Segment>> for Segmentation {
    type Error = SegmentationError;

    fn try_from(segments: Vec<Segment>) -> Result<Self, Self::Error> {
        Segmentation::new(segments)
    }
}

impl From<Segmentation> for Vec<Segment> {
    fn from(s: Segmentation) -> Self {
        s.segments
    }
}
