//! Annotated chord corpora: JSONL loading and saving, section-label
//! normalization, dataset splits and synthetic corpus generation.
//!
//! Corpus files hold one JSON object per line:
//!
//! ```text
//! {"id":"t1","chords":["C:maj","G:maj"],"sections":["Verse 1","Verse 1"]}
//! ```
//!
//! `sections` may be omitted for tracks used only to train embeddings.
//! Unknown keys are ignored.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harte::{parse_chord, transpose_label, HarteError};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    InvalidRatios([f64; 3]),
    #[error("invalid template for section {section:?}: {reason}")]
    InvalidTemplate { section: String, reason: String },
}

/// A chord sequence with optional per-chord section labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedTrack {
    pub id: String,
    pub chords: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sections: Vec<String>,
}

impl AnnotatedTrack {
    pub fn len(&self) -> usize {
        self.chords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chords.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        !self.sections.is_empty()
    }
}

/// A track that was dropped while loading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedTrack {
    pub line: usize,
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub tracks: Vec<AnnotatedTrack>,
    pub skipped: Vec<SkippedTrack>,
}

const LABEL_TABLE: &[(&[&str], &str)] = &[
    (&["verse"], "verse"),
    (&["prechorus", "pre chorus"], "prechorus"),
    (&["chorus"], "chorus"),
    (&["fadein", "fade in", "intro"], "intro"),
    (&["outro", "coda", "fadeout", "fade-out", "ending"], "outro"),
    (
        &[
            "applause", "bass", "choir", "clarinet", "drums", "flute", "harmonica",
            "harpsichord", "instrumental", "instrumental break", "noise", "oboe", "organ",
            "piano", "rap", "saxophone", "solo", "spoken", "strings", "synth", "synthesizer",
            "talking", "trumpet", "vocal", "voice", "guitar",
        ],
        "instrumental",
    ),
    (&["main theme", "theme", "secondary theme"], "theme"),
    (&["transition", "tran"], "transition"),
    (&["modulation", "key change"], "other"),
];

/// Source spellings and their canonical label, as listed in the
/// conversion table.
pub fn label_conversion_table() -> impl Iterator<Item = (&'static str, &'static str)> {
    LABEL_TABLE
        .iter()
        .flat_map(|(sources, target)| sources.iter().map(move |s| (*s, *target)))
}

fn clean_label(raw: &str) -> String {
    let kept: String = raw
        .chars()
        .filter(|c| c.is_alphabetic() || c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    kept.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lowercases, strips digits and punctuation, then maps the cleaned
/// label through the conversion table. Unlisted labels pass through.
pub fn normalize_section_label(raw: &str) -> String {
    let cleaned = clean_label(raw);
    label_conversion_table()
        .find(|(source, _)| clean_label(source) == cleaned)
        .map(|(_, target)| target.to_owned())
        .unwrap_or(cleaned)
}

fn parse_record(line: &str, line_no: usize) -> Result<AnnotatedTrack, CorpusError> {
    let track: AnnotatedTrack = serde_json::from_str(line).map_err(|e| CorpusError::MalformedRecord {
        line: line_no,
        reason: e.to_string(),
    })?;
    if track.is_labeled() && track.sections.len() != track.chords.len() {
        return Err(CorpusError::MalformedRecord {
            line: line_no,
            reason: format!(
                "track {:?} has {} chords but {} section labels",
                track.id,
                track.chords.len(),
                track.sections.len()
            ),
        });
    }
    Ok(track)
}

/// Reads a JSONL corpus. Structural problems abort with
/// [`CorpusError::MalformedRecord`]; tracks containing unparseable chords
/// are reported in [`LoadedCorpus::skipped`]. Section labels come back
/// normalized.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<LoadedCorpus, CorpusError> {
    let mut corpus = LoadedCorpus::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut track = parse_record(&line, line_no)?;
        let bad: Option<HarteError> = track.chords.iter().find_map(|c| parse_chord(c).err());
        if let Some(err) = bad {
            corpus.skipped.push(SkippedTrack { line: line_no, id: track.id, reason: err.to_string() });
            continue;
        }
        for s in &mut track.sections {
            *s = normalize_section_label(s);
        }
        corpus.tracks.push(track);
    }
    Ok(corpus)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<LoadedCorpus, CorpusError> {
    read_corpus(BufReader::new(File::open(path)?))
}

pub fn write_corpus<W: Write>(mut writer: W, tracks: &[AnnotatedTrack]) -> io::Result<()> {
    for t in tracks {
        serde_json::to_writer(&mut writer, t)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_corpus(path: impl AsRef<Path>, tracks: &[AnnotatedTrack]) -> io::Result<()> {
    write_corpus(BufWriter::new(File::create(path)?), tracks)
}

/// Disjoint train/validation/test partition of a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusSplit {
    pub train: Vec<AnnotatedTrack>,
    pub validation: Vec<AnnotatedTrack>,
    pub test: Vec<AnnotatedTrack>,
}

pub const DEFAULT_SPLIT_RATIOS: [f64; 3] = [0.75, 0.17, 0.08];

/// Shuffles deterministically under `seed` and cuts contiguous blocks.
/// Validation and test sizes are `floor(n * ratio)`; the remainder goes
/// to training.
pub fn split_dataset(
    tracks: &[AnnotatedTrack],
    ratios: [f64; 3],
    seed: u64,
) -> Result<CorpusSplit, CorpusError> {
    if tracks.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) || (sum - 1.0).abs() > 1e-9 {
        return Err(CorpusError::InvalidRatios(ratios));
    }
    let n = tracks.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // tolerance keeps e.g. 10 * 0.1 from flooring to 0 after rounding
    let take = |r: f64| ((n as f64 * r) + 1e-9).floor() as usize;
    let n_val = take(ratios[1]);
    let n_test = take(ratios[2]);
    let n_train = n - n_val - n_test;
    let pick = |range: std::ops::Range<usize>| -> Vec<AnnotatedTrack> {
        order[range].iter().map(|&i| tracks[i].clone()).collect()
    };
    Ok(CorpusSplit {
        train: pick(0..n_train),
        validation: pick(n_train..n_train + n_val),
        test: pick(n_train + n_val..n),
    })
}

/// Chord-progression templates for each section label.
pub type SectionGrammar = BTreeMap<String, Vec<Vec<String>>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthOptions {
    pub seed: u64,
    pub min_sections: usize,
    pub max_sections: usize,
    /// Transpose each whole track by a random number of semitones.
    pub transpose: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions { seed: 0, min_sections: 3, max_sections: 8, transpose: false }
    }
}

/// Builds `n_tracks` tracks by concatenating 3-8 sections (bounds from
/// `options`). Consecutive sections always carry different labels when
/// the grammar has more than one; each section instantiates one of its
/// label's templates.
pub fn generate_synthetic_corpus(
    n_tracks: usize,
    grammar: &SectionGrammar,
    options: &SynthOptions,
) -> Result<Vec<AnnotatedTrack>, CorpusError> {
    let invalid = |section: &str, reason: String| CorpusError::InvalidTemplate {
        section: section.to_owned(),
        reason,
    };
    if grammar.is_empty() {
        return Err(invalid("", "grammar has no sections".into()));
    }
    if options.min_sections == 0 || options.min_sections > options.max_sections {
        return Err(invalid("", "section count bounds are empty".into()));
    }
    for (section, templates) in grammar {
        if templates.is_empty() {
            return Err(invalid(section, "no templates".into()));
        }
        for template in templates {
            if template.is_empty() {
                return Err(invalid(section, "empty template".into()));
            }
            if let Some(err) = template.iter().find_map(|c| parse_chord(c).err()) {
                return Err(invalid(section, err.to_string()));
            }
        }
    }

    let labels: Vec<&String> = grammar.keys().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut tracks = Vec::with_capacity(n_tracks);
    for t in 0..n_tracks {
        let n_sections = rng.gen_range(options.min_sections..=options.max_sections);
        let shift = if options.transpose { rng.gen_range(0..12) } else { 0 };
        let mut chords = Vec::new();
        let mut sections = Vec::new();
        let mut previous: Option<usize> = None;
        for _ in 0..n_sections {
            let choice = match previous {
                Some(p) if labels.len() > 1 => {
                    let k = rng.gen_range(0..labels.len() - 1);
                    if k >= p { k + 1 } else { k }
                }
                _ => rng.gen_range(0..labels.len()),
            };
            previous = Some(choice);
            let label = labels[choice];
            let templates = &grammar[label];
            let template = &templates[rng.gen_range(0..templates.len())];
            for chord in template {
                let chord = if shift == 0 {
                    chord.clone()
                } else {
                    transpose_label(chord, shift).map_err(|e| invalid(label, e.to_string()))?
                };
                chords.push(chord);
                sections.push(label.clone());
            }
        }
        tracks.push(AnnotatedTrack { id: format!("synth-{t:05}"), chords, sections });
    }
    Ok(tracks)
}

/// Six section types whose templates use pairwise disjoint chord
/// vocabularies.
pub fn default_grammar() -> SectionGrammar {
    let templates: [(&str, [&[&str]; 2]); 6] = [
        (
            "intro",
            [
                &["C:maj7", "F:maj7", "C:maj7", "F:maj7"],
                &["C:maj7", "D:sus4", "F:maj7", "D:sus4"],
            ],
        ),
        (
            "verse",
            [
                &["A:min", "F:maj", "C:maj", "G:maj", "A:min", "F:maj", "C:maj", "G:maj"],
                &["A:min", "G:maj", "F:maj", "G:maj", "A:min", "G:maj", "F:maj", "G:maj"],
            ],
        ),
        (
            "chorus",
            [
                &["D:min7", "G:7", "E:min7", "A:7", "D:min7", "G:7", "C:maj6", "C:maj6"],
                &["E:min7", "A:7", "D:min7", "G:7", "E:min7", "A:7", "D:min7", "G:7"],
            ],
        ),
        (
            "bridge",
            [
                &["Bb:maj", "Eb:maj", "Ab:maj", "Bb:maj"],
                &["Eb:maj", "Bb:maj", "F:min", "Ab:maj"],
            ],
        ),
        (
            "instrumental",
            [
                &["E:min", "B:min", "E:min", "B:min", "C:maj9", "D:maj"],
                &["E:min", "D:maj", "C:maj9", "B:min", "E:min", "D:maj"],
            ],
        ),
        (
            "outro",
            [
                &["F#:min", "C#:7", "F#:min", "C#:7"],
                &["F#:min", "B:7", "E:maj", "C#:7"],
            ],
        ),
    ];
    templates.iter()
        .map(|(label, templates)| {
            let templates = templates
                .iter()
                .map(|t| t.iter().map(|c| (*c).to_owned()).collect())
                .collect();
            ((*label).to_owned(), templates)
        })
        .collect()
}
