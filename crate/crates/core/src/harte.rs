//! Harte chord-label parsing and pitch-class semantics.
//!
//! A Harte label has the shape `root:shorthand(degree,*degree,...)/bass`,
//! for example `C:maj7`, `Bb:min(*5)` or `F#:7/b7`. The special label `N`
//! denotes "no chord". Parsing produces a [`Chord`] that retains the
//! scale-degree tokens; [`Chord::pitch_class_set`] and
//! [`Chord::components`] derive the octave-free note content and the
//! (root, pitch class) pairs used as embedding components.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Errors raised while parsing Harte labels.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarteError {
    #[error("malformed chord label {label:?}: {reason}")]
    MalformedLabel { label: String, reason: &'static str },
    #[error("unknown shorthand {shorthand:?} in chord label {label:?}")]
    UnknownShorthand { label: String, shorthand: String },
    #[error("no-chord label has no root or quality")]
    NoChordInput,
}

const SHARP_NAMES: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];

/// Octave-free note identity, `C = 0` through `B = 11`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PitchClass(u8);

impl PitchClass {
    /// Wraps any integer into `[0, 11]`.
    pub fn new(value: i32) -> Self {
        PitchClass(value.rem_euclid(12) as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn transpose(self, semitones: i32) -> Self {
        PitchClass::new(i32::from(self.0) + semitones)
    }

    pub fn name(self) -> &'static str {
        SHARP_NAMES[self.0 as usize]
    }
}

impl fmt::Display for PitchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A set of pitch classes stored as a 12-bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PitchClassSet(u16);

impl PitchClassSet {
    pub fn empty() -> Self {
        PitchClassSet(0)
    }

    pub fn insert(&mut self, pc: PitchClass) {
        self.0 |= 1 << pc.0;
    }

    pub fn contains(&self, pc: PitchClass) -> bool {
        self.0 & (1 << pc.0) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn mask(&self) -> u16 {
        self.0
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = PitchClass> + '_ {
        (0..12u8).filter(|&i| self.0 & (1 << i) != 0).map(PitchClass)
    }
}

impl FromIterator<PitchClass> for PitchClassSet {
    fn from_iter<I: IntoIterator<Item = PitchClass>>(iter: I) -> Self {
        let mut set = PitchClassSet::empty();
        for pc in iter {
            set.insert(pc);
        }
        set
    }
}

/// One element of the root × pitch-class product; 144 possible values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RootPitchPair {
    pub root: PitchClass,
    pub pitch: PitchClass,
}

impl RootPitchPair {
    /// Dense id in `[0, 144)`: `root * 12 + pitch`.
    pub fn id(self) -> u32 {
        u32::from(self.root.0) * 12 + u32::from(self.pitch.0)
    }
}

/// A scale degree such as `b3`, `#11` or `bb7`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Degree {
    number: u8,
    accidental: i8,
}

impl Degree {
    const fn natural(number: u8) -> Self {
        Degree { number, accidental: 0 }
    }

    const fn flat(number: u8) -> Self {
        Degree { number, accidental: -1 }
    }

    const fn sharp(number: u8) -> Self {
        Degree { number, accidental: 1 }
    }

    pub fn number(self) -> u8 {
        self.number
    }

    pub fn accidental(self) -> i8 {
        self.accidental
    }

    /// Offset above the root in semitones, reduced modulo 12.
    pub fn semitones(self) -> u8 {
        const MAJOR_SCALE: [i32; 7] = [0, 2, 4, 5, 7, 9, 11];
        let n = i32::from(self.number) - 1;
        let base = MAJOR_SCALE[(n % 7) as usize] + 12 * (n / 7);
        (base + i32::from(self.accidental)).rem_euclid(12) as u8
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sym = if self.accidental < 0 { "b" } else { "#" };
        for _ in 0..self.accidental.unsigned_abs() {
            f.write_str(sym)?;
        }
        write!(f, "{}", self.number)
    }
}

impl FromStr for Degree {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits_at = s
            .find(|c: char| c.is_ascii_digit())
            .ok_or("degree without a number")?;
        let (acc, num) = s.split_at(digits_at);
        let mut accidental = 0i8;
        for c in acc.chars() {
            match c {
                'b' => accidental -= 1,
                '#' => accidental += 1,
                _ => return Err("invalid accidental in degree"),
            }
            if accidental.abs() > 2 {
                return Err("too many accidentals in degree");
            }
        }
        let number: u8 = num.parse().map_err(|_| "invalid degree number")?;
        if !(1..=13).contains(&number) {
            return Err("degree out of range 1..13");
        }
        Ok(Degree { number, accidental })
    }
}

use Degree as D;

const SHORTHANDS: &[(&str, &[Degree])] = &[
    ("maj", &[D::natural(1), D::natural(3), D::natural(5)]),
    ("min", &[D::natural(1), D::flat(3), D::natural(5)]),
    ("dim", &[D::natural(1), D::flat(3), D::flat(5)]),
    ("aug", &[D::natural(1), D::natural(3), D::sharp(5)]),
    ("maj7", &[D::natural(1), D::natural(3), D::natural(5), D::natural(7)]),
    ("min7", &[D::natural(1), D::flat(3), D::natural(5), D::flat(7)]),
    ("7", &[D::natural(1), D::natural(3), D::natural(5), D::flat(7)]),
    (
        "dim7",
        &[D::natural(1), D::flat(3), D::flat(5), Degree { number: 7, accidental: -2 }],
    ),
    ("hdim7", &[D::natural(1), D::flat(3), D::flat(5), D::flat(7)]),
    ("minmaj7", &[D::natural(1), D::flat(3), D::natural(5), D::natural(7)]),
    ("aug7", &[D::natural(1), D::natural(3), D::sharp(5), D::flat(7)]),
    ("maj6", &[D::natural(1), D::natural(3), D::natural(5), D::natural(6)]),
    ("6", &[D::natural(1), D::natural(3), D::natural(5), D::natural(6)]),
    ("min6", &[D::natural(1), D::flat(3), D::natural(5), D::natural(6)]),
    ("9", &[D::natural(1), D::natural(3), D::natural(5), D::flat(7), D::natural(9)]),
    ("maj9", &[D::natural(1), D::natural(3), D::natural(5), D::natural(7), D::natural(9)]),
    ("min9", &[D::natural(1), D::flat(3), D::natural(5), D::flat(7), D::natural(9)]),
    ("sus2", &[D::natural(1), D::natural(2), D::natural(5)]),
    ("sus4", &[D::natural(1), D::natural(4), D::natural(5)]),
    (
        "11",
        &[D::natural(1), D::natural(3), D::natural(5), D::flat(7), D::natural(9), D::natural(11)],
    ),
    (
        "maj11",
        &[D::natural(1), D::natural(3), D::natural(5), D::natural(7), D::natural(9), D::natural(11)],
    ),
    (
        "min11",
        &[D::natural(1), D::flat(3), D::natural(5), D::flat(7), D::natural(9), D::natural(11)],
    ),
    (
        "13",
        &[
            D::natural(1),
            D::natural(3),
            D::natural(5),
            D::flat(7),
            D::natural(9),
            D::natural(11),
            D::natural(13),
        ],
    ),
    (
        "maj13",
        &[D::natural(1), D::natural(3), D::natural(5), D::natural(7), D::natural(9), D::natural(13)],
    ),
    (
        "min13",
        &[
            D::natural(1),
            D::flat(3),
            D::natural(5),
            D::flat(7),
            D::natural(9),
            D::natural(11),
            D::natural(13),
        ],
    ),
    ("5", &[D::natural(1), D::natural(5)]),
    ("1", &[D::natural(1)]),
];

/// Every shorthand the parser understands.
pub fn shorthands() -> impl Iterator<Item = &'static str> {
    SHORTHANDS.iter().map(|(name, _)| *name)
}

fn shorthand_degrees(name: &str) -> Option<&'static [Degree]> {
    SHORTHANDS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, degrees)| *degrees)
}

/// A parsed Harte chord label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chord {
    raw: String,
    root: Option<PitchClass>,
    intervals: BTreeSet<Degree>,
    bass: Option<Degree>,
}

impl Chord {
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn root(&self) -> Option<PitchClass> {
        self.root
    }

    pub fn intervals(&self) -> &BTreeSet<Degree> {
        &self.intervals
    }

    pub fn bass(&self) -> Option<Degree> {
        self.bass
    }

    pub fn is_nochord(&self) -> bool {
        self.root.is_none()
    }

    /// Notes of the chord as pitch classes. The bass degree is not added.
    pub fn pitch_class_set(&self) -> PitchClassSet {
        match self.root {
            None => PitchClassSet::empty(),
            Some(root) => self
                .intervals
                .iter()
                .map(|d| root.transpose(i32::from(d.semitones())))
                .collect(),
        }
    }

    /// The product of the root with every pitch class of the chord.
    pub fn components(&self) -> Vec<RootPitchPair> {
        match self.root {
            None => Vec::new(),
            Some(root) => self
                .pitch_class_set()
                .iter()
                .map(|pitch| RootPitchPair { root, pitch })
                .collect(),
        }
    }

    /// Reduces the chord to root plus major/minor quality.
    pub fn simplify(&self) -> Result<SimplifiedChord, HarteError> {
        let root = self.root.ok_or(HarteError::NoChordInput)?;
        let quality = if self.intervals.contains(&Degree::flat(3)) {
            Quality::Minor
        } else {
            Quality::Major
        };
        Ok(SimplifiedChord { root, quality })
    }
}

impl FromStr for Chord {
    type Err = HarteError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_chord(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quality {
    Major,
    Minor,
}

/// Root and major/minor quality; 24 possible values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimplifiedChord {
    pub root: PitchClass,
    pub quality: Quality,
}

impl SimplifiedChord {
    /// Dense index in `[0, 24)`.
    pub fn index(self) -> usize {
        self.root.0 as usize * 2 + usize::from(self.quality == Quality::Minor)
    }
}

impl fmt::Display for SimplifiedChord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = match self.quality {
            Quality::Major => "maj",
            Quality::Minor => "min",
        };
        write!(f, "{}:{}", self.root, q)
    }
}

/// Token used for a chord on the 25-symbol simplified alphabet: the
/// simplified chord for pitched chords and `N` for the no-chord.
pub fn simplified_token(chord: &Chord) -> String {
    match chord.simplify() {
        Ok(s) => s.to_string(),
        Err(_) => "N".to_owned(),
    }
}

fn malformed(label: &str, reason: &'static str) -> HarteError {
    HarteError::MalformedLabel { label: label.to_owned(), reason }
}

/// Splits a label into its root spelling and the remainder.
fn split_root(label: &str) -> Result<(PitchClass, &str), HarteError> {
    let mut chars = label.char_indices();
    let natural = match chars.next() {
        Some((_, c @ 'A'..='G')) => c,
        _ => return Err(malformed(label, "root must start with a note letter A-G")),
    };
    let mut value: i32 = match natural {
        'C' => 0,
        'D' => 2,
        'E' => 4,
        'F' => 5,
        'G' => 7,
        'A' => 9,
        _ => 11,
    };
    let mut end = 1;
    for (i, c) in chars {
        match c {
            '#' => value += 1,
            'b' => value -= 1,
            _ => break,
        }
        end = i + 1;
    }
    Ok((PitchClass::new(value), &label[end..]))
}

/// Parses a Harte chord label.
///
/// `N` (and the unknown-chord marker `X`) parse as the no-chord. A label
/// with neither shorthand nor interval list is a major triad.
pub fn parse_chord(label: &str) -> Result<Chord, HarteError> {
    if label.is_empty() {
        return Err(malformed(label, "empty label"));
    }
    if label == "N" || label == "X" {
        return Ok(Chord {
            raw: label.to_owned(),
            root: None,
            intervals: BTreeSet::new(),
            bass: None,
        });
    }
    let (root, rest) = split_root(label)?;

    let (body, bass) = match rest.split_once('/') {
        Some((body, bass)) => {
            let bass = bass
                .parse::<Degree>()
                .map_err(|reason| malformed(label, reason))?;
            (body, Some(bass))
        }
        None => (rest, None),
    };

    let (shorthand, list) = match body.find('(') {
        Some(open) => {
            if !body.ends_with(')') {
                return Err(malformed(label, "unterminated interval list"));
            }
            (&body[..open], Some(&body[open + 1..body.len() - 1]))
        }
        None => (body, None),
    };
    let shorthand = match shorthand.strip_prefix(':') {
        Some(s) => s,
        None if shorthand.is_empty() => "",
        None => return Err(malformed(label, "expected ':' after root")),
    };
    if shorthand.contains([':', ')']) {
        return Err(malformed(label, "unexpected character in shorthand"));
    }

    let mut intervals: BTreeSet<Degree> = BTreeSet::new();
    match (shorthand, list) {
        ("", Some(_)) => {}
        ("", None) => intervals.extend(shorthand_degrees("maj").unwrap_or_default()),
        (name, _) => {
            let degrees = shorthand_degrees(name).ok_or_else(|| HarteError::UnknownShorthand {
                label: label.to_owned(),
                shorthand: name.to_owned(),
            })?;
            intervals.extend(degrees);
        }
    }

    let mut root_removed = false;
    if let Some(list) = list {
        for item in list.split(',').map(str::trim) {
            if item.is_empty() {
                return Err(malformed(label, "empty entry in interval list"));
            }
            if let Some(removed) = item.strip_prefix('*') {
                let degree = removed
                    .parse::<Degree>()
                    .map_err(|reason| malformed(label, reason))?;
                if degree == Degree::natural(1) {
                    root_removed = true;
                }
                intervals.remove(&degree);
            } else {
                let degree = item
                    .parse::<Degree>()
                    .map_err(|reason| malformed(label, reason))?;
                intervals.insert(degree);
            }
        }
    }
    if !root_removed && !intervals.is_empty() {
        intervals.insert(Degree::natural(1));
    }
    if intervals.is_empty() {
        return Err(malformed(label, "chord has no notes"));
    }

    Ok(Chord { raw: label.to_owned(), root: Some(root), intervals, bass })
}

/// Shifts the root of a label by `semitones`, keeping the rest verbatim.
/// The new root is spelled with sharps; `N` is returned unchanged.
pub fn transpose_label(label: &str, semitones: i32) -> Result<String, HarteError> {
    let chord = parse_chord(label)?;
    if chord.is_nochord() {
        return Ok(label.to_owned());
    }
    let (root, rest) = split_root(label)?;
    Ok(format!("{}{}", root.transpose(semitones), rest))
}
