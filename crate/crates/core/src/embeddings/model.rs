use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{decompose, DecompositionKind, EmbeddingError, Vocabulary};

const MAGIC: &str = "chordemb";
const VERSION: &str = "v1";

/// A trained chord embedding: summed input component vectors, one output
/// vector per vocabulary label, and a fallback vector for labels that
/// cannot be decomposed.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub(crate) kind: DecompositionKind,
    pub(crate) dim: usize,
    pub(crate) vocab: Vocabulary,
    pub(crate) component_ids: Vec<u64>,
    pub(crate) component_rows: HashMap<u64, usize>,
    pub(crate) input: Vec<f64>,
    pub(crate) output: Vec<f64>,
    pub(crate) unknown: Vec<f64>,
}

impl EmbeddingModel {
    /// Assembles a model from its parts; component ids are sorted and
    /// rows follow that order.
    pub fn from_parts(
        kind: DecompositionKind,
        dim: usize,
        vocab: Vocabulary,
        mut components: Vec<(u64, Vec<f64>)>,
        output: Vec<Vec<f64>>,
        unknown: Vec<f64>,
    ) -> Result<Self, EmbeddingError> {
        let bad = |what: &str| EmbeddingError::InvalidConfig(what.to_owned());
        if dim == 0 {
            return Err(bad("embedding dimension must be positive"));
        }
        if output.len() != vocab.len() {
            return Err(bad("one output vector per vocabulary entry is required"));
        }
        if unknown.len() != dim
            || components.iter().any(|(_, v)| v.len() != dim)
            || output.iter().any(|v| v.len() != dim)
        {
            return Err(bad("vector length differs from the model dimension"));
        }
        components.sort_by_key(|(id, _)| *id);
        if components.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(bad("duplicate component id"));
        }
        if kind == DecompositionKind::PitchClass && components.iter().any(|(id, _)| *id >= 144) {
            return Err(bad("pitch-class component ids lie in 0..144"));
        }
        let component_ids: Vec<u64> = components.iter().map(|(id, _)| *id).collect();
        let component_rows = component_ids.iter().enumerate().map(|(r, &id)| (id, r)).collect();
        Ok(EmbeddingModel {
            kind,
            dim,
            vocab,
            component_ids,
            component_rows,
            input: components.into_iter().flat_map(|(_, v)| v).collect(),
            output: output.into_iter().flatten().collect(),
            unknown,
        })
    }

    pub fn kind(&self) -> DecompositionKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn n_components(&self) -> usize {
        self.component_ids.len()
    }

    pub fn component_ids(&self) -> &[u64] {
        &self.component_ids
    }

    pub fn input_vector(&self, id: u64) -> Option<&[f64]> {
        let row = *self.component_rows.get(&id)?;
        Some(&self.input[row * self.dim..(row + 1) * self.dim])
    }

    pub fn input_vector_mut(&mut self, id: u64) -> Option<&mut [f64]> {
        let row = *self.component_rows.get(&id)?;
        Some(&mut self.input[row * self.dim..(row + 1) * self.dim])
    }

    pub fn output_vector(&self, index: usize) -> &[f64] {
        &self.output[index * self.dim..(index + 1) * self.dim]
    }

    pub fn unknown_vector(&self) -> &[f64] {
        &self.unknown
    }

    /// Vector of a chord label: the sum of its known component vectors.
    ///
    /// Labels outside the vocabulary of a whole-token model, and labels a
    /// pitch-class model cannot parse, get the unknown vector. Character
    /// n-gram models always sum whatever n-grams they know. The no-chord
    /// has no pitch-class components and embeds to zero.
    pub fn embed(&self, token: &str) -> Vec<f64> {
        let ids = match decompose(token, &self.kind, &self.vocab) {
            Ok(ids) => ids,
            Err(_) => return self.unknown.clone(),
        };
        if self.kind == DecompositionKind::WholeToken && ids.is_empty() {
            return self.unknown.clone();
        }
        let mut out = vec![0.0; self.dim];
        for id in ids {
            if let Some(v) = self.input_vector(id) {
                for (o, x) in out.iter_mut().zip(v) {
                    *o += x;
                }
            }
        }
        out
    }

    /// Writes the text model format.
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "{MAGIC} {VERSION} {} {} {} {}",
            self.kind,
            self.dim,
            self.n_components(),
            self.vocab.len()
        )?;
        for (row, id) in self.component_ids.iter().enumerate() {
            write!(w, "c {id}")?;
            write_floats(&mut w, &self.input[row * self.dim..(row + 1) * self.dim])?;
        }
        for (i, (token, count)) in self.vocab.iter().enumerate() {
            if token.is_empty() || token.contains(char::is_whitespace) {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("token {token:?} cannot be stored in the text format"),
                ));
            }
            write!(w, "w {token} {count}")?;
            write_floats(&mut w, self.output_vector(i))?;
        }
        write!(w, "u")?;
        write_floats(&mut w, &self.unknown)?;
        w.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
        self.write(BufWriter::new(File::create(path)?))?;
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, EmbeddingError> {
        let mut lines = r.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line?,
            None => return Err(EmbeddingError::FormatVersionMismatch("empty file".into())),
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 6 || fields[0] != MAGIC || fields[1] != VERSION {
            return Err(EmbeddingError::FormatVersionMismatch(header));
        }
        let malformed = |line: usize, reason: &str| EmbeddingError::MalformedRecord {
            line,
            reason: reason.to_owned(),
        };
        let kind: DecompositionKind = fields[2].parse()?;
        let dim: usize = fields[3].parse().map_err(|_| malformed(1, "bad dimension"))?;
        let n_components: usize = fields[4].parse().map_err(|_| malformed(1, "bad component count"))?;
        let n_vocab: usize = fields[5].parse().map_err(|_| malformed(1, "bad vocabulary size"))?;

        let mut components = Vec::with_capacity(n_components);
        let mut counts = Vec::with_capacity(n_vocab);
        let mut output = Vec::with_capacity(n_vocab);
        let mut unknown = None;
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line?;
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("c") if unknown.is_none() => {
                    let id: u64 = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| malformed(line_no, "bad component id"))?;
                    components.push((id, parse_floats(parts, dim, line_no)?));
                }
                Some("w") if unknown.is_none() => {
                    let token = parts.next().ok_or_else(|| malformed(line_no, "missing token"))?;
                    let count: u64 = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| malformed(line_no, "bad count"))?;
                    counts.push((token.to_owned(), count));
                    output.push(parse_floats(parts, dim, line_no)?);
                }
                Some("u") if unknown.is_none() => unknown = Some(parse_floats(parts, dim, line_no)?),
                None => {}
                _ => return Err(malformed(line_no, "unexpected record")),
            }
        }
        let unknown = unknown.ok_or_else(|| malformed(0, "missing unknown vector (truncated file?)"))?;
        if components.len() != n_components || counts.len() != n_vocab {
            return Err(malformed(0, "record counts differ from header (truncated file?)"));
        }
        let vocab = Vocabulary::from_counts(counts.iter().cloned());
        // from_counts re-sorts; the file is already in canonical order
        if vocab.iter().map(|(t, c)| (t.to_owned(), c)).ne(counts) {
            return Err(malformed(0, "vocabulary is not in canonical order"));
        }
        EmbeddingModel::from_parts(kind, dim, vocab, components, output, unknown)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        EmbeddingModel::read(BufReader::new(File::open(path)?))
    }
}

fn write_floats<W: Write>(w: &mut W, values: &[f64]) -> io::Result<()> {
    for v in values {
        // nine significant digits
        write!(w, " {v:.8e}")?;
    }
    writeln!(w)
}

fn parse_floats<'a>(
    parts: impl Iterator<Item = &'a str>,
    dim: usize,
    line: usize,
) -> Result<Vec<f64>, EmbeddingError> {
    let values = parts
        .map(|s| s.parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| EmbeddingError::MalformedRecord { line, reason: "bad float".into() })?;
    if values.len() != dim {
        return Err(EmbeddingError::MalformedRecord {
            line,
            reason: format!("expected {dim} values, found {}", values.len()),
        });
    }
    Ok(values)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

/// Anything that maps a chord label to a fixed-width vector.
pub trait ChordEmbedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, token: &str) -> Vec<f64>;
}

impl ChordEmbedder for EmbeddingModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, token: &str) -> Vec<f64> {
        EmbeddingModel::embed(self, token)
    }
}

/// Concatenation of several models' vectors in argument order.
pub fn hybrid_embed(models: &[&EmbeddingModel], token: &str) -> Vec<f64> {
    models.iter().flat_map(|m| m.embed(token)).collect()
}

/// Owned concatenating combination of embedding models.
#[derive(Debug, Clone)]
pub struct HybridEmbedding {
    models: Vec<EmbeddingModel>,
}

impl HybridEmbedding {
    pub fn new(models: Vec<EmbeddingModel>) -> Result<Self, EmbeddingError> {
        if models.is_empty() {
            return Err(EmbeddingError::InvalidConfig("hybrid embedding needs a model".into()));
        }
        Ok(HybridEmbedding { models })
    }

    pub fn models(&self) -> &[EmbeddingModel] {
        &self.models
    }
}

impl ChordEmbedder for HybridEmbedding {
    fn dim(&self) -> usize {
        self.models.iter().map(|m| m.dim).sum()
    }

    fn embed(&self, token: &str) -> Vec<f64> {
        let refs: Vec<&EmbeddingModel> = self.models.iter().collect();
        hybrid_embed(&refs, token)
    }
}
