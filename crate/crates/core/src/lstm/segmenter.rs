use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::AnnotatedTrack;
use crate::embeddings::ChordEmbedder;
use crate::metrics::{pairwise_scores, FrameLabeling};
use crate::segmentation::Segmentation;

use super::network::{
    accumulate_gradient, argmax, check_targets, forward, forward_cached, Backward, Dropout,
};
use super::{LstmParams, LstmShape, SegmenterError};

pub const SEGMENTER_FORMAT: &str = "chordseg-lstm";
const FORMAT_VERSION: u32 = 1;

/// Sequences per gradient work unit. Fixed so that the summation order, and
/// therefore every bit of the result, does not depend on the thread count.
const GRAD_CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmenterConfig {
    pub hidden_size: usize,
    pub num_layers: usize,
    pub dropout: f64,
    pub batch_tracks: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without a validation improvement before stopping; 0 disables
    /// early stopping.
    pub patience: usize,
    pub seed: u64,
    pub n_labels: usize,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        SegmenterConfig {
            hidden_size: 100,
            num_layers: 10,
            dropout: 0.0,
            batch_tracks: 128,
            learning_rate: 1e-3,
            max_epochs: 100,
            patience: 5,
            seed: 0,
            n_labels: 11,
        }
    }
}

impl SegmenterConfig {
    /// Tuned size for an embedding setup: `word2vec`, `fasttext`,
    /// `pitchclass2vec`, `pitchclass2vec+word2vec` or
    /// `pitchclass2vec+fasttext`.
    pub fn preset(embedding: &str) -> Option<Self> {
        let (hidden_size, num_layers, dropout) = match embedding {
            "word2vec" => (100, 5, 0.3),
            "fasttext" => (100, 5, 0.5),
            "pitchclass2vec" => (100, 10, 0.0),
            "pitchclass2vec+word2vec" => (200, 5, 0.3),
            "pitchclass2vec+fasttext" => (200, 5, 0.0),
            _ => return None,
        };
        Some(SegmenterConfig { hidden_size, num_layers, dropout, ..Default::default() })
    }

    pub fn validate(&self) -> Result<(), SegmenterError> {
        let bad = |m: String| Err(SegmenterError::InvalidConfig(m));
        if self.hidden_size == 0 || self.num_layers == 0 {
            return bad(format!("hidden_size {} and num_layers {} must be positive", self.hidden_size, self.num_layers));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.batch_tracks == 0 || self.n_labels == 0 {
            return bad("batch_tracks and n_labels must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {}", self.learning_rate));
        }
        Ok(())
    }

    pub fn shape(&self, input_dim: usize) -> LstmShape {
        LstmShape {
            input_dim,
            hidden: self.hidden_size,
            layers: self.num_layers,
            n_labels: self.n_labels,
        }
    }
}

/// Section label vocabulary, sorted so that indices are reproducible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelMap {
    labels: Vec<String>,
}

impl LabelMap {
    pub fn new(labels: impl IntoIterator<Item = String>) -> Self {
        let set: BTreeSet<String> = labels.into_iter().collect();
        LabelMap { labels: set.into_iter().collect() }
    }

    pub fn from_tracks<'a>(tracks: impl IntoIterator<Item = &'a AnnotatedTrack>) -> Self {
        LabelMap::new(tracks.into_iter().flat_map(|t| t.sections.iter().cloned()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Embedded chords of one track with their section label indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequence {
    pub id: String,
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

pub fn embed_track(track: &AnnotatedTrack, embedder: &dyn ChordEmbedder) -> Vec<Vec<f64>> {
    track.chords.iter().map(|c| embedder.embed(c)).collect()
}

/// Embeds every labeled track. Unlabeled tracks are left out.
pub fn labeled_sequences(
    tracks: &[AnnotatedTrack],
    embedder: &dyn ChordEmbedder,
    labels: &LabelMap,
) -> Result<Vec<LabeledSequence>, SegmenterError> {
    tracks
        .iter()
        .filter(|t| t.is_labeled())
        .map(|t| {
            let ids = t
                .sections
                .iter()
                .map(|s| labels.index_of(s).ok_or_else(|| SegmenterError::UnknownLabel(s.clone())))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(LabeledSequence { id: t.id.clone(), inputs: embed_track(t, embedder), labels: ids })
        })
        .collect()
}

/// Sequences padded to a common length. `mask[b][t]` is false on padding.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedBatch {
    pub inputs: Vec<Vec<Vec<f64>>>,
    pub targets: Vec<Vec<usize>>,
    pub mask: Vec<Vec<bool>>,
}

impl PaddedBatch {
    /// Pads with zero vectors and label 0.
    pub fn new(sequences: &[&LabeledSequence], input_dim: usize) -> Self {
        let len = sequences.iter().map(|s| s.inputs.len()).max().unwrap_or(0);
        let mut batch = PaddedBatch { inputs: vec![], targets: vec![], mask: vec![] };
        for s in sequences {
            let pad = len - s.inputs.len();
            let mut inputs = s.inputs.clone();
            inputs.extend(std::iter::repeat_n(vec![0.0; input_dim], pad));
            let mut targets = s.labels.clone();
            targets.extend(std::iter::repeat_n(0, pad));
            let mut mask = vec![true; s.inputs.len()];
            mask.extend(std::iter::repeat_n(false, pad));
            batch.inputs.push(inputs);
            batch.targets.push(targets);
            batch.mask.push(mask);
        }
        batch
    }

    pub fn observed_steps(&self) -> usize {
        self.mask.iter().flatten().filter(|&&m| m).count()
    }
}

/// Mean cross-entropy over the unmasked timesteps of `batch` and its
/// gradient. Sequence `j` draws its dropout masks from stream `j` of a
/// generator seeded with `dropout_seed`.
pub fn batch_loss_and_gradient(
    params: &LstmParams,
    batch: &PaddedBatch,
    dropout: f64,
    dropout_seed: u64,
) -> Result<(f64, Vec<f64>), SegmenterError> {
    let observed = batch.observed_steps();
    if observed == 0 {
        return Err(SegmenterError::EmptyInput);
    }
    for (inputs, targets) in batch.inputs.iter().zip(&batch.targets) {
        check_targets(params, targets, inputs.len())?;
    }
    let scale = 1.0 / observed as f64;
    let n_params = params.as_slice().len();
    let indices: Vec<usize> = (0..batch.inputs.len()).collect();
    let partials = indices
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut grad = vec![0.0; n_params];
            let mut loss = 0.0;
            for &j in chunk {
                let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
                rng.set_stream(j as u64);
                let drop = (dropout > 0.0).then_some(Dropout { p: dropout, rng: &mut rng });
                let cache = forward_cached(params, &batch.inputs[j], drop)?;
                loss += accumulate_gradient(
                    params,
                    &cache,
                    &batch.targets[j],
                    &batch.mask[j],
                    scale,
                    &mut grad,
                    Backward::Exact,
                );
            }
            Ok((loss, grad))
        })
        .collect::<Result<Vec<_>, SegmenterError>>()?;
    let mut iter = partials.into_iter();
    let (mut loss, mut grad) = iter.next().expect("batch has at least one sequence");
    for (l, g) in iter {
        loss += l;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    Ok((loss, grad))
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], step: 0 }
    }

    fn update(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_f1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainedSegmenter {
    pub params: LstmParams,
    pub log: Vec<EpochLog>,
    /// Epoch whose parameters were kept; 0 means the initialization.
    pub best_epoch: usize,
}

/// Argmax label per chord.
pub fn predict_sections(params: &LstmParams, inputs: &[Vec<f64>]) -> Result<Vec<usize>, SegmenterError> {
    let mut unused = ChaCha8Rng::seed_from_u64(0);
    Ok(forward(params, inputs, 0.0, false, &mut unused)?.iter().map(|z| argmax(z)).collect())
}

fn mean_pairwise_f1(params: &LstmParams, sequences: &[LabeledSequence]) -> Result<f64, SegmenterError> {
    let scores = sequences
        .par_iter()
        .map(|s| {
            let predicted = predict_sections(params, &s.inputs)?;
            let f1 = pairwise_scores(
                &FrameLabeling::from_labels(s.labels.iter().copied()),
                &FrameLabeling::from_labels(predicted),
            )
            .map(|(_, _, f1)| f1)
            .map_err(|e| SegmenterError::MalformedArtifact(e.to_string()))?;
            Ok(f1)
        })
        .collect::<Result<Vec<f64>, SegmenterError>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Trains with Adam on mean per-timestep cross-entropy.
///
/// After each epoch the model is scored by mean pairwise F1 on `valid`;
/// the best-scoring parameters are returned and training stops once
/// `patience` epochs pass without improvement. With no validation tracks
/// every epoch runs and the final parameters are returned.
pub fn train_segmenter(
    train: &[LabeledSequence],
    valid: &[LabeledSequence],
    config: &SegmenterConfig,
) -> Result<TrainedSegmenter, SegmenterError> {
    config.validate()?;
    let first = train.iter().find(|s| !s.inputs.is_empty()).ok_or(SegmenterError::EmptyDataset)?;
    let input_dim = first.inputs[0].len();
    let shape = config.shape(input_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = LstmParams::init(shape, &mut rng);
    let mut adam = Adam::new(shape.param_count());
    let usable: Vec<&LabeledSequence> = train.iter().filter(|s| !s.inputs.is_empty()).collect();
    let valid: Vec<LabeledSequence> = valid.iter().filter(|s| !s.inputs.is_empty()).cloned().collect();

    let mut best = params.clone();
    let mut best_epoch = 0;
    let mut best_f1 = f64::NEG_INFINITY;
    let mut log = Vec::new();
    for epoch in 1..=config.max_epochs {
        let mut order = usable.clone();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut steps = 0usize;
        for chunk in order.chunks(config.batch_tracks) {
            let batch = PaddedBatch::new(chunk, input_dim);
            let (loss, grad) = batch_loss_and_gradient(&params, &batch, config.dropout, rng.gen())?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(SegmenterError::NonFiniteLoss { epoch, loss });
            }
            adam.update(params.as_mut_slice(), &grad, config.learning_rate);
            let n = batch.observed_steps();
            total += loss * n as f64;
            steps += n;
        }
        let train_loss = total / steps as f64;
        let validation_f1 = if valid.is_empty() { None } else { Some(mean_pairwise_f1(&params, &valid)?) };
        log.push(EpochLog { epoch, train_loss, validation_f1 });
        match validation_f1 {
            None => {
                best = params.clone();
                best_epoch = epoch;
            }
            Some(f1) if f1 > best_f1 => {
                best_f1 = f1;
                best = params.clone();
                best_epoch = epoch;
            }
            Some(_) if config.patience > 0 && epoch - best_epoch >= config.patience => break,
            Some(_) => {}
        }
    }
    Ok(TrainedSegmenter { params: best, log, best_epoch })
}

/// Maximal runs of equal labels, named through `labels`.
pub fn labels_to_segments(predicted: &[usize], labels: &LabelMap) -> Result<Segmentation, SegmenterError> {
    if predicted.is_empty() {
        return Err(SegmenterError::EmptyInput);
    }
    let names = predicted
        .iter()
        .map(|&i| {
            labels
                .name(i)
                .ok_or(SegmenterError::LabelOutOfRange { label: i, n_labels: labels.len() })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Segmentation::from_labels(&names).map_err(|e| SegmenterError::MalformedArtifact(e.to_string()))
}

/// A trained labeler with everything needed to apply it.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmenterModel {
    pub config: SegmenterConfig,
    pub labels: LabelMap,
    /// Descriptions of the embedding models the inputs came from, in
    /// concatenation order.
    pub embeddings: Vec<String>,
    pub params: LstmParams,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    config: SegmenterConfig,
    labels: LabelMap,
    shape: LstmShape,
    embeddings: Vec<String>,
    param_count: usize,
    param_order: String,
    params_file: String,
}

const PARAM_ORDER: &str = "per layer: W[4H x in], U[4H x H], b[4H] with gates i,f,g,o; then W_out[n_labels x H], b_out[n_labels]; f64 little-endian";

fn params_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("params.bin")
}

impl SegmenterModel {
    pub fn predict(&self, inputs: &[Vec<f64>]) -> Result<Segmentation, SegmenterError> {
        labels_to_segments(&predict_sections(&self.params, inputs)?, &self.labels)
    }

    /// Writes the JSON manifest to `path` and the parameter block next to
    /// it with extension `.params.bin`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SegmenterError> {
        let path = path.as_ref();
        let bin = params_path(path);
        let manifest = Manifest {
            format: SEGMENTER_FORMAT.to_owned(),
            version: FORMAT_VERSION,
            config: self.config.clone(),
            labels: self.labels.clone(),
            shape: self.params.shape(),
            embeddings: self.embeddings.clone(),
            param_count: self.params.as_slice().len(),
            param_order: PARAM_ORDER.to_owned(),
            params_file: bin.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_owned(),
        };
        let mut json = serde_json::to_string_pretty(&manifest)
            .map_err(|e| SegmenterError::MalformedArtifact(e.to_string()))?;
        json.push('\n');
        fs::write(path, json)?;
        let bytes: Vec<u8> = self.params.as_slice().iter().flat_map(|x| x.to_le_bytes()).collect();
        fs::write(bin, bytes)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SegmenterError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| SegmenterError::MalformedArtifact(e.to_string()))?;
        if manifest.format != SEGMENTER_FORMAT || manifest.version != FORMAT_VERSION {
            return Err(SegmenterError::MalformedArtifact(format!(
                "unsupported format {} v{}",
                manifest.format, manifest.version
            )));
        }
        if manifest.shape != manifest.config.shape(manifest.shape.input_dim) || manifest.labels.len() != manifest.shape.n_labels {
            return Err(SegmenterError::MalformedArtifact("shape disagrees with config or label map".into()));
        }
        let bin = path.with_file_name(&manifest.params_file);
        let bytes = fs::read(bin)?;
        if bytes.len() != manifest.param_count * 8 {
            return Err(SegmenterError::MalformedArtifact(format!(
                "parameter block holds {} bytes, expected {}",
                bytes.len(),
                manifest.param_count * 8
            )));
        }
        let data = bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk"))).collect();
        Ok(SegmenterModel {
            config: manifest.config,
            labels: manifest.labels,
            embeddings: manifest.embeddings,
            params: LstmParams::from_flat(manifest.shape, data)?,
        })
    }
}
