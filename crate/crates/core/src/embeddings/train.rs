//! Skipgram training with negative sampling.
//!
//! Each example pairs a center chord with one observed context chord and
//! `k` sampled negatives. With `u` the summed input components of the
//! center and `v` the output vectors, the per-example loss is
//!
//! ```text
//! L = -log σ(u·v_ctx) - Σ_n log σ(-u·v_n)
//! ```
//!
//! and is minimized by per-example Adam updates restricted to the rows
//! the example touches (lazy Adam with a global step counter).
//!
//! Parameters live in relaxed atomics so the same update code serves the
//! deterministic single-threaded mode and the lock-free multi-threaded
//! mode, where concurrent updates may overwrite each other.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::distributions::{Distribution, Uniform, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::corpus::AnnotatedTrack;

use super::{build_vocab, decompose, DecompositionKind, EmbeddingError, EmbeddingModel, Vocabulary};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const NEGATIVE_POWER: f64 = 0.75;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Context chords on each side of the center.
    pub window: usize,
    pub negatives: usize,
    pub subsample_t: f64,
    pub dim: usize,
    pub epochs: usize,
    /// Tracks pooled and shuffled together before updating.
    pub batch_progressions: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub min_count: u64,
    /// Worker threads; more than one trades determinism for speed.
    pub threads: usize,
}

impl TrainConfig {
    pub fn for_kind(kind: DecompositionKind) -> Self {
        TrainConfig {
            window: 2,
            negatives: 20,
            subsample_t: 1e-5,
            dim: kind.default_dim(),
            epochs: 10,
            batch_progressions: 512,
            learning_rate: 0.025,
            seed: 0,
            min_count: 1,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let fail = |msg: &str| Err(EmbeddingError::InvalidConfig(msg.to_owned()));
        if self.window == 0 || self.negatives == 0 || self.dim == 0 {
            return fail("window, negatives and dim must be positive");
        }
        if self.batch_progressions == 0 || self.threads == 0 {
            return fail("batch size and thread count must be positive");
        }
        if !(self.subsample_t > 0.0 && self.subsample_t < 1.0) {
            return fail("subsampling factor must lie in (0, 1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning rate must be positive");
        }
        Ok(())
    }
}

/// Probability of dropping one occurrence of a label with the given
/// count: `max(0, 1 - sqrt(t / f))` with `f = count / total`.
pub fn discard_probability(count: u64, total: u64, t: f64) -> f64 {
    let f = count as f64 / total as f64;
    (1.0 - (t / f).sqrt()).max(0.0)
}

/// Normalized unigram distribution raised to the 3/4 power.
pub fn negative_distribution(vocab: &Vocabulary) -> Vec<f64> {
    let weights: Vec<f64> = vocab.iter().map(|(_, c)| (c as f64).powf(NEGATIVE_POWER)).collect();
    let sum: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / sum).collect()
}

/// Draws negative labels from [`negative_distribution`].
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    dist: WeightedIndex<f64>,
}

impl NegativeSampler {
    pub fn new(vocab: &Vocabulary) -> Result<Self, EmbeddingError> {
        let dist = WeightedIndex::new(negative_distribution(vocab))
            .map_err(|_| EmbeddingError::EmptyCorpus)?;
        Ok(NegativeSampler { dist })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkipgramExample {
    pub center: usize,
    pub context: usize,
    pub negatives: Vec<usize>,
}

/// Examples for one chord sequence. Out-of-vocabulary labels are removed
/// and every remaining occurrence is dropped with its
/// [`discard_probability`]; each survivor is then paired with every
/// survivor within `window` positions on either side.
pub fn generate_examples<S: AsRef<str>, R: Rng + ?Sized>(
    chords: &[S],
    vocab: &Vocabulary,
    config: &TrainConfig,
    sampler: &NegativeSampler,
    rng: &mut R,
) -> Vec<SkipgramExample> {
    let indices: Vec<usize> = chords.iter().filter_map(|c| vocab.index_of(c.as_ref())).collect();
    examples_from_indices(&indices, vocab, config, sampler, rng)
}

fn examples_from_indices<R: Rng + ?Sized>(
    indices: &[usize],
    vocab: &Vocabulary,
    config: &TrainConfig,
    sampler: &NegativeSampler,
    rng: &mut R,
) -> Vec<SkipgramExample> {
    let total = vocab.total_count();
    let kept: Vec<usize> = indices
        .iter()
        .copied()
        .filter(|&i| {
            let p = discard_probability(vocab.count(i), total, config.subsample_t);
            p == 0.0 || rng.gen::<f64>() >= p
        })
        .collect();
    let mut out = Vec::new();
    for (pos, &center) in kept.iter().enumerate() {
        let lo = pos.saturating_sub(config.window);
        let hi = (pos + config.window).min(kept.len().saturating_sub(1));
        for ctx_pos in lo..=hi {
            if ctx_pos == pos {
                continue;
            }
            let negatives = (0..config.negatives).map(|_| sampler.sample(rng)).collect();
            out.push(SkipgramExample { center, context: kept[ctx_pos], negatives });
        }
    }
    out
}

fn log_sigmoid(x: f64) -> f64 {
    // log σ(x) = -softplus(-x), evaluated without overflow
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Loss of one example given the center vector and the output vectors of
/// the context and the negatives.
pub fn skipgram_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    let dot = |v: &[f64]| center.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    -log_sigmoid(dot(context)) - negatives.iter().map(|v| log_sigmoid(-dot(v))).sum::<f64>()
}

/// Loss and its gradients with respect to the center vector, the context
/// output vector and each negative output vector (in argument order;
/// repeated negatives get separate entries).
#[derive(Debug, Clone, PartialEq)]
pub struct SkipgramGradient {
    pub loss: f64,
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn skipgram_gradient(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> SkipgramGradient {
    let d = center.len();
    let dot = |v: &[f64]| center.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let mut d_center = vec![0.0; d];

    let s = dot(context);
    let g = sigmoid(s) - 1.0;
    let mut loss = -log_sigmoid(s);
    for (dc, v) in d_center.iter_mut().zip(context) {
        *dc += g * v;
    }
    let d_context = center.iter().map(|u| g * u).collect();

    let mut d_negatives = Vec::with_capacity(negatives.len());
    for v in negatives {
        let s = dot(v);
        let g = sigmoid(s);
        loss -= log_sigmoid(-s);
        for (dc, x) in d_center.iter_mut().zip(v.iter()) {
            *dc += g * x;
        }
        d_negatives.push(center.iter().map(|u| g * u).collect());
    }
    SkipgramGradient { loss, center: d_center, context: d_context, negatives: d_negatives }
}

/// Row-major matrix of `f64` stored as relaxed atomics.
struct AtomicRows {
    data: Vec<AtomicU64>,
    dim: usize,
}

impl AtomicRows {
    fn from_values(values: &[f64], dim: usize) -> Self {
        AtomicRows { data: values.iter().map(|v| AtomicU64::new(v.to_bits())).collect(), dim }
    }

    fn zeros(rows: usize, dim: usize) -> Self {
        AtomicRows::from_values(&vec![0.0; rows * dim], dim)
    }

    #[inline]
    fn get(&self, i: usize) -> f64 {
        f64::from_bits(self.data[i].load(Ordering::Relaxed))
    }

    #[inline]
    fn set(&self, i: usize, v: f64) {
        self.data[i].store(v.to_bits(), Ordering::Relaxed);
    }

    fn read_row(&self, row: usize, out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.get(row * self.dim + k);
        }
    }

    fn to_vec(&self) -> Vec<f64> {
        (0..self.data.len()).map(|i| self.get(i)).collect()
    }
}

/// Parameters with their Adam moments.
struct AdamTable {
    params: AtomicRows,
    m: AtomicRows,
    v: AtomicRows,
}

impl AdamTable {
    fn new(values: &[f64], dim: usize) -> Self {
        let rows = values.len() / dim;
        AdamTable {
            params: AtomicRows::from_values(values, dim),
            m: AtomicRows::zeros(rows, dim),
            v: AtomicRows::zeros(rows, dim),
        }
    }

    fn update_row(&self, row: usize, grad: &[f64], step_size: f64) {
        let dim = self.params.dim;
        for (k, &g) in grad.iter().enumerate() {
            let i = row * dim + k;
            let m = ADAM_BETA1 * self.m.get(i) + (1.0 - ADAM_BETA1) * g;
            let v = ADAM_BETA2 * self.v.get(i) + (1.0 - ADAM_BETA2) * g * g;
            self.m.set(i, m);
            self.v.set(i, v);
            self.params.set(i, self.params.get(i) - step_size * m / (v.sqrt() + ADAM_EPS));
        }
    }
}

struct Trainer<'a> {
    input: AdamTable,
    output: AdamTable,
    /// Input rows of each vocabulary entry's components.
    rows_of: &'a [Vec<usize>],
    dim: usize,
    learning_rate: f64,
    step: AtomicU64,
}

impl Trainer<'_> {
    /// Applies one example and returns its loss (before the update).
    fn apply(&self, example: &SkipgramExample, scratch: &mut Scratch) -> f64 {
        let d = self.dim;
        let t = self.step.fetch_add(1, Ordering::Relaxed) + 1;
        let step_size = self.learning_rate * (1.0 - ADAM_BETA2.powf(t as f64)).sqrt()
            / (1.0 - ADAM_BETA1.powf(t as f64));

        let center_rows = &self.rows_of[example.center];
        scratch.u.iter_mut().for_each(|x| *x = 0.0);
        for &row in center_rows {
            for k in 0..d {
                scratch.u[k] += self.input.params.get(row * d + k);
            }
        }

        // merge repeated output rows so each row is updated once
        scratch.targets.clear();
        scratch.targets.push(example.context);
        for &n in &example.negatives {
            scratch.targets.push(n);
        }
        scratch.out_rows.clear();
        scratch.out_grads.clear();
        scratch.d_u.iter_mut().for_each(|x| *x = 0.0);
        let mut loss = 0.0;
        for (j, &target) in scratch.targets.iter().enumerate() {
            self.output.params.read_row(target, &mut scratch.v);
            let s: f64 = scratch.u.iter().zip(&scratch.v).map(|(a, b)| a * b).sum();
            let g = if j == 0 {
                loss -= log_sigmoid(s);
                sigmoid(s) - 1.0
            } else {
                loss -= log_sigmoid(-s);
                sigmoid(s)
            };
            for k in 0..d {
                scratch.d_u[k] += g * scratch.v[k];
            }
            let slot = match scratch.out_rows.iter().position(|&r| r == target) {
                Some(p) => p,
                None => {
                    scratch.out_rows.push(target);
                    scratch.out_grads.extend(std::iter::repeat_n(0.0, d));
                    scratch.out_rows.len() - 1
                }
            };
            for k in 0..d {
                scratch.out_grads[slot * d + k] += g * scratch.u[k];
            }
        }

        for (slot, &row) in scratch.out_rows.iter().enumerate() {
            self.output.update_row(row, &scratch.out_grads[slot * d..(slot + 1) * d], step_size);
        }

        scratch.in_rows.clear();
        for &row in center_rows {
            match scratch.in_rows.iter_mut().find(|(r, _)| *r == row) {
                Some((_, mult)) => *mult += 1.0,
                None => scratch.in_rows.push((row, 1.0)),
            }
        }
        for &(row, mult) in &scratch.in_rows {
            for k in 0..d {
                scratch.v[k] = mult * scratch.d_u[k];
            }
            self.input.update_row(row, &scratch.v, step_size);
        }
        loss
    }
}

struct Scratch {
    u: Vec<f64>,
    v: Vec<f64>,
    d_u: Vec<f64>,
    targets: Vec<usize>,
    out_rows: Vec<usize>,
    out_grads: Vec<f64>,
    in_rows: Vec<(usize, f64)>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Scratch {
            u: vec![0.0; dim],
            v: vec![0.0; dim],
            d_u: vec![0.0; dim],
            targets: Vec::new(),
            out_rows: Vec::new(),
            out_grads: Vec::new(),
            in_rows: Vec::new(),
        }
    }
}

/// Per-epoch training statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub examples: usize,
    pub mean_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedEmbedding {
    pub model: EmbeddingModel,
    pub epochs: Vec<EpochStats>,
}

/// Trains an embedding of the given decomposition on every chord
/// sequence of `tracks`.
///
/// Input components start uniform in `±1/(2d)`, output vectors at zero,
/// and the unknown vector is a standard normal draw scaled by `1/d`.
/// With `threads == 1` the result is a deterministic function of the
/// configuration.
pub fn train_embedding(
    tracks: &[AnnotatedTrack],
    config: &TrainConfig,
    kind: DecompositionKind,
) -> Result<TrainedEmbedding, EmbeddingError> {
    config.validate()?;
    kind.validate()?;
    let vocab = build_vocab(tracks, config.min_count)?;
    let dim = config.dim;

    let decomposed: Vec<Vec<u64>> = vocab
        .iter()
        .map(|(token, _)| decompose(token, &kind, &vocab))
        .collect::<Result<_, _>>()?;
    let mut ids: Vec<u64> = decomposed.iter().flatten().copied().collect();
    ids.sort_unstable();
    ids.dedup();
    let rows_of: Vec<Vec<usize>> = decomposed
        .iter()
        .map(|comps| comps.iter().map(|id| ids.binary_search(id).expect("collected id")).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bound = 1.0 / (2.0 * dim as f64);
    let init = Uniform::new_inclusive(-bound, bound);
    let input: Vec<f64> = (0..ids.len() * dim).map(|_| init.sample(&mut rng)).collect();
    let unknown: Vec<f64> = (0..dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal) / dim as f64)
        .collect();

    let trainer = Trainer {
        input: AdamTable::new(&input, dim),
        output: AdamTable::new(&vec![0.0; vocab.len() * dim], dim),
        rows_of: &rows_of,
        dim,
        learning_rate: config.learning_rate,
        step: AtomicU64::new(0),
    };

    let sampler = NegativeSampler::new(&vocab)?;
    let sequences: Vec<Vec<usize>> = tracks
        .iter()
        .map(|t| t.chords.iter().filter_map(|c| vocab.index_of(c)).collect())
        .collect();
    let mut order: Vec<usize> = (0..sequences.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut n_examples = 0usize;
        for chunk in order.chunks(config.batch_progressions) {
            let mut examples: Vec<SkipgramExample> = chunk
                .iter()
                .flat_map(|&t| examples_from_indices(&sequences[t], &vocab, config, &sampler, &mut rng))
                .collect();
            examples.shuffle(&mut rng);
            n_examples += examples.len();
            loss_sum += run_examples(&trainer, &examples, config.threads);
        }
        let mean_loss = if n_examples == 0 { 0.0 } else { loss_sum / n_examples as f64 };
        if !mean_loss.is_finite() {
            return Err(EmbeddingError::NonFiniteLoss { epoch, loss: mean_loss });
        }
        epochs.push(EpochStats { epoch, examples: n_examples, mean_loss });
    }

    let components = ids
        .iter()
        .zip(trainer.input.params.to_vec().chunks(dim))
        .map(|(&id, v)| (id, v.to_vec()))
        .collect();
    let output = trainer.output.params.to_vec().chunks(dim).map(<[f64]>::to_vec).collect();
    let model = EmbeddingModel::from_parts(kind, dim, vocab, components, output, unknown)?;
    Ok(TrainedEmbedding { model, epochs })
}

fn run_examples(trainer: &Trainer<'_>, examples: &[SkipgramExample], threads: usize) -> f64 {
    if threads <= 1 || examples.len() < 2 * threads {
        let mut scratch = Scratch::new(trainer.dim);
        return examples.iter().map(|e| trainer.apply(e, &mut scratch)).sum();
    }
    let per = examples.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = examples
            .chunks(per)
            .map(|part| {
                scope.spawn(move || {
                    let mut scratch = Scratch::new(trainer.dim);
                    part.iter().map(|e| trainer.apply(e, &mut scratch)).sum::<f64>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("training worker panicked")).sum()
    })
}
