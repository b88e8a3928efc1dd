use chordseg::embeddings::{train_embedding, DecompositionKind, TrainConfig};
use chordseg::form::{form_segment, form_tokens, repeated_subsequences, suffix_array};
use chordseg::lstm::{forward, sequence_gradient, Backward, LstmParams, LstmShape};
use chordseg::metrics::{nce_scores, pairwise_scores, FrameLabeling};
use chordseg::parse_chord;
use chordseg_bench::{features, label_runs, rng, tracks, uniform_sequence, LABELS};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn parser(c: &mut Criterion) {
    c.bench_function("parse_chord/15 labels", |b| {
        b.iter(|| {
            for label in LABELS {
                black_box(parse_chord(black_box(label)).unwrap().pitch_class_set());
            }
        })
    });
}

fn metrics(c: &mut Criterion) {
    let mut group = c.benchmark_group("metrics");
    for n in [200, 2000, 20000] {
        let reference = FrameLabeling::from_labels(label_runs(n, 6, 1));
        let estimate = FrameLabeling::from_labels(label_runs(n, 9, 2));
        group.bench_with_input(BenchmarkId::new("pairwise", n), &n, |b, _| {
            b.iter(|| pairwise_scores(&reference, &estimate).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("nce", n), &n, |b, _| b.iter(|| nce_scores(&reference, &estimate).unwrap()));
    }
    group.finish();
}

fn form(c: &mut Criterion) {
    let mut group = c.benchmark_group("form");
    for n in [100, 1000, 10000] {
        let text = uniform_sequence(n, 8, 3);
        group.bench_with_input(BenchmarkId::new("suffix_array", n), &text, |b, t| b.iter(|| suffix_array(t, 8)));
        group.bench_with_input(BenchmarkId::new("repeats", n), &text, |b, t| b.iter(|| repeated_subsequences(t, 2)));
    }
    let corpus = tracks(50, 4);
    group.bench_function("segment 50 tracks", |b| {
        b.iter(|| {
            for t in &corpus {
                let tokens = form_tokens(&t.chords, false).unwrap();
                black_box(form_segment(&tokens, 2).unwrap());
            }
        })
    });
    group.finish();
}

fn skipgram(c: &mut Criterion) {
    let corpus = tracks(100, 5);
    let mut group = c.benchmark_group("skipgram epoch");
    group.sample_size(10);
    for kind in [DecompositionKind::WholeToken, DecompositionKind::char_ngram_default(), DecompositionKind::PitchClass] {
        let config = TrainConfig { epochs: 1, dim: 32, ..TrainConfig::for_kind(kind) };
        group.bench_function(kind.to_string(), |b| b.iter(|| train_embedding(&corpus, &config, kind).unwrap()));
    }
    group.finish();
}

fn lstm(c: &mut Criterion) {
    let shape = LstmShape { input_dim: 10, hidden: 100, layers: 10, n_labels: 11 };
    let params = LstmParams::init(shape, &mut rng(6));
    let inputs = features(100, 10, 7);
    let targets: Vec<usize> = label_runs(100, 11, 8);
    let mut group = c.benchmark_group("lstm 10x100, 100 steps");
    group.sample_size(10);
    group.bench_function("forward", |b| b.iter(|| forward(&params, &inputs, 0.0, false, &mut rng(0)).unwrap()));
    group.bench_function("loss+gradient", |b| {
        b.iter(|| sequence_gradient(&params, &inputs, &targets, Backward::Exact).unwrap())
    });
    group.finish();
}

criterion_group!(benches, parser, metrics, form, skipgram, lstm);
criterion_main!(benches);
