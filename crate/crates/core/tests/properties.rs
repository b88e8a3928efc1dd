use std::collections::BTreeSet;

use chordseg::corpus::{
    default_grammar, generate_synthetic_corpus, normalize_section_label, read_corpus, split_dataset,
    write_corpus, AnnotatedTrack, SynthOptions,
};
use chordseg::embeddings::{decompose, train_embedding, DecompositionKind, TrainConfig};
use chordseg::form::{fixed_pop_segment, form_segment, random_segment, repeated_subsequences};
use chordseg::harte::{parse_chord, shorthands, transpose_label};
use chordseg::lstm::{forward, LstmParams, LstmShape};
use chordseg::metrics::{score_frames, FrameLabeling};
use chordseg::segmentation::Segmentation;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ROOTS: [&str; 17] = [
    "C", "C#", "Db", "D", "D#", "Eb", "E", "F", "F#", "Gb", "G", "G#", "Ab", "A", "A#", "Bb", "B",
];

fn chord_label() -> impl Strategy<Value = String> {
    let shorthand: Vec<&'static str> = shorthands().collect();
    (prop::sample::select(ROOTS.to_vec()), prop::sample::select(shorthand))
        .prop_map(|(r, s)| format!("{r}:{s}"))
}

fn contiguous(seg: &Segmentation, n: usize) -> bool {
    let s = seg.segments();
    s.first().map(|x| x.start) == Some(0)
        && s.last().map(|x| x.end) == Some(n)
        && s.windows(2).all(|w| w[0].end == w[1].start)
        && s.iter().all(|x| x.end > x.start)
}

proptest! {
    #[test]
    fn transposition_shifts_pitch_classes(label in chord_label(), k in -24i32..24) {
        let chord = parse_chord(&label).unwrap();
        let moved = parse_chord(&transpose_label(&label, k).unwrap()).unwrap();
        let expected: BTreeSet<u8> = chord.pitch_class_set().iter().map(|p| p.transpose(k).value()).collect();
        let got: BTreeSet<u8> = moved.pitch_class_set().iter().map(|p| p.value()).collect();
        prop_assert_eq!(got, expected);
        prop_assert_eq!(chord.components().len(), moved.components().len());
    }

    #[test]
    fn enharmonic_roots_agree(idx in 0usize..5, s in prop::sample::select(shorthands().collect::<Vec<_>>())) {
        let (sharp, flat) = [("C#", "Db"), ("D#", "Eb"), ("F#", "Gb"), ("G#", "Ab"), ("A#", "Bb")][idx];
        let a = parse_chord(&format!("{sharp}:{s}")).unwrap();
        let b = parse_chord(&format!("{flat}:{s}")).unwrap();
        prop_assert_eq!(a.pitch_class_set(), b.pitch_class_set());
        prop_assert_eq!(a.components(), b.components());
    }

    #[test]
    fn section_normalization_is_idempotent(raw in "[ a-zA-Z0-9_',-]{0,24}") {
        let once = normalize_section_label(&raw);
        prop_assert_eq!(normalize_section_label(&once), once.clone());
    }

    #[test]
    fn metric_ranges_and_identity(
        labels in prop::collection::vec(0u8..4, 1..40),
        other in prop::collection::vec(0u8..4, 40),
    ) {
        let r = FrameLabeling::from_labels(labels.iter().copied());
        let e = FrameLabeling::from_labels(other[..labels.len()].iter().copied());
        let s = score_frames(&r, &e).unwrap();
        for v in [s.precision, s.recall, s.f1, s.over, s.under, s.entropy_f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let same = score_frames(&r, &r).unwrap();
        for v in [same.precision, same.recall, same.f1, same.over, same.under, same.entropy_f1] {
            prop_assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn form_output_tiles_sequence(seq in prop::collection::vec(0u8..5, 1..60), min_len in 1usize..4) {
        let seg = form_segment(&seq, min_len).unwrap();
        prop_assert!(contiguous(&seg, seq.len()));
        for p in repeated_subsequences(&seq, min_len) {
            prop_assert!(p.occurrences.len() >= 2 && p.len() >= min_len);
            for &o in &p.occurrences {
                prop_assert_eq!(&seq[o..o + p.len()], p.tokens.as_slice());
            }
        }
    }

    #[test]
    fn baselines_tile_sequence(n in 1usize..200, seed in any::<u64>()) {
        prop_assert!(contiguous(&fixed_pop_segment(n).unwrap(), n));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert!(contiguous(&random_segment(n, &mut rng).unwrap(), n));
    }

    #[test]
    fn segmentation_label_round_trip(labels in prop::collection::vec(prop::sample::select(vec!["a", "b", "c"]), 1..50)) {
        let seg = Segmentation::from_labels(&labels).unwrap();
        prop_assert_eq!(seg.frame_labels(), labels.clone());
        prop_assert!(seg.segments().windows(2).all(|w| w[0].label != w[1].label));
    }

    #[test]
    fn lstm_is_causal(seed in any::<u64>(), len in 2usize..10, cut in 1usize..10) {
        let cut = cut.min(len);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = LstmParams::init(LstmShape { input_dim: 3, hidden: 4, layers: 2, n_labels: 3 }, &mut rng);
        let xs: Vec<Vec<f64>> = (0..len).map(|t| vec![t as f64 * 0.1, -0.3, (seed % 7) as f64 * 0.05]).collect();
        let full = forward(&params, &xs, 0.0, false, &mut rng).unwrap();
        let prefix = forward(&params, &xs[..cut], 0.0, false, &mut rng).unwrap();
        prop_assert_eq!(&full[..cut], prefix.as_slice());
    }
}

#[test]
fn corpus_jsonl_round_trip() {
    let tracks = generate_synthetic_corpus(12, &default_grammar(), &SynthOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_corpus(&mut buf, &tracks).unwrap();
    let loaded = read_corpus(buf.as_slice()).unwrap();
    assert!(loaded.skipped.is_empty());
    assert_eq!(loaded.tracks, tracks);
}

#[test]
fn split_partitions_tracks() {
    let tracks = generate_synthetic_corpus(1067, &default_grammar(), &SynthOptions::default()).unwrap();
    let split = split_dataset(&tracks, [0.75, 0.17, 0.08], 3).unwrap();
    // floor(1067 * 0.17) = 181, floor(1067 * 0.08) = 85, remainder to training
    assert_eq!((split.train.len(), split.validation.len(), split.test.len()), (801, 181, 85));
    let ids = |t: &[AnnotatedTrack]| t.iter().map(|x| x.id.clone()).collect::<BTreeSet<_>>();
    let all: BTreeSet<_> = ids(&split.train).union(&ids(&split.validation)).cloned().collect();
    let all: BTreeSet<_> = all.union(&ids(&split.test)).cloned().collect();
    assert_eq!(all, ids(&tracks));
    assert_eq!(split.train.len() + split.validation.len() + split.test.len(), tracks.len());
}

#[test]
fn embedding_is_sum_of_component_rows() {
    let tracks = generate_synthetic_corpus(20, &default_grammar(), &SynthOptions::default()).unwrap();
    for kind in [DecompositionKind::PitchClass, DecompositionKind::char_ngram_default(), DecompositionKind::WholeToken] {
        let config = TrainConfig { dim: 6, epochs: 2, subsample_t: 1e-2, ..TrainConfig::for_kind(kind) };
        let model = train_embedding(&tracks, &config, kind).unwrap().model;
        for label in ["A:min", "C:maj7", "F#:min", "G:7"] {
            let ids = decompose(label, &kind, model.vocab()).unwrap();
            let mut expected = vec![0.0; 6];
            for id in ids {
                if let Some(row) = model.input_vector(id) {
                    expected.iter_mut().zip(row).for_each(|(a, b)| *a += b);
                }
            }
            let got = model.embed(label);
            assert!(got.iter().zip(&expected).all(|(a, b)| (a - b).abs() < 1e-12), "{kind} {label}");
        }
    }
}
