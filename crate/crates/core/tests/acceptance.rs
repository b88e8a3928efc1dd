//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the report is printed by
//! `cargo test` without `--nocapture`. Criterion 6 needs a real annotated
//! corpus; point `CHORDSEG_BILLBOARD` at a corpus JSONL file to run it.

use std::collections::{BTreeSet, HashMap};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use chordseg::corpus::{
    default_grammar, generate_synthetic_corpus, load_corpus, split_dataset, AnnotatedTrack,
    SynthOptions, DEFAULT_SPLIT_RATIOS,
};
use chordseg::embeddings::{
    cosine, skipgram_gradient, skipgram_loss, train_embedding, DecompositionKind, EmbeddingModel,
    TrainConfig,
};
use chordseg::form::{form_segment, form_tokens, repeated_subsequences};
use chordseg::harte::{parse_chord, shorthands, PitchClass, PitchClassSet};
use chordseg::lstm::{
    gradient_check, gradient_check_with, labeled_sequences, predict_sections, train_segmenter,
    Backward, LabelMap, LstmParams, LstmShape, SegmenterConfig, SegmenterModel,
};
use chordseg::metrics::{evaluate_corpus, nce_scores, pairwise_scores, FrameLabeling};
use chordseg::segmentation::Segmentation;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn pcs(names: &[i32]) -> PitchClassSet {
    names.iter().map(|&p| PitchClass::new(p)).collect()
}

fn criterion_1() -> Outcome {
    let set = |label: &str| parse_chord(label).map(|c| c.pitch_class_set()).map_err(|e| e.to_string());
    ensure!(set("C:maj")? == pcs(&[0, 4, 7]), "C:maj");
    ensure!(set("C:maj13")? == pcs(&[0, 4, 7, 11, 2, 9]), "C:maj13");
    let g = parse_chord("G:min7").map_err(|e| e.to_string())?;
    let bb = parse_chord("Bb:6").map_err(|e| e.to_string())?;
    ensure!(g.pitch_class_set() == bb.pitch_class_set(), "G:min7 and Bb:6 differ as pitch sets");
    ensure!(g.components() != bb.components(), "G:min7 and Bb:6 share components");

    let roots = [
        "C", "C#", "Db", "D", "D#", "Eb", "E", "F", "F#", "Gb", "G", "G#", "Ab", "A", "A#", "Bb", "B",
    ];
    let mut parsed = 0;
    for shorthand in shorthands() {
        let base = set(&format!("C:{shorthand}"))?;
        for root in roots {
            let label = format!("{root}:{shorthand}");
            let chord = parse_chord(&label).map_err(|e| format!("{label}: {e}"))?;
            let shift = i32::from(chord.root().expect("rooted").value());
            let expected: PitchClassSet = base.iter().map(|p| p.transpose(shift)).collect();
            ensure!(chord.pitch_class_set() == expected, "{label} is not a transposed C:{shorthand}");
            parsed += 1;
        }
    }
    Ok(format!("{parsed} labels parsed, 0 failures"))
}

fn random_labels(rng: &mut ChaCha8Rng, n: usize, alphabet: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..alphabet)).collect()
}

fn brute_pairwise(r: &[usize], e: &[usize]) -> (f64, f64, f64) {
    let (mut both, mut same_r, mut same_e) = (0u64, 0u64, 0u64);
    for i in 0..r.len() {
        for j in i + 1..r.len() {
            let a = r[i] == r[j];
            let b = e[i] == e[j];
            same_r += u64::from(a);
            same_e += u64::from(b);
            both += u64::from(a && b);
        }
    }
    if same_r == 0 && same_e == 0 {
        return (1.0, 1.0, 1.0);
    }
    let p = if same_e == 0 { 0.0 } else { both as f64 / same_e as f64 };
    let rc = if same_r == 0 { 0.0 } else { both as f64 / same_r as f64 };
    let f = if p + rc == 0.0 { 0.0 } else { 2.0 * p * rc / (p + rc) };
    (p, rc, f)
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts.map(|c| c as f64 / n).map(|p| -p * p.log2()).sum()
}

/// `H(E|A) = H(A,E) - H(A)` from histograms.
fn brute_nce(r: &[usize], e: &[usize]) -> (f64, f64, f64) {
    let n = r.len() as f64;
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut hr: HashMap<usize, usize> = HashMap::new();
    let mut he: HashMap<usize, usize> = HashMap::new();
    for (&a, &b) in r.iter().zip(e) {
        *joint.entry((a, b)).or_default() += 1;
        *hr.entry(a).or_default() += 1;
        *he.entry(b).or_default() += 1;
    }
    let h_joint = entropy(joint.values().copied(), n);
    let h_e_given_r = h_joint - entropy(hr.values().copied(), n);
    let h_r_given_e = h_joint - entropy(he.values().copied(), n);
    let score = |h: f64, k: usize| if k <= 1 { 1.0 } else { (1.0 - h / (k as f64).log2()).clamp(0.0, 1.0) };
    let over = score(h_e_given_r, he.len());
    let under = score(h_r_given_e, hr.len());
    let f = if over + under == 0.0 { 0.0 } else { 2.0 * over * under / (over + under) };
    (over, under, f)
}

fn close3(a: (f64, f64, f64), b: (f64, f64, f64), tol: f64) -> bool {
    (a.0 - b.0).abs() <= tol && (a.1 - b.1).abs() <= tol && (a.2 - b.2).abs() <= tol
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_pair: f64 = 0.0;
    let mut worst_nce: f64 = 0.0;
    for case in 0..1000 {
        let n = rng.gen_range(1..=50);
        let (ka, kb) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let r = random_labels(&mut rng, n, ka);
        let e = random_labels(&mut rng, n, kb);
        let (fr, fe) = (FrameLabeling::from_labels(r.clone()), FrameLabeling::from_labels(e.clone()));
        let pw = pairwise_scores(&fr, &fe).map_err(|x| x.to_string())?;
        let nce = nce_scores(&fr, &fe).map_err(|x| x.to_string())?;
        let bp = brute_pairwise(&r, &e);
        let bn = brute_nce(&r, &e);
        ensure!(close3(pw, bp, 1e-12), "case {case}: pairwise {pw:?} vs oracle {bp:?}");
        ensure!(close3(nce, bn, 1e-9), "case {case}: nce {nce:?} vs oracle {bn:?}");
        worst_pair = worst_pair.max((pw.2 - bp.2).abs());
        worst_nce = worst_nce.max((nce.2 - bn.2).abs());

        let swapped_pw = pairwise_scores(&fe, &fr).map_err(|x| x.to_string())?;
        let swapped_nce = nce_scores(&fe, &fr).map_err(|x| x.to_string())?;
        ensure!(close3(swapped_pw, (pw.1, pw.0, pw.2), 1e-12), "case {case}: pairwise symmetry");
        ensure!(close3(swapped_nce, (nce.1, nce.0, nce.2), 1e-12), "case {case}: nce symmetry");

        let offset = rng.gen_range(10..1000);
        let renamed: Vec<String> = e.iter().map(|x| format!("L{}", 7 * x + offset)).collect();
        let fren = FrameLabeling::from_labels(renamed);
        ensure!(
            close3(pairwise_scores(&fr, &fren).map_err(|x| x.to_string())?, pw, 1e-12)
                && close3(nce_scores(&fr, &fren).map_err(|x| x.to_string())?, nce, 1e-12),
            "case {case}: relabeling changed the scores"
        );
    }
    Ok(format!("1000 pairs; max |ΔF1| pairwise {worst_pair:.1e}, entropy {worst_nce:.1e}"))
}

/// Every substring of length >= `min_len` occurring at least twice whose
/// occurrences are neither all preceded nor all followed by one token.
fn brute_maximal_repeats(seq: &[u8], min_len: usize) -> BTreeSet<(Vec<u8>, Vec<usize>)> {
    let n = seq.len();
    let mut out = BTreeSet::new();
    for len in min_len.max(1)..n {
        for start in 0..=n - len {
            let pat = &seq[start..start + len];
            let occ: Vec<usize> = (0..=n - len).filter(|&i| &seq[i..i + len] == pat).collect();
            if occ.len() < 2 || occ[0] != start {
                continue;
            }
            let left: BTreeSet<Option<u8>> = occ.iter().map(|&i| i.checked_sub(1).map(|j| seq[j])).collect();
            let right: BTreeSet<Option<u8>> = occ.iter().map(|&i| seq.get(i + len).copied()).collect();
            let left_max = left.len() > 1 || left.contains(&None);
            let right_max = right.len() > 1 || right.contains(&None);
            if left_max && right_max {
                out.insert((pat.to_vec(), occ));
            }
        }
    }
    out
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut patterns = 0;
    for case in 0..500 {
        let n = rng.gen_range(1..=20);
        let sigma = rng.gen_range(1..=4u8);
        let seq: Vec<u8> = (0..n).map(|_| rng.gen_range(0..sigma)).collect();
        for min_len in [1, 2] {
            let fast: BTreeSet<(Vec<u8>, Vec<usize>)> = repeated_subsequences(&seq, min_len)
                .into_iter()
                .map(|p| (p.tokens, p.occurrences))
                .collect();
            let slow = brute_maximal_repeats(&seq, min_len);
            ensure!(fast == slow, "case {case} {seq:?} min_len {min_len}: {fast:?} vs {slow:?}");
            patterns += fast.len();
        }
        let seg = form_segment(&seq, 2).map_err(|e| e.to_string())?;
        // rebuilding through the validating constructor re-checks contiguity
        Segmentation::new(seg.segments().to_vec()).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(seg.len() == n, "case {case}: segmentation covers {} of {n}", seg.len());
    }
    Ok(format!("500 sequences, {patterns} maximal repeats matched"))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖a - n‖ / max(‖a‖, ‖n‖, 1e-12)` over one gradient block.
fn block_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, n)| a - n).collect();
    norm(&diff) / norm(analytic).max(norm(numeric)).max(1e-12)
}

fn numeric_grad(x: &[f64], eps: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + eps;
            let up = f(&probe);
            probe[i] = x[i] - eps;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * eps)
        })
        .collect()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_sg: f64 = 0.0;
    let eps = 1e-5;
    for case in 0..100 {
        let d = rng.gen_range(2..=12);
        let k = rng.gen_range(1..=6);
        let mut vec = || -> Vec<f64> { (0..d).map(|_| rng.gen_range(-0.8..0.8)).collect() };
        let center = vec();
        let context = vec();
        let negatives: Vec<Vec<f64>> = (0..k).map(|_| vec()).collect();
        let neg_refs: Vec<&[f64]> = negatives.iter().map(Vec::as_slice).collect();
        let g = skipgram_gradient(&center, &context, &neg_refs);
        let mut errs = vec![block_error(
            &g.center,
            &numeric_grad(&center, eps, |c| skipgram_loss(c, &context, &neg_refs)),
        )];
        errs.push(block_error(
            &g.context,
            &numeric_grad(&context, eps, |v| skipgram_loss(&center, v, &neg_refs)),
        ));
        for j in 0..k {
            let numeric = numeric_grad(&negatives[j], eps, |v| {
                let mut refs = neg_refs.clone();
                refs[j] = v;
                skipgram_loss(&center, &context, &refs)
            });
            errs.push(block_error(&g.negatives[j], &numeric));
        }
        let worst = errs.into_iter().fold(0.0, f64::max);
        ensure!(worst < 1e-6, "skipgram case {case}: relative error {worst:e}");
        worst_sg = worst_sg.max(worst);
    }

    let shape = LstmShape { input_dim: 4, hidden: 5, layers: 2, n_labels: 3 };
    let mut worst_lstm: f64 = 0.0;
    let mut weakest_mutant = f64::INFINITY;
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..shape.param_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let params = LstmParams::from_flat(shape, data).map_err(|e| e.to_string())?;
        let xs: Vec<Vec<f64>> = (0..6).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let ys: Vec<usize> = (0..6).map(|_| rng.gen_range(0..3)).collect();
        let err = gradient_check(&params, &xs, &ys, 1e-5).map_err(|e| e.to_string())?;
        let mutant = gradient_check_with(&params, &xs, &ys, 1e-5, Backward::DropCellCarry)
            .map_err(|e| e.to_string())?;
        ensure!(err < 1e-4, "LSTM seed {seed}: max relative error {err:e}");
        ensure!(mutant > 1e-2, "LSTM seed {seed}: mutated backward pass scored {mutant:e}");
        worst_lstm = worst_lstm.max(err);
        weakest_mutant = weakest_mutant.min(mutant);
    }
    Ok(format!(
        "skipgram max rel err {worst_sg:.1e} (100 examples); LSTM max rel err {worst_lstm:.1e} \
         (10 models), mutant min {weakest_mutant:.2}"
    ))
}

/// Segmenter size used on the synthetic corpus; the tuned configurations
/// are sized for corpora several times larger.
fn desk_segmenter(n_labels: usize, seed: u64) -> SegmenterConfig {
    SegmenterConfig {
        hidden_size: 32,
        num_layers: 2,
        dropout: 0.0,
        batch_tracks: 16,
        learning_rate: 1e-2,
        max_epochs: 100,
        patience: 10,
        seed,
        n_labels,
    }
}

fn chord_similarity_by_section(model: &EmbeddingModel) -> (f64, f64) {
    let mut owned: Vec<(String, String)> = Vec::new();
    for (section, templates) in default_grammar() {
        let chords: BTreeSet<String> = templates.into_iter().flatten().collect();
        owned.extend(chords.into_iter().map(|c| (section.clone(), c)));
    }
    let (mut within, mut n_within, mut cross, mut n_cross) = (0.0, 0, 0.0, 0);
    for i in 0..owned.len() {
        for j in i + 1..owned.len() {
            let s = cosine(&model.embed(&owned[i].1), &model.embed(&owned[j].1));
            if owned[i].0 == owned[j].0 {
                within += s;
                n_within += 1;
            } else {
                cross += s;
                n_cross += 1;
            }
        }
    }
    (within / n_within as f64, cross / n_cross as f64)
}

fn criterion_5() -> Outcome {
    let tracks = generate_synthetic_corpus(200, &default_grammar(), &SynthOptions { seed: 7, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let split = split_dataset(&tracks, DEFAULT_SPLIT_RATIOS, 7).map_err(|e| e.to_string())?;

    let kind = DecompositionKind::PitchClass;
    let emb = train_embedding(&split.train, &TrainConfig::for_kind(kind), kind).map_err(|e| e.to_string())?;
    let first = emb.epochs.first().map(|e| e.mean_loss).ok_or("no epochs")?;
    let tenth = emb.epochs.get(9).map(|e| e.mean_loss).ok_or("fewer than 10 epochs")?;
    let reduction = 1.0 - tenth / first;
    ensure!(reduction >= 0.2, "(a) loss fell only {:.1}% ({first:.3} -> {tenth:.3})", 100.0 * reduction);

    let (within, cross) = chord_similarity_by_section(&emb.model);
    ensure!(within > cross, "(b) within-template similarity {within:.4} <= cross {cross:.4}");

    let labels = LabelMap::from_tracks(split.train.iter().chain(&split.validation));
    let seqs = |t: &[AnnotatedTrack]| labeled_sequences(t, &emb.model, &labels).map_err(|e| e.to_string());
    let (train, valid, test) = (seqs(&split.train)?, seqs(&split.validation)?, seqs(&split.test)?);
    let trained = train_segmenter(&train, &valid, &desk_segmenter(labels.len(), 7)).map_err(|e| e.to_string())?;

    let mut lstm_f1 = 0.0;
    let mut form_f1 = 0.0;
    for (seq, track) in test.iter().zip(&split.test) {
        let predicted = predict_sections(&trained.params, &seq.inputs).map_err(|e| e.to_string())?;
        let reference = FrameLabeling::from_labels(seq.labels.iter().copied());
        lstm_f1 += pairwise_scores(&reference, &FrameLabeling::from_labels(predicted)).map_err(|e| e.to_string())?.2;
        let raw = form_tokens(&track.chords, false).map_err(|e| e.to_string())?;
        let form = form_segment(&raw, 2).map_err(|e| e.to_string())?;
        form_f1 += pairwise_scores(&reference, &FrameLabeling::from_segmentation(&form)).map_err(|e| e.to_string())?.2;
    }
    lstm_f1 /= test.len() as f64;
    form_f1 /= test.len() as f64;
    ensure!(lstm_f1 >= 0.9, "(c) LSTM held-out F1 {lstm_f1:.3} < 0.9");
    ensure!(lstm_f1 > form_f1, "(c) LSTM F1 {lstm_f1:.3} does not beat FORM_raw {form_f1:.3}");
    Ok(format!(
        "(a) loss -{:.0}% ({first:.2} -> {tenth:.2}); (b) within {within:.3} > cross {cross:.3}; \
         (c) {} test tracks, LSTM F1 {lstm_f1:.3} vs FORM_raw {form_f1:.3}",
        100.0 * reduction,
        test.len()
    ))
}

/// `None` when no corpus was supplied.
fn criterion_6() -> Option<Outcome> {
    let path = std::env::var_os("CHORDSEG_BILLBOARD")?;
    Some((|| {
        let corpus = load_corpus(&path).map_err(|e| e.to_string())?;
        let split = split_dataset(&corpus.tracks, DEFAULT_SPLIT_RATIOS, 0).map_err(|e| e.to_string())?;
        let kind = DecompositionKind::PitchClass;
        let config = TrainConfig { threads: rayon::current_num_threads(), ..TrainConfig::for_kind(kind) };
        let emb = train_embedding(&split.train, &config, kind).map_err(|e| e.to_string())?;
        let labels = LabelMap::from_tracks(corpus.tracks.iter());
        let seqs = |t: &[AnnotatedTrack]| labeled_sequences(t, &emb.model, &labels).map_err(|e| e.to_string());
        let (train, valid) = (seqs(&split.train)?, seqs(&split.validation)?);
        let seg_config = SegmenterConfig {
            n_labels: labels.len(),
            ..SegmenterConfig::preset("pitchclass2vec").expect("preset exists")
        };
        let trained = train_segmenter(&train, &valid, &seg_config).map_err(|e| e.to_string())?;
        let model = SegmenterModel { config: seg_config, labels, embeddings: vec![kind.to_string()], params: trained.params };
        let mut pairs = Vec::new();
        for track in split.test.iter().filter(|t| t.is_labeled()) {
            let reference = Segmentation::from_labels(&track.sections).map_err(|e| e.to_string())?;
            let inputs: Vec<Vec<f64>> = track.chords.iter().map(|c| emb.model.embed(c)).collect();
            pairs.push((track.id.clone(), reference, model.predict(&inputs).map_err(|e| e.to_string())?));
        }
        let report = evaluate_corpus(pairs.iter().map(|(id, r, e)| (id.as_str(), r, e))).map_err(|e| e.to_string())?;
        let a = report.aggregate;
        let stretch = (a.f1 - 0.5477).abs() <= 0.05 && (a.entropy_f1 - 0.5379).abs() <= 0.05;
        Ok(format!(
            "{} test tracks: P {:.4} R {:.4} F1 {:.4} S_U {:.4} S_O {:.4} S_F1 {:.4}; stretch target {}",
            pairs.len(),
            a.precision,
            a.recall,
            a.f1,
            a.under,
            a.over,
            a.entropy_f1,
            if stretch { "met" } else { "not met" }
        ))
    })())
}

fn pipeline_bytes(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let tracks = generate_synthetic_corpus(40, &default_grammar(), &SynthOptions { seed: 11, ..Default::default() })
        .map_err(|e| err(&e))?;
    let split = split_dataset(&tracks, DEFAULT_SPLIT_RATIOS, 11).map_err(|e| err(&e))?;
    let kind = DecompositionKind::PitchClass;
    let config = TrainConfig { subsample_t: 1e-3, seed: 11, ..TrainConfig::for_kind(kind) };
    let emb = train_embedding(&split.train, &config, kind).map_err(|e| err(&e))?;
    emb.model.save(dir.join("emb.txt")).map_err(|e| err(&e))?;

    let labels = LabelMap::from_tracks(tracks.iter());
    let train = labeled_sequences(&split.train, &emb.model, &labels).map_err(|e| err(&e))?;
    let valid = labeled_sequences(&split.validation, &emb.model, &labels).map_err(|e| err(&e))?;
    let seg_config = SegmenterConfig { dropout: 0.2, max_epochs: 8, ..desk_segmenter(labels.len(), 11) };
    let trained = train_segmenter(&train, &valid, &seg_config).map_err(|e| err(&e))?;
    let model = SegmenterModel { config: seg_config, labels, embeddings: vec![kind.to_string()], params: trained.params };
    model.save(dir.join("seg.json")).map_err(|e| err(&e))?;

    let mut pairs = Vec::new();
    for t in &split.test {
        let inputs: Vec<Vec<f64>> = t.chords.iter().map(|c| emb.model.embed(c)).collect();
        let reference = Segmentation::from_labels(&t.sections).map_err(|e| err(&e))?;
        pairs.push((t.id.clone(), reference, model.predict(&inputs).map_err(|e| err(&e))?));
    }
    let report = evaluate_corpus(pairs.iter().map(|(id, r, e)| (id.as_str(), r, e))).map_err(|e| err(&e))?;
    std::fs::write(dir.join("report.json"), report.to_json()).map_err(|e| err(&e))?;
    std::fs::write(dir.join("report.csv"), report.to_csv()).map_err(|e| err(&e))?;

    ["emb.txt", "seg.json", "seg.params.bin", "report.json", "report.csv"]
        .iter()
        .map(|name| std::fs::read(dir.join(name)).map(|b| (name.to_string(), b)).map_err(|e| err(&e)))
        .collect()
}

fn criterion_7() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let first = tempfile::tempdir().map_err(|e| e.to_string())?;
    let second = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = pool.install(|| pipeline_bytes(first.path()))?;
    let b = pool.install(|| pipeline_bytes(second.path()))?;
    for ((name, x), (_, y)) in a.iter().zip(&b) {
        ensure!(x == y, "{name} differs between runs");
    }
    let total: usize = a.iter().map(|(_, x)| x.len()).sum();
    Ok(format!("{} artifacts ({total} bytes) identical across two runs", a.len()))
}

fn run(number: usize, title: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = panic::catch_unwind(AssertUnwindSafe(f))
        .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
    report(number, title, outcome, start.elapsed())
}

fn report(number: usize, title: &str, outcome: Outcome, elapsed: Duration) -> bool {
    let secs = elapsed.as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("criterion {number} PASS  {title} [{secs:.1}s]: {detail}");
            true
        }
        Err(detail) => {
            println!("criterion {number} FAIL  {title} [{secs:.1}s]: {detail}");
            false
        }
    }
}

fn main() {
    // cargo passes libtest flags such as `--quiet` or a name filter
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let selected = |n: usize| filter.as_deref().is_none_or(|f| f == n.to_string() || f == "acceptance");
    let mut ok = true;
    println!("acceptance suite");
    if selected(1) {
        ok &= run(1, "parser conformance", criterion_1);
    }
    if selected(2) {
        ok &= run(2, "metric oracle equivalence", criterion_2);
    }
    if selected(3) {
        ok &= run(3, "FORM oracle equivalence", criterion_3);
    }
    if selected(4) {
        ok &= run(4, "embedding and LSTM gradient checks", criterion_4);
    }
    if selected(5) {
        ok &= run(5, "desk-scale training efficacy", criterion_5);
    }
    if selected(6) {
        let start = Instant::now();
        match criterion_6() {
            Some(outcome) => ok &= report(6, "conditional reproduction", outcome, start.elapsed()),
            None => println!("criterion 6 SKIP  conditional reproduction: set CHORDSEG_BILLBOARD to a corpus JSONL"),
        }
    }
    if selected(7) {
        ok &= run(7, "determinism", criterion_7);
    }
    if !ok {
        std::process::exit(1);
    }
}
