use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chordseg::corpus::{
    default_grammar, generate_synthetic_corpus, load_corpus, save_corpus, split_dataset,
    AnnotatedTrack, SynthOptions,
};
use chordseg::embeddings::{
    train_embedding, DecompositionKind, EmbeddingModel, HybridEmbedding, TrainConfig,
};
use chordseg::form::{fixed_pop_segment, form_segment, form_tokens, random_segment};
use chordseg::lstm::{embed_track, labeled_sequences, train_segmenter, LabelMap, SegmenterConfig, SegmenterModel};
use chordseg::metrics::evaluate_corpus;
use chordseg::segmentation::Segmentation;
use chordseg::ChordEmbedder;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::{
    EmbeddingArgs, EmbeddingKind, EvaluateArgs, Method, SegmentArgs, SegmenterArgs, SplitArgs,
    SynthArgs,
};
use crate::error::CliError;

/// Shared context of one invocation.
pub struct Run {
    pub config_file: Option<PathBuf>,
    /// Upper bound on worker threads from CHORDSEG_THREADS.
    pub thread_cap: Option<usize>,
}

/// One line of a segmentation file.
#[derive(Debug, Serialize, Deserialize)]
pub struct SegmentationRecord {
    pub id: String,
    pub segments: Segmentation,
}

impl Run {
    fn write_manifest<A: Serialize>(
        &self,
        path: &Path,
        command: &str,
        args: &A,
        seed: Option<u64>,
        details: Value,
    ) -> Result<(), CliError> {
        let manifest = json!({
            "tool": "chordseg",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config_file": self.config_file,
            "seed": seed,
            "config": args,
            "details": details,
        });
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn read_tracks(path: &Path) -> Result<Vec<AnnotatedTrack>, CliError> {
    let loaded = load_corpus(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    for skipped in &loaded.skipped {
        eprintln!("warning: {}:{} track {:?} skipped: {}", path.display(), skipped.line, skipped.id, skipped.reason);
    }
    Ok(loaded.tracks)
}

fn sorted_by_id(mut tracks: Vec<AnnotatedTrack>) -> Result<Vec<AnnotatedTrack>, CliError> {
    tracks.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = tracks.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(CliError::data(format!("duplicate track id {:?}", w[0].id)));
    }
    Ok(tracks)
}

pub fn synth_corpus(run: &Run, args: &SynthArgs) -> Result<(), CliError> {
    let options = SynthOptions {
        seed: args.seed,
        min_sections: args.min_sections,
        max_sections: args.max_sections,
        transpose: args.transpose,
    };
    let tracks = generate_synthetic_corpus(args.n_tracks, &default_grammar(), &options)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    save_corpus(&args.out, &tracks)?;
    let chords: usize = tracks.iter().map(AnnotatedTrack::len).sum();
    run.write_manifest(
        &manifest_path(&args.out),
        "synth-corpus",
        args,
        Some(args.seed),
        json!({ "tracks": tracks.len(), "chords": chords }),
    )?;
    println!("wrote {} tracks ({chords} chords) to {}", tracks.len(), args.out.display());
    Ok(())
}

pub fn split_corpus(run: &Run, args: &SplitArgs) -> Result<(), CliError> {
    let ratios: [f64; 3] = args
        .ratios
        .as_slice()
        .try_into()
        .map_err(|_| CliError::Usage("--ratios takes three fractions".into()))?;
    let tracks = read_tracks(&args.input)?;
    let split = split_dataset(&tracks, ratios, args.seed).map_err(|e| match e {
        chordseg::CorpusError::InvalidRatios(_) => CliError::Usage(e.to_string()),
        other => CliError::from(other),
    })?;
    fs::create_dir_all(&args.out_dir)?;
    let mut counts = BTreeMap::new();
    for (name, part) in [("train", &split.train), ("valid", &split.validation), ("test", &split.test)] {
        save_corpus(args.out_dir.join(format!("{name}.jsonl")), part)?;
        counts.insert(name, part.len());
    }
    run.write_manifest(&args.out_dir.join("manifest.json"), "split-corpus", args, Some(args.seed), json!(counts))?;
    println!(
        "split {} tracks into {} train, {} valid, {} test under {}",
        tracks.len(),
        counts["train"],
        counts["valid"],
        counts["test"],
        args.out_dir.display()
    );
    Ok(())
}

fn decomposition(args: &EmbeddingArgs) -> DecompositionKind {
    match args.kind {
        EmbeddingKind::Word2vec => DecompositionKind::WholeToken,
        EmbeddingKind::Fasttext => DecompositionKind::CharNgram {
            min_n: args.ngram_min,
            max_n: args.ngram_max,
            buckets: args.ngram_buckets,
        },
        EmbeddingKind::Pitchclass2vec => DecompositionKind::PitchClass,
    }
}

pub fn train_embedding_cmd(run: &Run, args: &EmbeddingArgs) -> Result<(), CliError> {
    let kind = decomposition(args);
    kind.validate()?;
    let threads = run.thread_cap.map_or(args.threads, |cap| args.threads.min(cap)).max(1);
    let config = TrainConfig {
        window: args.window,
        negatives: args.negatives,
        subsample_t: args.subsample_t,
        dim: args.dim.unwrap_or_else(|| kind.default_dim()),
        epochs: args.epochs,
        batch_progressions: args.batch_progressions,
        learning_rate: args.learning_rate,
        seed: args.seed,
        min_count: args.min_count,
        threads,
    };
    config.validate()?;
    let tracks = read_tracks(&args.corpus)?;
    let trained = train_embedding(&tracks, &config, kind)?;
    trained.model.save(&args.out)?;
    let epochs: Vec<Value> = trained
        .epochs
        .iter()
        .map(|e| json!({ "epoch": e.epoch, "examples": e.examples, "mean_loss": e.mean_loss }))
        .collect();
    run.write_manifest(
        &manifest_path(&args.out),
        "train-embedding",
        args,
        Some(args.seed),
        json!({
            "decomposition": kind.to_string(),
            "dim": config.dim,
            "threads": threads,
            "vocabulary": trained.model.vocab().len(),
            "components": trained.model.n_components(),
            "epochs": epochs,
        }),
    )?;
    let last = trained.epochs.last().map_or(f64::NAN, |e| e.mean_loss);
    println!(
        "trained {kind} embedding (dim {}, {} labels) for {} epochs, final mean loss {last:.4}; wrote {}",
        config.dim,
        trained.model.vocab().len(),
        trained.epochs.len(),
        args.out.display()
    );
    Ok(())
}

fn preset_name(kind: DecompositionKind) -> &'static str {
    match kind {
        DecompositionKind::WholeToken => "word2vec",
        DecompositionKind::CharNgram { .. } => "fasttext",
        DecompositionKind::PitchClass => "pitchclass2vec",
    }
}

fn load_embedder(paths: &[PathBuf]) -> Result<HybridEmbedding, CliError> {
    let models = paths
        .iter()
        .map(|p| EmbeddingModel::load(p).map_err(|e| CliError::data(format!("{}: {e}", p.display()))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(HybridEmbedding::new(models)?)
}

pub fn train_segmenter_cmd(run: &Run, args: &SegmenterArgs) -> Result<(), CliError> {
    let paths: Vec<PathBuf> = std::iter::once(args.embedding.clone()).chain(args.embedding2.clone()).collect();
    let embedder = load_embedder(&paths)?;
    let inferred = embedder.models().iter().map(|m| preset_name(m.kind())).collect::<Vec<_>>().join("+");
    let mut config = match &args.preset {
        Some(name) => SegmenterConfig::preset(name).ok_or_else(|| CliError::Usage(format!("unknown preset {name:?}")))?,
        None => SegmenterConfig::preset(&inferred).unwrap_or_default(),
    };
    if let Some(h) = args.hidden_size {
        config.hidden_size = h;
    }
    if let Some(l) = args.num_layers {
        config.num_layers = l;
    }
    if let Some(d) = args.dropout {
        config.dropout = d;
    }
    config.batch_tracks = args.batch_tracks;
    config.learning_rate = args.learning_rate;
    config.max_epochs = args.max_epochs;
    config.patience = args.patience;
    config.seed = args.seed;

    let train_tracks = read_tracks(&args.train)?;
    let valid_tracks = match &args.valid {
        Some(p) => read_tracks(p)?,
        None => Vec::new(),
    };
    let labels = LabelMap::from_tracks(train_tracks.iter().chain(&valid_tracks));
    if labels.is_empty() {
        return Err(CliError::data("training corpus has no section labels"));
    }
    config.n_labels = labels.len();
    config.validate()?;
    let train = labeled_sequences(&train_tracks, &embedder, &labels)?;
    let valid = labeled_sequences(&valid_tracks, &embedder, &labels)?;
    let trained = train_segmenter(&train, &valid, &config)?;
    let model = SegmenterModel {
        config: config.clone(),
        labels,
        embeddings: paths.iter().map(|p| p.display().to_string()).collect(),
        params: trained.params,
    };
    model.save(&args.out)?;
    run.write_manifest(
        &manifest_path(&args.out),
        "train-segmenter",
        args,
        Some(args.seed),
        json!({
            "segmenter": config,
            "labels": model.labels,
            "parameters": model.params.as_slice().len(),
            "best_epoch": trained.best_epoch,
            "log": trained.log,
        }),
    )?;
    let best = trained
        .log
        .iter()
        .find(|e| e.epoch == trained.best_epoch)
        .and_then(|e| e.validation_f1)
        .map_or_else(|| "n/a".to_owned(), |f| format!("{f:.4}"));
    println!(
        "trained {} x {} LSTM for {} epochs (kept epoch {}, validation F1 {best}); wrote {}",
        config.num_layers,
        config.hidden_size,
        trained.log.len(),
        trained.best_epoch,
        args.out.display()
    );
    Ok(())
}

/// Embedding paths recorded in a model are tried as given, then relative
/// to the model's directory.
fn resolve_recorded(model_path: &Path, recorded: &str) -> PathBuf {
    let direct = PathBuf::from(recorded);
    if direct.exists() || direct.is_absolute() {
        return direct;
    }
    model_path.parent().map_or(direct.clone(), |dir| dir.join(&direct))
}

pub fn segment_cmd(run: &Run, args: &SegmentArgs, command: &str) -> Result<(), CliError> {
    let tracks = sorted_by_id(read_tracks(&args.corpus)?)?;
    let tracks: Vec<AnnotatedTrack> = tracks
        .into_iter()
        .filter(|t| {
            if t.is_empty() {
                eprintln!("warning: track {:?} has no chords and is left out", t.id);
            }
            !t.is_empty()
        })
        .collect();

    let lstm = match args.method {
        Method::Lstm => {
            let model_path = args.model.as_ref().ok_or_else(|| CliError::Usage("--method lstm needs --model".into()))?;
            let model = SegmenterModel::load(model_path)?;
            let paths: Vec<PathBuf> = match (&args.embedding, &args.embedding2) {
                (Some(a), b) => std::iter::once(a.clone()).chain(b.clone()).collect(),
                (None, Some(_)) => return Err(CliError::Usage("--embedding2 needs --embedding".into())),
                (None, None) => model.embeddings.iter().map(|p| resolve_recorded(model_path, p)).collect(),
            };
            let embedder = load_embedder(&paths)?;
            let expected = model.params.shape().input_dim;
            if embedder.dim() != expected {
                return Err(CliError::data(format!(
                    "embedding width {} does not match the model input width {expected}",
                    embedder.dim()
                )));
            }
            Some((model, embedder))
        }
        _ => None,
    };

    let segmentations = tracks
        .par_iter()
        .enumerate()
        .map(|(i, track)| -> Result<Segmentation, CliError> {
            Ok(match args.method {
                Method::Lstm => {
                    let (model, embedder) = lstm.as_ref().expect("loaded above");
                    model.predict(&embed_track(track, embedder))?
                }
                Method::FormRaw | Method::FormSimple => {
                    let tokens = form_tokens(&track.chords, args.method == Method::FormSimple)?;
                    form_segment(&tokens, args.min_pattern_len)?
                }
                Method::Random => {
                    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
                    rng.set_stream(i as u64);
                    random_segment(track.len(), &mut rng)?
                }
                Method::FixedPop => fixed_pop_segment(track.len())?,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = std::io::BufWriter::new(fs::File::create(&args.out)?);
    for (track, segments) in tracks.iter().zip(segmentations) {
        let record = SegmentationRecord { id: track.id.clone(), segments };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    run.write_manifest(
        &manifest_path(&args.out),
        command,
        args,
        Some(args.seed),
        json!({ "tracks": tracks.len() }),
    )?;
    println!("segmented {} tracks with {:?}; wrote {}", tracks.len(), args.method, args.out.display());
    Ok(())
}

pub fn read_segmentations(path: &Path) -> Result<Vec<SegmentationRecord>, CliError> {
    let reader = BufReader::new(fs::File::open(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?);
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SegmentationRecord = serde_json::from_str(&line)
            .map_err(|e| CliError::data(format!("{}:{}: {e}", path.display(), n + 1)))?;
        if !seen.insert(record.id.clone()) {
            return Err(CliError::data(format!("{}:{}: duplicate id {:?}", path.display(), n + 1, record.id)));
        }
        records.push(record);
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(records)
}

pub fn evaluate_cmd(run: &Run, args: &EvaluateArgs) -> Result<(), CliError> {
    let references: BTreeMap<String, AnnotatedTrack> =
        read_tracks(&args.reference)?.into_iter().map(|t| (t.id.clone(), t)).collect();
    let estimates = read_segmentations(&args.est)?;
    if estimates.is_empty() {
        return Err(CliError::data(format!("{} holds no segmentations", args.est.display())));
    }
    let mut pairs = Vec::with_capacity(estimates.len());
    for record in estimates {
        let track = references
            .get(&record.id)
            .ok_or_else(|| CliError::data(format!("no reference track {:?}", record.id)))?;
        if !track.is_labeled() {
            return Err(CliError::data(format!("reference track {:?} has no section labels", record.id)));
        }
        let reference = Segmentation::from_labels(&track.sections)?;
        if reference.len() != record.segments.len() {
            return Err(CliError::data(format!(
                "track {:?}: estimate covers {} chords, reference {}",
                record.id,
                record.segments.len(),
                reference.len()
            )));
        }
        pairs.push((record.id, reference, record.segments));
    }
    let report = evaluate_corpus(pairs.iter().map(|(id, r, e)| (id.as_str(), r, e)))?;
    if let Some(out) = &args.out {
        fs::write(out, report.to_json())?;
        let csv = out.with_extension("csv");
        fs::write(&csv, report.to_csv())?;
        run.write_manifest(
            &manifest_path(out),
            "evaluate",
            args,
            None,
            json!({ "tracks": report.tracks.len(), "csv": csv }),
        )?;
    }
    let a = &report.aggregate;
    println!("tracks {}", report.tracks.len());
    println!("P     {:.4}\nR     {:.4}\nF1    {:.4}", a.precision, a.recall, a.f1);
    println!("S_U   {:.4}\nS_O   {:.4}\nS_F1  {:.4}", a.under, a.over, a.entropy_f1);
    Ok(())
}
