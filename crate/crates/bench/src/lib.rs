//! Seeded inputs shared by the benchmarks.

use chordseg::corpus::{default_grammar, generate_synthetic_corpus, SynthOptions};
use chordseg::AnnotatedTrack;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LABELS: &[&str] = &[
    "C:maj", "A:min7", "F#:hdim7", "Bb:7(b9)", "Eb:maj/3", "G:sus4(b7)", "D:min(9)/b3", "Ab:aug", "E:dim7",
    "B:maj6", "Db:min/5", "N", "F:13", "C#:minmaj7", "Gb:9",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn tracks(n: usize, seed: u64) -> Vec<AnnotatedTrack> {
    let options = SynthOptions { seed, min_sections: 3, max_sections: 8, transpose: true };
    generate_synthetic_corpus(n, &default_grammar(), &options).expect("valid synthetic options")
}

/// Section labels with a few long runs over an alphabet of `k`.
pub fn label_runs(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let label = rng.gen_range(0..k);
        let run = rng.gen_range(4..40);
        out.extend(std::iter::repeat_n(label, run.min(n - out.len())));
    }
    out
}

pub fn uniform_sequence(n: usize, sigma: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng(seed);
    (0..n).map(|_| rng.gen_range(0..sigma)).collect()
}

pub fn features(steps: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng(seed);
    (0..steps).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}
