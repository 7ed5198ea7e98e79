//! Random small decoding instances checked against the exhaustive oracle.

use std::sync::Arc;

use colordecode::decoder::decode;
use colordecode::oracle::exhaustive_decode;
use colordecode::{
    ColoredLexicon, ColoredTranscript, DecoderConfig, FusionKind, LogitsMatrix, NGramModel, NgramEntry, Scorer,
    ScorerConfig,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Bounds for random instances. `chars` counts the separator.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub max_frames: usize,
    pub max_chars: usize,
    pub colors: usize,
    pub max_words: usize,
    pub max_word_len: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            max_frames: 4,
            max_chars: 3,
            colors: 2,
            max_words: 3,
            max_word_len: 2,
        }
    }
}

pub struct Instance {
    pub logits: LogitsMatrix,
    pub base_chars: Vec<char>,
    pub words: Vec<Vec<String>>,
    pub models: Vec<Arc<NGramModel>>,
}

pub fn random_rows(rng: &mut impl Rng, frames: usize, columns: usize) -> LogitsMatrix {
    let rows: Vec<Vec<f64>> = (0..frames)
        .map(|_| {
            let raw: Vec<f64> = (0..columns).map(|_| rng.gen_range(0.05..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            raw.iter().map(|v| v / sum).collect()
        })
        .collect();
    LogitsMatrix::from_prob_rows(&rows).expect("normalized rows")
}

/// Random bigram model over `words`: every unigram, a random subset of
/// bigrams, random backoff weights.
pub fn random_lm(rng: &mut impl Rng, words: &[String]) -> NGramModel {
    let mut entries = Vec::new();
    for w in words {
        entries.push((
            vec![w.clone()],
            NgramEntry {
                log10_prob: rng.gen_range(-3.0..-0.05),
                backoff_log10: Some(rng.gen_range(-1.0..0.0)),
            },
        ));
    }
    for a in words {
        for b in words {
            if rng.gen_bool(0.5) {
                entries.push((
                    vec![a.clone(), b.clone()],
                    NgramEntry {
                        log10_prob: rng.gen_range(-2.0..-0.01),
                        backoff_log10: None,
                    },
                ));
            }
        }
    }
    NGramModel::from_ngrams(2, entries).expect("well-formed random model")
}

pub fn random_instance(rng: &mut impl Rng, shape: Shape) -> Instance {
    let k = rng.gen_range(2..=shape.max_chars.max(2));
    let letters: Vec<char> = ('a'..='z').take(k - 1).collect();
    let mut base_chars = vec![' '];
    base_chars.extend(&letters);
    let frames = rng.gen_range(1..=shape.max_frames);
    let words: Vec<Vec<String>> = (0..shape.colors)
        .map(|_| {
            let n = rng.gen_range(1..=shape.max_words);
            let mut ws: Vec<String> = (0..n)
                .map(|_| {
                    let len = rng.gen_range(1..=shape.max_word_len);
                    (0..len).map(|_| *letters.choose(rng).expect("letters")).collect()
                })
                .collect();
            ws.sort();
            ws.dedup();
            ws
        })
        .collect();
    let models = words.iter().map(|ws| Arc::new(random_lm(rng, ws))).collect();
    Instance {
        logits: random_rows(rng, frames, base_chars.len() + 1),
        base_chars,
        words,
        models,
    }
}

impl Instance {
    pub fn coloring(&self, config: ScorerConfig) -> (Scorer, ColoredLexicon) {
        let scorer = Scorer::new(FusionKind::Coloring, &self.models, config.clone(), None).expect("valid scorer");
        let off = config.unknown_subword_penalty.is_some();
        let lexicon =
            ColoredLexicon::from_word_lists(self.base_chars.clone(), ' ', &self.words, off).expect("valid lexicon");
        (scorer, lexicon)
    }
}

pub fn same_transcript(a: &ColoredTranscript, b: &ColoredTranscript, tol: f64) -> bool {
    let scores_match = if a.score.is_finite() || b.score.is_finite() {
        (a.score - b.score).abs() <= tol
    } else {
        true
    };
    a.words == b.words && scores_match
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct VerifyReport {
    pub instances: usize,
    pub mismatches: usize,
    pub max_score_divergence: f64,
}

/// Beam search at a width no instance can fill versus exhaustive search.
pub fn verify(instances: usize, seed: u64, shape: Shape, config: &ScorerConfig) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerifyReport {
        instances,
        ..Default::default()
    };
    for _ in 0..instances {
        let inst = random_instance(&mut rng, shape);
        let (scorer, lexicon) = inst.coloring(config.clone());
        let beam = decode(&inst.logits, &DecoderConfig::new(&scorer, &lexicon, usize::MAX)).expect("instance decodes");
        let oracle = exhaustive_decode(&inst.logits, &scorer, &lexicon, inst.logits.frames()).expect("small instance");
        if beam.score.is_finite() && oracle.best.score.is_finite() {
            report.max_score_divergence = report.max_score_divergence.max((beam.score - oracle.best.score).abs());
        }
        if !same_transcript(&beam, &oracle.best, 1e-9) {
            report.mismatches += 1;
        }
    }
    report
}
