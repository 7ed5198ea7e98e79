mod common;

use std::collections::HashMap;
use std::sync::Arc;

use colordecode::decoder::{merge_duplicate_prefixes, Beam};
use colordecode::fusion::ScorerState;
use colordecode::logprob::log10_sum;
use colordecode::oracle::{
    ctc_path_sum, ctc_path_sum_split, exhaustive_decode, reference_beam_search, ReferenceSearch,
};
use colordecode::synth::synth_logits;
use colordecode::{
    decode, decode_with_stats, ColorId, ColoredAlphabet, ColoredLexicon, DecoderConfig, FusionKind, Lexicon,
    LogitsMatrix, NGramModel, Scorer, ScorerConfig,
};
use common::*;
use proptest::prelude::*;
use rand::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn scorer(kind: FusionKind, models: &[Arc<NGramModel>], config: ScorerConfig) -> Scorer {
    Scorer::new(kind, models, config, None).unwrap()
}

fn lm_config(alpha: f64, beta: f64) -> ScorerConfig {
    ScorerConfig {
        alpha,
        beta,
        ..ScorerConfig::default()
    }
}

struct Small {
    logits: LogitsMatrix,
    chars: Vec<char>,
    words: Vec<Vec<String>>,
    models: Vec<Arc<NGramModel>>,
}

fn small_instance(rng: &mut ChaCha8Rng, colors: usize) -> Small {
    let k = rng.gen_range(1..=2);
    let frames = rng.gen_range(1..=4);
    let chars = base_chars(k);
    let words: Vec<Vec<String>> = (0..colors)
        .map(|_| {
            let n = rng.gen_range(1..=3);
            random_words(rng, &letters(k), n, 2)
        })
        .collect();
    let models = words.iter().map(|ws| Arc::new(random_lm(rng, ws, 2))).collect();
    Small {
        logits: random_rows(rng, frames, chars.len() + 1),
        chars,
        words,
        models,
    }
}

#[test]
fn saturated_beam_search_matches_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for i in 0..100 {
        let inst = small_instance(&mut rng, 2);
        let sc = scorer(FusionKind::Coloring, &inst.models, lm_config(1.0, 0.0));
        let lex = ColoredLexicon::from_word_lists(inst.chars.clone(), ' ', &inst.words, false).unwrap();
        let beam = decode(&inst.logits, &DecoderConfig::new(&sc, &lex, usize::MAX)).unwrap();
        let oracle = exhaustive_decode(&inst.logits, &sc, &lex, inst.logits.frames()).unwrap();
        assert_eq!(beam.words, oracle.best.words, "instance {i}");
        assert!((beam.score - oracle.best.score).abs() <= 1e-9, "instance {i}");
    }
}

/// Every label sequence over `k` symbols of length at most `max_len`.
fn all_labelings(k: u16, max_len: usize) -> Vec<Vec<u16>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|l: &Vec<u16>| {
                (0..k).map(move |c| {
                    let mut n = l.clone();
                    n.push(c);
                    n
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

#[test]
fn ctc_mass_over_all_labelings_is_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..50 {
        let k = rng.gen_range(1..=3);
        let frames = rng.gen_range(1..=4);
        let logits = random_rows(&mut rng, frames, k + 1);
        let masses: Vec<f64> = all_labelings(k as u16, frames)
            .iter()
            .map(|l| ctc_path_sum(&logits, l).unwrap())
            .collect();
        let total: f64 = masses.iter().map(|m| 10f64.powf(*m)).sum();
        assert!((total - 1.0).abs() <= 1e-9, "total {total}");
    }
}

fn collapse(path: &[u16], blank: u16) -> Vec<u16> {
    let mut out: Vec<u16> = Vec::new();
    let mut prev = None;
    for &s in path {
        if s != blank && Some(s) != prev {
            out.push(s);
        }
        prev = Some(s);
    }
    out
}

#[test]
fn path_sum_matches_explicit_path_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..10 {
        let logits = random_rows(&mut rng, 3, 3);
        let mut by_label: HashMap<Vec<u16>, f64> = HashMap::new();
        for path in all_labelings(3, 3).into_iter().filter(|p| p.len() == 3) {
            let lp: f64 = path.iter().enumerate().map(|(t, &c)| logits.row(t)[c as usize]).sum();
            *by_label.entry(collapse(&path, 2)).or_default() += lp.exp();
        }
        for labeling in all_labelings(2, 3) {
            let expect = by_label.get(&labeling).copied().unwrap_or(0.0);
            let got = 10f64.powf(ctc_path_sum(&logits, &labeling).unwrap());
            assert!((got - expect).abs() <= 1e-12, "{labeling:?}");
            let (b, nb) = ctc_path_sum_split(&logits, &labeling).unwrap();
            assert!((10f64.powf(b) + 10f64.powf(nb) - got).abs() <= 1e-12);
        }
    }
}

#[test]
fn single_color_matches_reference_beam_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for i in 0..100 {
        let k = rng.gen_range(2..=4);
        let chars = base_chars(k);
        let words = random_words(&mut rng, &letters(k), 5, 3);
        let lm = random_lm(&mut rng, &words, 2);
        let frames = rng.gen_range(2..=8);
        let logits = random_rows(&mut rng, frames, chars.len() + 1);
        let width = rng.gen_range(1..=6);
        let (alpha, beta) = (rng.gen_range(0.0..1.5), rng.gen_range(0.0..1.0));
        let sc = scorer(FusionKind::General, &[Arc::new(lm.clone())], lm_config(alpha, beta));
        let lex = ColoredLexicon::from_word_lists(chars.clone(), ' ', std::slice::from_ref(&words), false).unwrap();
        let ours = decode(&logits, &DecoderConfig::new(&sc, &lex, width)).unwrap();
        let (text, score) = reference_beam_search(
            &logits,
            &ReferenceSearch {
                alphabet: &chars,
                separator: ' ',
                words: &words,
                lm: &lm,
                alpha,
                beta,
                unk_penalty: -10.0,
                beam_width: width,
            },
        );
        assert_eq!(ours.text(), text, "instance {i}");
        assert!(
            (ours.score - score).abs() <= 1e-9,
            "instance {i}: {} vs {score}",
            ours.score
        );
    }
}

#[test]
fn color_count_leaves_beam_counts_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let chars = base_chars(8);
    let vocab = random_words(&mut rng, &letters(8), 40, 4);
    let first = |w: &String| (w.as_bytes()[0] - b'a') as usize % 4;
    let parts: Vec<Vec<String>> = (0..4)
        .map(|c| vocab.iter().filter(|w| first(w) == c).cloned().collect())
        .collect();
    let one = ColoredLexicon::from_word_lists(chars.clone(), ' ', std::slice::from_ref(&vocab), false).unwrap();
    let four = ColoredLexicon::from_word_lists(chars.clone(), ' ', &parts, false).unwrap();
    for alpha in [0.0, 1.0] {
        let one_sc = scorer(FusionKind::Coloring, &[uniform_unigram(&vocab)], lm_config(alpha, 0.0));
        let four_models: Vec<_> = parts.iter().map(|p| uniform_unigram(p)).collect();
        let four_sc = scorer(FusionKind::Coloring, &four_models, lm_config(alpha, 0.0));
        for _ in 0..20 {
            let logits = random_rows(&mut rng, 12, chars.len() + 1);
            let (_, a) = decode_with_stats(&logits, &DecoderConfig::new(&one_sc, &one, 8)).unwrap();
            let (_, b) = decode_with_stats(&logits, &DecoderConfig::new(&four_sc, &four, 8)).unwrap();
            assert_eq!(a.expanded_per_frame, b.expanded_per_frame);
            assert!(a.max_successors_per_beam <= chars.len() + 1);
            assert!(b.max_successors_per_beam <= chars.len() + 1);
        }
    }
}

#[test]
fn output_words_come_from_their_color_lexicon() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    for _ in 0..50 {
        let chars = base_chars(4);
        let words: Vec<Vec<String>> = (0..3).map(|_| random_words(&mut rng, &letters(4), 6, 3)).collect();
        let models: Vec<_> = words.iter().map(|w| uniform_unigram(w)).collect();
        let sc = scorer(FusionKind::Coloring, &models, lm_config(1.0, 2.0));
        let lex = ColoredLexicon::from_word_lists(chars.clone(), ' ', &words, false).unwrap();
        let logits = random_rows(&mut rng, 10, chars.len() + 1);
        let t = decode(&logits, &DecoderConfig::new(&sc, &lex, 8)).unwrap();
        assert_eq!(t.colors().len(), t.words.len());
        for w in &t.words {
            assert!(words[w.color.index()].contains(&w.word), "{w:?}");
        }
    }
}

#[test]
fn mixed_speech_fixture_colors_the_jargon_word() {
    let general: Vec<String> = ["he", "has", "on"].iter().map(|s| s.to_string()).collect();
    let jargon = vec!["clozaril".to_string()];
    let alphabet = ColoredAlphabet::english(2);
    let logits = synth_logits(&alphabet, "he has clozaril", 0.1, 1).unwrap();
    let models = vec![uniform_unigram(&general), uniform_unigram(&jargon)];
    let sc = scorer(FusionKind::Coloring, &models, ScorerConfig::default());
    let lex = ColoredLexicon::from_word_lists(alphabet.base_chars().to_vec(), ' ', &[general, jargon], false).unwrap();
    let t = decode(&logits, &DecoderConfig::new(&sc, &lex, 16)).unwrap();
    assert_eq!(t.text(), "he has clozaril");
    assert_eq!(t.colors(), vec![ColorId(0), ColorId(0), ColorId(1)]);
    let short = synth_logits(&alphabet, "he has", 0.1, 1).unwrap();
    let oracle = exhaustive_decode(&short, &sc, &lex, short.frames()).unwrap();
    let beam = decode(&short, &DecoderConfig::new(&sc, &lex, 16)).unwrap();
    assert_eq!(oracle.best.text(), "he has");
    assert_eq!(beam.words, oracle.best.words);
    assert!((beam.score - oracle.best.score).abs() <= 1e-9);
}

#[test]
fn uniform_three_frames_aggregate_every_alignment() {
    let logits = LogitsMatrix::from_prob_rows(&vec![vec![0.0, 0.5, 0.5]; 3]).unwrap();
    let lex = ColoredLexicon::from_word_lists(vec![' ', 'a'], ' ', &[vec!["a"]], false).unwrap();
    let sc = scorer(
        FusionKind::Coloring,
        &[uniform_unigram(&["a".to_string()])],
        lm_config(0.0, 0.0),
    );
    let t = decode(&logits, &DecoderConfig::new(&sc, &lex, 16)).unwrap();
    let oracle = exhaustive_decode(&logits, &sc, &lex, 3).unwrap();
    assert_eq!(t.text(), "a");
    assert_eq!(oracle.best.words, t.words);
    assert!((t.score - (6.0f64 / 8.0).log10()).abs() <= 1e-12);
    assert!((t.score - oracle.best.score).abs() <= 1e-12);
}

#[test]
fn merging_duplicates_conserves_mass() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    for _ in 0..100 {
        let beams: Vec<Beam> = (0..rng.gen_range(1..30))
            .map(|_| Beam {
                prefix: rng.gen_range(0..6),
                p_blank: rng.gen_range(-5.0..0.0),
                p_nonblank: rng.gen_range(-5.0..0.0),
            })
            .collect();
        let before = log10_sum(beams.iter().map(Beam::p_total));
        let merged = merge_duplicate_prefixes(beams.clone());
        let after = log10_sum(merged.iter().map(Beam::p_total));
        assert!((before - after).abs() <= 1e-12);
        let mut ids: Vec<_> = merged.iter().map(|b| b.prefix).collect();
        ids.dedup();
        assert_eq!(ids.len(), merged.len());
    }
}

fn union_lexicon(chars: &[char], words: &[Vec<String>]) -> (Vec<String>, ColoredLexicon) {
    let mut all: Vec<String> = words.concat();
    all.sort();
    all.dedup();
    let lex = ColoredLexicon::from_word_lists(chars.to_vec(), ' ', &[all.clone()], false).unwrap();
    (all, lex)
}

#[test]
fn interpolation_endpoints_reproduce_single_model_decodes() {
    let mut rng = ChaCha8Rng::seed_from_u64(28);
    for _ in 0..30 {
        let chars = base_chars(3);
        let words: Vec<Vec<String>> = (0..2).map(|_| random_words(&mut rng, &letters(3), 5, 3)).collect();
        let models: Vec<_> = words.iter().map(|w| Arc::new(random_lm(&mut rng, w, 2))).collect();
        let (_, lex) = union_lexicon(&chars, &words);
        let logits = random_rows(&mut rng, 8, chars.len() + 1);
        let run = |kind, lambda| {
            let cfg = ScorerConfig {
                lambda,
                ..lm_config(1.0, 0.5)
            };
            decode(&logits, &DecoderConfig::new(&scorer(kind, &models, cfg), &lex, 8)).unwrap()
        };
        let general = run(FusionKind::General, 0.5);
        let jargon = run(FusionKind::Jargon, 0.5);
        for kind in [FusionKind::Linear, FusionKind::LogLinear] {
            assert_eq!(run(kind, 0.0), general);
            assert_eq!(run(kind, 1.0), jargon);
        }
    }
}

#[test]
fn bayes_with_equal_histories_is_even_linear_interpolation() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let words: Vec<String> = random_words(&mut rng, &letters(5), 12, 3);
    let lm = Arc::new(random_lm(&mut rng, &words, 3));
    let models = vec![lm.clone(), lm];
    let bayes = scorer(FusionKind::Bayes, &models, lm_config(1.0, 0.0));
    let linear = scorer(
        FusionKind::Linear,
        &models,
        ScorerConfig {
            lambda: 0.5,
            ..lm_config(1.0, 0.0)
        },
    );
    for _ in 0..100 {
        let (mut sb, mut sl): (ScorerState, ScorerState) = (bayes.initial_state(), linear.initial_state());
        for _ in 0..6 {
            let w = rng.gen_bool(0.9).then(|| words.choose(&mut rng).unwrap().as_str());
            let (a, nb) = bayes.word_logprob(&sb, w, ColorId(0));
            let (b, nl) = linear.word_logprob(&sl, w, ColorId(0));
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            (sb, sl) = (nb, nl);
        }
    }
}

#[test]
fn single_color_coloring_equals_general_shallow_fusion() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let alphabet = ColoredAlphabet::english(1);
    let words: Vec<String> = ["cat", "cot", "coat", "at", "act", "tact", "taco"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let model = Arc::new(random_lm(&mut rng, &words, 2));
    let lex = ColoredLexicon::from_word_lists(alphabet.base_chars().to_vec(), ' ', std::slice::from_ref(&words), false)
        .unwrap();
    let cfg = lm_config(0.8, 0.3);
    let coloring = scorer(FusionKind::Coloring, std::slice::from_ref(&model), cfg.clone());
    let general = scorer(FusionKind::General, &[model], cfg);
    for _ in 0..50 {
        let n = rng.gen_range(1..=4);
        let text: Vec<&str> = (0..n).map(|_| words.choose(&mut rng).unwrap().as_str()).collect();
        let logits = synth_logits(&alphabet, &text.join(" "), 0.6, 1).unwrap();
        let a = decode(&logits, &DecoderConfig::new(&coloring, &lex, 8)).unwrap();
        let b = decode(&logits, &DecoderConfig::new(&general, &lex, 8)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn uniform_color_prior_does_not_change_winner_within_a_word_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..30 {
        let inst = small_instance(&mut rng, 2);
        let sc = scorer(FusionKind::Coloring, &inst.models, lm_config(1.0, 0.0));
        let lex = ColoredLexicon::from_word_lists(inst.chars.clone(), ' ', &inst.words, false).unwrap();
        let oracle = exhaustive_decode(&inst.logits, &sc, &lex, inst.logits.frames()).unwrap();
        let sep = lex.alphabet().separator_column() as u16;
        let word_count = |l: &[colordecode::ColoredChar]| {
            let cols: Vec<u16> = l.iter().map(|c| c.column).collect();
            cols.split(|&c| c == sep).filter(|w| !w.is_empty()).count()
        };
        let mut best: HashMap<usize, (f64, f64, &[colordecode::ColoredChar])> = HashMap::new();
        for (l, s) in &oracle.all_scores {
            let n = word_count(l);
            // Replace the 1/2 prior per word with an arbitrary constant.
            let shifted = s - n as f64 * 0.5f64.log10() + n as f64 * 0.9f64.log10();
            let e = best.entry(n).or_insert((*s, shifted, l));
            if *s > e.0 {
                assert!(shifted > e.1 - 1e-9);
                *e = (*s, shifted, l);
            } else if *s < e.0 {
                assert!(shifted < e.1 + 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_width_is_bounded_by_the_oracle_and_saturation_attains_it(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chars = base_chars(3);
        let words: Vec<Vec<String>> = (0..2).map(|_| random_words(&mut rng, &letters(3), 4, 3)).collect();
        let models: Vec<_> = words.iter().map(|w| Arc::new(random_lm(&mut rng, w, 2))).collect();
        let sc = scorer(FusionKind::Coloring, &models, lm_config(1.0, 0.0));
        let lex = ColoredLexicon::from_word_lists(chars.clone(), ' ', &words, false).unwrap();
        let logits = random_rows(&mut rng, 6, chars.len() + 1);
        let oracle = exhaustive_decode(&logits, &sc, &lex, 6).unwrap();
        for w in [1, 2, 4, 8, 16, 64] {
            let t = decode(&logits, &DecoderConfig::new(&sc, &lex, w)).unwrap();
            prop_assert!(t.score <= oracle.best.score + 1e-9, "width {w}");
        }
        let t = decode(&logits, &DecoderConfig::new(&sc, &lex, usize::MAX)).unwrap();
        prop_assert!((t.score - oracle.best.score).abs() <= 1e-9);
    }

    #[test]
    fn open_lexicon_decode_is_a_valid_labeling(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alphabet = ColoredAlphabet::new(base_chars(2), 1, ' ').unwrap();
        let lex = ColoredLexicon::new(alphabet, vec![Lexicon::Open], false).unwrap();
        let sc = scorer(FusionKind::Coloring, &[uniform_unigram(&["a".to_string()])], lm_config(0.0, 0.0));
        let logits = random_rows(&mut rng, 4, 4);
        let t = decode(&logits, &DecoderConfig::new(&sc, &lex, usize::MAX)).unwrap();
        prop_assert!(t.score <= 0.0);
    }
}
