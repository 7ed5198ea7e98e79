//! Synthetic mixed-speech corpora.
//!
//! Sentences are walks over sparse random Markov chains: one over the
//! general lexicon and one over each jargon lexicon's own terms (words not in
//! the general lexicon). Mixed utterances interleave the two walks. Logits
//! follow a block model: every character holds `frames_per_char` frames with
//! `1 - noise_level` on its column and the rest spread evenly over the other
//! columns.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_logits, write_manifest, Utterance};
use crate::decoder::LogitsMatrix;
use crate::error::CorpusError;
use crate::lexicon::ColoredAlphabet;
use crate::ngram::{NGramModel, NgramEntry};

const DOMAIN_SEED: u64 = 0x00C0_10DE;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSpec {
    pub general_sentences: usize,
    pub jargon_insertion_rate: f64,
    pub noise_level: f64,
    pub frames_per_char: usize,
    pub rng_seed: u64,
}

impl Default for SynthesisSpec {
    fn default() -> Self {
        SynthesisSpec {
            general_sentences: 200,
            jargon_insertion_rate: 0.3,
            noise_level: 0.25,
            frames_per_char: 1,
            rng_seed: 7,
        }
    }
}

impl SynthesisSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: String| Err(CorpusError::InvalidSynthesis(m));
        if !(0.0..=1.0).contains(&self.jargon_insertion_rate) {
            return bad(format!(
                "jargon_insertion_rate {} not in [0, 1]",
                self.jargon_insertion_rate
            ));
        }
        if !(0.0..1.0).contains(&self.noise_level) {
            return bad(format!("noise_level {} not in [0, 1)", self.noise_level));
        }
        if self.frames_per_char == 0 {
            return bad("frames_per_char must be at least 1".into());
        }
        Ok(())
    }
}

/// Sparse first-order chain over a word list.
#[derive(Clone, Debug)]
struct Chain {
    words: Vec<String>,
    start: WeightedIndex<f64>,
    successors: Vec<[usize; 3]>,
}

const SUCCESSOR_WEIGHTS: [f64; 3] = [0.5, 0.3, 0.2];
const RESTART: f64 = 0.3;

impl Chain {
    fn new(words: Vec<String>, rng: &mut ChaCha8Rng) -> Self {
        let n = words.len();
        let mut ranks: Vec<usize> = (0..n).collect();
        ranks.shuffle(rng);
        let weights: Vec<f64> = ranks.iter().map(|&r| 1.0 / (r + 1) as f64).collect();
        let successors = (0..n)
            .map(|_| [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)])
            .collect();
        Chain {
            words,
            start: WeightedIndex::new(weights).expect("nonempty chain"),
            successors,
        }
    }

    fn step(&self, prev: Option<usize>, rng: &mut ChaCha8Rng) -> usize {
        match prev {
            Some(p) if rng.gen::<f64>() >= RESTART => {
                let k = WeightedIndex::new(SUCCESSOR_WEIGHTS)
                    .expect("fixed weights")
                    .sample(rng);
                self.successors[p][k]
            }
            _ => self.start.sample(rng),
        }
    }
}

/// Word generators for a general lexicon plus jargon lexicons.
#[derive(Clone, Debug)]
pub struct SyntheticDomain {
    general: Chain,
    /// Per jargon color: chain over its terms, plus the general words the
    /// lexicon shares with the general one.
    jargon: Vec<(Chain, Vec<String>)>,
}

pub const SENTENCE_LEN: std::ops::RangeInclusive<usize> = 4..=9;

impl SyntheticDomain {
    /// `lexicons[0]` is general, the rest are jargon lexicons. The chains
    /// depend only on the word lists, never on a corpus seed.
    pub fn new(lexicons: &[Vec<String>]) -> Result<Self, CorpusError> {
        let Some((general, jargons)) = lexicons.split_first() else {
            return Err(CorpusError::EmptyLexicon("general".into()));
        };
        if general.is_empty() {
            return Err(CorpusError::EmptyLexicon("general".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(DOMAIN_SEED);
        let general_set: HashSet<&str> = general.iter().map(String::as_str).collect();
        let general_chain = Chain::new(general.clone(), &mut rng);
        let mut jargon = Vec::new();
        for (i, lex) in jargons.iter().enumerate() {
            let (shared, terms): (Vec<String>, Vec<String>) =
                lex.iter().cloned().partition(|w| general_set.contains(w.as_str()));
            if terms.is_empty() {
                return Err(CorpusError::EmptyLexicon(format!(
                    "jargon lexicon {} has no terms",
                    i + 1
                )));
            }
            jargon.push((Chain::new(terms, &mut rng), shared));
        }
        Ok(SyntheticDomain {
            general: general_chain,
            jargon,
        })
    }

    pub fn num_jargon(&self) -> usize {
        self.jargon.len()
    }

    pub fn is_term(&self, word: &str) -> bool {
        self.jargon.iter().any(|(c, _)| c.words.iter().any(|w| w == word))
    }

    /// General-only training sentences.
    pub fn general_text(&self, sentences: usize, seed: u64) -> Vec<Vec<String>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..sentences)
            .map(|_| {
                let n = rng.gen_range(SENTENCE_LEN);
                let mut prev = None;
                (0..n)
                    .map(|_| {
                        let i = self.general.step(prev, &mut rng);
                        prev = Some(i);
                        self.general.words[i].clone()
                    })
                    .collect()
            })
            .collect()
    }

    /// Training sentences for jargon lexicon `index` (0-based among jargon
    /// lexicons): half terms from its chain, half general words from the
    /// general walk, restricted to those the lexicon shares.
    pub fn jargon_text(&self, index: usize, sentences: usize, seed: u64) -> Vec<Vec<String>> {
        let (chain, shared) = &self.jargon[index];
        let shared: HashSet<&str> = shared.iter().map(String::as_str).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..sentences)
            .map(|_| {
                let n = rng.gen_range(SENTENCE_LEN);
                let (mut term_prev, mut general_prev) = (None, None);
                let mut words = Vec::with_capacity(n);
                while words.len() < n {
                    if !shared.is_empty() && rng.gen_bool(0.5) {
                        let i = self.general.step(general_prev, &mut rng);
                        general_prev = Some(i);
                        let w = &self.general.words[i];
                        if shared.contains(w.as_str()) {
                            words.push(w.clone());
                        }
                    } else {
                        let i = chain.step(term_prev, &mut rng);
                        term_prev = Some(i);
                        words.push(chain.words[i].clone());
                    }
                }
                words
            })
            .collect()
    }

    /// One mixed sentence: each slot is a jargon term with probability
    /// `rate`, otherwise the next word of the general walk. Returns words and
    /// the jargon mask.
    pub fn mixed_sentence(&self, rate: f64, rng: &mut ChaCha8Rng) -> (Vec<String>, Vec<bool>) {
        let n = rng.gen_range(SENTENCE_LEN);
        let mut general_prev = None;
        let mut jargon_prev: Vec<Option<usize>> = vec![None; self.jargon.len()];
        let mut words = Vec::with_capacity(n);
        let mut mask = Vec::with_capacity(n);
        for _ in 0..n {
            if !self.jargon.is_empty() && rng.gen_bool(rate) {
                let c = rng.gen_range(0..self.jargon.len());
                let chain = &self.jargon[c].0;
                let i = chain.step(jargon_prev[c], rng);
                jargon_prev[c] = Some(i);
                words.push(chain.words[i].clone());
                mask.push(true);
            } else {
                let i = self.general.step(general_prev, rng);
                general_prev = Some(i);
                words.push(self.general.words[i].clone());
                mask.push(false);
            }
        }
        (words, mask)
    }
}

/// Block-model logits for `text`. Repeated adjacent characters get a blank
/// block between them.
pub fn synth_logits(
    alphabet: &ColoredAlphabet,
    text: &str,
    noise_level: f64,
    frames_per_char: usize,
) -> Result<LogitsMatrix, CorpusError> {
    let columns = alphabet.len() + 1;
    let blank = alphabet.blank_index();
    let mut seq: Vec<usize> = Vec::new();
    for ch in text.chars() {
        let col = alphabet.char_column(ch)?;
        if seq.last() == Some(&col) {
            seq.push(blank);
        }
        seq.push(col);
    }
    let off = if columns > 1 {
        noise_level / (columns - 1) as f64
    } else {
        0.0
    };
    let (on_ln, off_ln) = ((1.0 - noise_level).ln(), off.ln());
    let frames = seq.len() * frames_per_char;
    let mut values = Vec::with_capacity(frames * columns);
    for &col in &seq {
        for _ in 0..frames_per_char {
            values.extend((0..columns).map(|c| if c == col { on_ln } else { off_ln }));
        }
    }
    Ok(LogitsMatrix::new(frames, columns, values)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthUtterance {
    pub id: String,
    pub words: Vec<String>,
    pub jargon_mask: Vec<bool>,
    pub logits: LogitsMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    pub utterances: Vec<SynthUtterance>,
}

impl SyntheticCorpus {
    pub fn jargon_fraction(&self) -> f64 {
        let (j, n) = self.utterances.iter().fold((0, 0), |(j, n), u| {
            (j + u.jargon_mask.iter().filter(|&&m| m).count(), n + u.words.len())
        });
        if n == 0 {
            0.0
        } else {
            j as f64 / n as f64
        }
    }

    /// Writes `manifest.jsonl` and `logits/<id>.ctcl` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<Utterance>, CorpusError> {
        let logits_dir = dir.join("logits");
        fs::create_dir_all(&logits_dir).map_err(|e| CorpusError::io(&logits_dir, e))?;
        let mut utts = Vec::with_capacity(self.utterances.len());
        for u in &self.utterances {
            let path = logits_dir.join(format!("{}.ctcl", u.id));
            write_logits(&path, &u.logits)?;
            utts.push(Utterance {
                id: u.id.clone(),
                logits_path: path,
                reference: u.words.clone(),
                jargon_mask: Some(u.jargon_mask.clone()),
            });
        }
        write_manifest(&dir.join("manifest.jsonl"), &utts)?;
        Ok(utts)
    }
}

/// Samples `spec.general_sentences` mixed sentences and renders their logits.
pub fn synthesize_corpus(
    spec: &SynthesisSpec,
    lexicons: &[Vec<String>],
    alphabet: &ColoredAlphabet,
) -> Result<SyntheticCorpus, CorpusError> {
    spec.validate()?;
    let domain = SyntheticDomain::new(lexicons)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let utterances = (0..spec.general_sentences)
        .map(|i| {
            let (words, jargon_mask) = domain.mixed_sentence(spec.jargon_insertion_rate, &mut rng);
            let logits = synth_logits(alphabet, &words.join(" "), spec.noise_level, spec.frames_per_char)?;
            Ok(SynthUtterance {
                id: format!("utt{i:05}"),
                words,
                jargon_mask,
                logits,
            })
        })
        .collect::<Result<_, CorpusError>>()?;
    Ok(SyntheticCorpus { utterances })
}

/// Backoff n-gram model with interpolated absolute discounting. Listed
/// probabilities are the interpolated ones, so each context's backoff weight
/// is exactly its leftover mass `D * distinct_followers / count`.
pub fn estimate_backoff_lm(sentences: &[Vec<String>], order: usize, discount: f64) -> Result<NGramModel, CorpusError> {
    assert!(order >= 1 && (0.0..1.0).contains(&discount));
    let mut counts: Vec<HashMap<Vec<&str>, usize>> = vec![HashMap::new(); order];
    for s in sentences {
        for n in 1..=order {
            for gram in s.windows(n) {
                *counts[n - 1]
                    .entry(gram.iter().map(String::as_str).collect())
                    .or_default() += 1;
            }
        }
    }
    let total: usize = counts[0].values().sum();
    if total == 0 {
        return Err(CorpusError::EmptyLexicon("training text".into()));
    }
    // context -> (count as a context, distinct followers)
    let mut ctx: Vec<HashMap<Vec<&str>, (usize, usize)>> = vec![HashMap::new(); order];
    for n in 2..=order {
        for (gram, &c) in &counts[n - 1] {
            let e = ctx[n - 2].entry(gram[..n - 1].to_vec()).or_default();
            e.0 += c;
            e.1 += 1;
        }
    }
    let mut probs: Vec<HashMap<Vec<&str>, f64>> = vec![HashMap::new(); order];
    for (gram, &c) in &counts[0] {
        probs[0].insert(gram.clone(), c as f64 / total as f64);
    }
    let gamma = |n: usize, h: &[&str]| -> Option<f64> {
        ctx.get(n.wrapping_sub(1))
            .and_then(|m| m.get(h))
            .map(|&(c, d)| discount * d as f64 / c as f64)
    };
    for n in 2..=order {
        let mut level = HashMap::new();
        for (gram, &c) in &counts[n - 1] {
            let h = &gram[..n - 1];
            let &(hc, _) = &ctx[n - 2][h];
            let lower = backoff_prob(&probs, &ctx, discount, &gram[1..]);
            let p = (c as f64 - discount) / hc as f64 + gamma(n - 1, h).expect("context counted") * lower;
            level.insert(gram.clone(), p);
        }
        probs[n - 1] = level;
    }
    let mut entries: Vec<(Vec<String>, NgramEntry)> = Vec::new();
    for (n, level) in probs.iter().enumerate() {
        let mut grams: Vec<_> = level.iter().collect();
        grams.sort_by(|a, b| a.0.cmp(b.0));
        for (gram, &p) in grams {
            let backoff_log10 = (n + 1 < order).then(|| gamma(n + 1, gram).map_or(0.0, f64::log10));
            entries.push((
                gram.iter().map(|w| w.to_string()).collect(),
                NgramEntry {
                    log10_prob: p.log10().min(0.0),
                    backoff_log10,
                },
            ));
        }
    }
    Ok(NGramModel::from_ngrams(order, entries)?)
}

fn backoff_prob(
    probs: &[HashMap<Vec<&str>, f64>],
    ctx: &[HashMap<Vec<&str>, (usize, usize)>],
    discount: f64,
    gram: &[&str],
) -> f64 {
    let n = gram.len();
    if let Some(&p) = probs[n - 1].get(gram) {
        return p;
    }
    if n == 1 {
        return 0.0;
    }
    let h = &gram[..n - 1];
    let bow = ctx[n - 2].get(h).map_or(1.0, |&(c, d)| discount * d as f64 / c as f64);
    bow * backoff_prob(probs, ctx, discount, &gram[1..])
}

/// Built-in English lexicons: a general list and a medical jargon list.
/// The jargon list is its terms plus the whole general list, as a lexicon
/// read off in-domain text would be. Many terms sit one edit away from a
/// general word.
pub fn builtin_lexicons() -> [Vec<String>; 2] {
    let own = |s: &str| s.split_whitespace().map(str::to_string).collect::<Vec<_>>();
    let general = own(
        "the a he she they we it his her was is has had will can not no and but or with for to of in on at \
         after before then now today night morning day week time home work car house water coffee dinner \
         friend family said went took take need needs felt feel good bad better new old long little very \
         some more less back down up over again still just also about from this that what when \
         does nose cost vain humor minus future lesson rental station spent comic come got out plague bonus \
         track cash rush word warm craft draft hunt slot plot lemur",
    );
    let mut jargon = own(
        "dose cyst vein tumor sinus suture lesion renal statin stent colic coma gout plaque femur bolus \
         tract rash ward graft shunt clot clozaril lithium insulin biopsy sepsis edema apnea aorta \
         daily blood pain test level",
    );
    jargon.extend(general.iter().cloned());
    [general, jargon]
}
