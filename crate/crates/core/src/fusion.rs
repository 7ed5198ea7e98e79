//! Text scoring: the coloring scorer and the interpolation baselines.
//!
//! Every strategy is exposed through [`Scorer`], which the decoder calls once
//! per completed word. Scores are log10 and already weighted:
//! `alpha * log10 P + beta`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use smallvec::{smallvec, SmallVec};

use crate::error::ScorerError;
use crate::lexicon::{ColorId, ColoredLexicon, Expansion, WordCursor, WordEnd};
use crate::logprob::{log10_add, prob_to_log10, LOG10_ZERO};
use crate::ngram::{LmState, NGramModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionKind {
    General,
    Jargon,
    Linear,
    #[serde(rename = "loglinear")]
    LogLinear,
    Bins,
    Bayes,
    Coloring,
}

impl FusionKind {
    pub const ALL: [FusionKind; 7] = [
        FusionKind::General,
        FusionKind::Jargon,
        FusionKind::Linear,
        FusionKind::LogLinear,
        FusionKind::Bins,
        FusionKind::Bayes,
        FusionKind::Coloring,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FusionKind::General => "general",
            FusionKind::Jargon => "jargon",
            FusionKind::Linear => "linear",
            FusionKind::LogLinear => "loglinear",
            FusionKind::Bins => "bins",
            FusionKind::Bayes => "bayes",
            FusionKind::Coloring => "coloring",
        }
    }

    /// Interpolation weight matters for this kind.
    pub fn uses_lambda(self) -> bool {
        matches!(self, FusionKind::Linear | FusionKind::LogLinear)
    }

    /// Decodes with one lexicon per color rather than a single merged one.
    pub fn is_colored(self) -> bool {
        self == FusionKind::Coloring
    }

    fn models_needed(self) -> usize {
        match self {
            FusionKind::General | FusionKind::Coloring => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for FusionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FusionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FusionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown fusion kind `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScorerConfig {
    /// Language model weight.
    pub alpha: f64,
    /// Per-word insertion bonus.
    pub beta: f64,
    /// log10 score of an out-of-vocabulary word, per language model. The last
    /// value repeats for models beyond the list.
    pub unknown_word_penalty: Vec<f64>,
    /// log10 cost per character spelled outside the lexicon; `None` forbids
    /// leaving the lexicon.
    pub unknown_subword_penalty: Option<f64>,
    pub lambda: f64,
    /// Color prior; uniform when `None`.
    pub color_prior: Option<Vec<f64>>,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            alpha: 1.0,
            beta: 0.0,
            unknown_word_penalty: vec![-10.0],
            unknown_subword_penalty: None,
            lambda: 0.5,
            color_prior: None,
        }
    }
}

impl ScorerConfig {
    pub fn unk_penalty(&self, lm: usize) -> f64 {
        let p = &self.unknown_word_penalty;
        p.get(lm).or(p.last()).copied().unwrap_or(-10.0)
    }

    pub fn validate(&self, num_colors: usize) -> Result<(), ScorerError> {
        let bad = |m: String| Err(ScorerError::InvalidConfig(m));
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return bad("alpha and beta must be finite".into());
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda {} outside [0, 1]", self.lambda));
        }
        if self.unknown_word_penalty.is_empty() || self.unknown_word_penalty.iter().any(|p| p.is_nan()) {
            return bad("unknown word penalty missing".into());
        }
        if self.unknown_subword_penalty.is_some_and(f64::is_nan) {
            return bad("unknown sub-word penalty is NaN".into());
        }
        if let Some(prior) = &self.color_prior {
            if prior.len() != num_colors {
                return bad(format!(
                    "color prior has {} entries for {num_colors} colors",
                    prior.len()
                ));
            }
            if prior.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return bad("color prior entries must lie in [0, 1]".into());
            }
            let sum: f64 = prior.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return bad(format!("color prior sums to {sum}"));
            }
        }
        Ok(())
    }
}

/// `lambda * p_jargon + (1 - lambda) * p_general`.
pub fn interp_linear(p_general: f64, p_jargon: f64, lambda: f64) -> f64 {
    lambda * p_jargon + (1.0 - lambda) * p_general
}

/// `p_jargon^lambda * p_general^(1 - lambda)`, evaluated in the log domain.
pub fn interp_loglinear(p_general: f64, p_jargon: f64, lambda: f64) -> f64 {
    10f64.powf(loglinear_log10(
        prob_to_log10(p_general),
        prob_to_log10(p_jargon),
        lambda,
    ))
}

/// Linear interpolation of two log10 probabilities. Exact at the endpoints.
pub fn linear_log10(general: f64, jargon: f64, lambda: f64) -> f64 {
    log10_add(prob_to_log10(1.0 - lambda) + general, prob_to_log10(lambda) + jargon)
}

/// Log-linear interpolation of two log10 probabilities. Exact at the endpoints.
pub fn loglinear_log10(general: f64, jargon: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        general
    } else if lambda == 1.0 {
        jargon
    } else {
        lambda * jargon + (1.0 - lambda) * general
    }
}

/// Posterior log10 weights `(w_general, w_jargon)` from prior and history
/// likelihoods. Falls back to the prior when both histories are impossible.
pub fn bayes_weights_log10(history_general: f64, history_jargon: f64, prior: (f64, f64)) -> (f64, f64) {
    let mut g = prob_to_log10(prior.0) + history_general;
    let mut j = prob_to_log10(prior.1) + history_jargon;
    if g == LOG10_ZERO && j == LOG10_ZERO {
        g = prob_to_log10(prior.0);
        j = prob_to_log10(prior.1);
    }
    let norm = log10_add(g, j);
    (g - norm, j - norm)
}

/// Bayes dynamic interpolation on linear probabilities.
pub fn interp_bayes(
    p_general_history: f64,
    p_jargon_history: f64,
    p_general_next: f64,
    p_jargon_next: f64,
    prior: (f64, f64),
) -> f64 {
    let (wg, wj) = bayes_weights_log10(prob_to_log10(p_general_history), prob_to_log10(p_jargon_history), prior);
    10f64.powf(log10_add(
        wg + prob_to_log10(p_general_next),
        wj + prob_to_log10(p_jargon_next),
    ))
}

/// Two-dimensional calibration table over (log10 P_G, log10 P_J).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinTable {
    pub num_bins: usize,
    pub general_range: (f64, f64),
    pub jargon_range: (f64, f64),
    /// Row-major `[general_bin][jargon_bin]`; `None` for empty cells.
    pub cells: Vec<Option<f64>>,
}

fn bin_index(value: f64, (lo, hi): (f64, f64), n: usize) -> usize {
    if hi <= lo || hi.is_nan() || lo.is_nan() || value.is_nan() || value <= lo {
        return 0;
    }
    let i = ((value - lo) / (hi - lo) * n as f64).floor();
    (i as usize).min(n - 1)
}

impl BinTable {
    /// Fits equal-width log10 bins over the observed range. Each cell holds
    /// the add-one smoothed frequency of positive events that fell in it.
    pub fn fit(pairs: &[((f64, f64), bool)], num_bins: usize) -> Result<Self, ScorerError> {
        if pairs.is_empty() {
            return Err(ScorerError::EmptyCalibration);
        }
        if num_bins == 0 {
            return Err(ScorerError::InvalidConfig("num_bins must be at least 1".into()));
        }
        let logs: Vec<(f64, f64, bool)> = pairs
            .iter()
            .map(|&((g, j), hit)| (prob_to_log10(g), prob_to_log10(j), hit))
            .collect();
        let range = |f: fn(&(f64, f64, bool)) -> f64| {
            let finite = logs.iter().map(f).filter(|v| v.is_finite());
            let lo = finite.clone().fold(f64::INFINITY, f64::min);
            let hi = finite.fold(f64::NEG_INFINITY, f64::max);
            if lo.is_finite() {
                (lo, hi)
            } else {
                (0.0, 0.0)
            }
        };
        let general_range = range(|p| p.0);
        let jargon_range = range(|p| p.1);
        let mut hits = vec![0usize; num_bins * num_bins];
        let mut counts = vec![0usize; num_bins * num_bins];
        for &(g, j, hit) in &logs {
            let cell = bin_index(g, general_range, num_bins) * num_bins + bin_index(j, jargon_range, num_bins);
            counts[cell] += 1;
            hits[cell] += hit as usize;
        }
        let cells = hits
            .iter()
            .zip(&counts)
            .map(|(&h, &n)| (n > 0).then(|| ((h + 1) as f64 / (n + 2) as f64).log10()))
            .collect();
        Ok(BinTable {
            num_bins,
            general_range,
            jargon_range,
            cells,
        })
    }

    /// Calibrated log10 probability; out-of-range inputs clamp to the edge
    /// cells and empty cells fall back to an even linear mix.
    pub fn lookup(&self, general: f64, jargon: f64) -> f64 {
        let n = self.num_bins;
        let cell = bin_index(general, self.general_range, n) * n + bin_index(jargon, self.jargon_range, n);
        self.cells[cell].unwrap_or_else(|| linear_log10(general, jargon, 0.5))
    }
}

/// Builds bin calibration pairs from reference sentences: the true next word
/// is a positive event, `distractors` random vocabulary words are negatives.
pub fn calibration_pairs<S: AsRef<str>>(
    general: &NGramModel,
    jargon: &NGramModel,
    sentences: &[Vec<S>],
    unk_penalty: (f64, f64),
    distractors: usize,
    seed: u64,
) -> Vec<((f64, f64), bool)> {
    let mut vocab: Vec<&str> = general
        .vocab()
        .iter()
        .chain(jargon.vocab())
        .map(|t| t.word.as_str())
        .collect();
    vocab.sort_unstable();
    vocab.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for sentence in sentences {
        let (mut sg, mut sj) = (LmState::empty(), LmState::empty());
        for word in sentence {
            let word = word.as_ref();
            let probe = |w: &str| {
                let g = general.score_word(&sg, w, unk_penalty.0).0;
                let j = jargon.score_word(&sj, w, unk_penalty.1).0;
                (10f64.powf(g), 10f64.powf(j))
            };
            pairs.push((probe(word), true));
            for _ in 0..distractors {
                if let Some(&other) = vocab.choose(&mut rng) {
                    if other != word {
                        pairs.push((probe(other), false));
                    }
                }
            }
            sg = general.score_word(&sg, word, unk_penalty.0).1;
            sj = jargon.score_word(&sj, word, unk_penalty.1).1;
        }
    }
    pairs
}

/// Per-beam scorer state: one LM context per consulted model plus, for the
/// Bayes scorer, each model's cumulative sentence log10 likelihood.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScorerState {
    lm: SmallVec<[LmState; 2]>,
    history: SmallVec<[f64; 2]>,
}

#[derive(Clone, Debug)]
pub struct Scorer {
    kind: FusionKind,
    config: ScorerConfig,
    /// Consulted models. For coloring this is the single merged model.
    models: Vec<Arc<NGramModel>>,
    /// Unknown-word penalty per consulted model (per color for coloring).
    unk: Vec<f64>,
    log_prior: Vec<f64>,
    bins: Option<BinTable>,
}

impl Scorer {
    /// `models[i]` is the uncolored model for color `i`: general first, then
    /// jargon models.
    pub fn new(
        kind: FusionKind,
        models: &[Arc<NGramModel>],
        config: ScorerConfig,
        bins: Option<BinTable>,
    ) -> Result<Self, ScorerError> {
        let needed = kind.models_needed();
        if models.len() < needed {
            return Err(ScorerError::MissingModel {
                kind: kind.name(),
                needed,
                got: models.len(),
            });
        }
        let num_colors = if kind.is_colored() { models.len() } else { 1 };
        config.validate(num_colors)?;
        let (consulted, unk): (Vec<Arc<NGramModel>>, Vec<f64>) = match kind {
            FusionKind::General => (vec![models[0].clone()], vec![config.unk_penalty(0)]),
            FusionKind::Jargon => (vec![models[1].clone()], vec![config.unk_penalty(1)]),
            FusionKind::Coloring => {
                let tagged: Vec<(&NGramModel, ColorId)> = models
                    .iter()
                    .enumerate()
                    .map(|(i, m)| (m.as_ref(), ColorId(i as u16)))
                    .collect();
                let merged = NGramModel::merge_colored(&tagged)?;
                (
                    vec![Arc::new(merged)],
                    (0..models.len()).map(|i| config.unk_penalty(i)).collect(),
                )
            }
            _ => (
                vec![models[0].clone(), models[1].clone()],
                vec![config.unk_penalty(0), config.unk_penalty(1)],
            ),
        };
        if kind == FusionKind::Bins && bins.is_none() {
            return Err(ScorerError::MissingBinTable);
        }
        let log_prior = match (&config.color_prior, kind) {
            (Some(prior), FusionKind::Coloring) => prior.iter().map(|&p| prob_to_log10(p)).collect(),
            (_, FusionKind::Coloring) => vec![prob_to_log10(1.0 / num_colors as f64); num_colors],
            _ => Vec::new(),
        };
        Ok(Scorer {
            kind,
            config,
            models: consulted,
            unk,
            log_prior,
            bins: if kind == FusionKind::Bins { bins } else { None },
        })
    }

    pub fn kind(&self) -> FusionKind {
        self.kind
    }

    pub fn config(&self) -> &ScorerConfig {
        &self.config
    }

    /// For coloring, the merged colored model.
    pub fn models(&self) -> &[Arc<NGramModel>] {
        &self.models
    }

    /// Colors the scorer distinguishes: one per model for coloring, else 1.
    pub fn num_colors(&self) -> usize {
        self.log_prior.len().max(1)
    }

    pub fn initial_state(&self) -> ScorerState {
        ScorerState {
            lm: smallvec![LmState::empty(); self.models.len()],
            history: if self.kind == FusionKind::Bayes {
                smallvec![0.0; 2]
            } else {
                SmallVec::new()
            },
        }
    }

    /// Cost of one spelled character; non-zero only off the lexicon.
    pub fn char_score(&self, off_lexicon: bool) -> f64 {
        match (off_lexicon, self.config.unknown_subword_penalty) {
            (true, Some(p)) => p,
            _ => 0.0,
        }
    }

    /// Unweighted log10 P(word | history) under this strategy, with the
    /// color prior folded in for the coloring scorer. `None` is a word
    /// outside every lexicon.
    pub fn word_logprob(&self, state: &ScorerState, word: Option<&str>, color: ColorId) -> (f64, ScorerState) {
        let mut next = state.clone();
        let mut score_in = |i: usize, color: Option<ColorId>, unk: f64| {
            let model = &self.models[i];
            let id = word.and_then(|w| model.word_id(color, w));
            let (s, st) = model.score_id(&state.lm[i], id, unk);
            next.lm[i] = st;
            s
        };
        let logprob = match self.kind {
            FusionKind::General | FusionKind::Jargon => score_in(0, None, self.unk[0]),
            FusionKind::Coloring => {
                let c = color.index();
                let s = score_in(0, Some(color), self.unk[c]);
                self.log_prior[c] + s
            }
            FusionKind::Linear | FusionKind::LogLinear | FusionKind::Bins | FusionKind::Bayes => {
                let g = score_in(0, None, self.unk[0]);
                let j = score_in(1, None, self.unk[1]);
                match self.kind {
                    FusionKind::Linear => linear_log10(g, j, self.config.lambda),
                    FusionKind::LogLinear => loglinear_log10(g, j, self.config.lambda),
                    FusionKind::Bins => self.bins.as_ref().expect("checked at construction").lookup(g, j),
                    _ => {
                        let prior = match &self.config.color_prior {
                            Some(p) if p.len() == 2 => (p[0], p[1]),
                            _ => (0.5, 0.5),
                        };
                        let (wg, wj) = bayes_weights_log10(state.history[0], state.history[1], prior);
                        next.history[0] += g;
                        next.history[1] += j;
                        log10_add(wg + g, wj + j)
                    }
                }
            }
        };
        (logprob, next)
    }

    /// `alpha * log10 P + beta` for a completed word: one ScoreBeam step.
    pub fn score_word(&self, state: &ScorerState, word: Option<&str>, color: ColorId) -> (f64, ScorerState) {
        let (lp, next) = self.word_logprob(state, word, color);
        (self.config.alpha * lp + self.config.beta, next)
    }
}

/// Everything the text side of a beam carries: the word cursor, the scorer
/// state at the last completed word, and the accumulated log10 text score.
#[derive(Clone, Debug, PartialEq)]
pub struct TextState {
    pub cursor: WordCursor,
    pub scorer: ScorerState,
    pub score: f64,
}

impl TextState {
    pub fn initial(scorer: &Scorer) -> Self {
        TextState {
            cursor: WordCursor::START,
            scorer: scorer.initial_state(),
            score: 0.0,
        }
    }

    /// Applies one expansion. `spelled` yields the characters of the word
    /// being closed; it is only called for open-lexicon words.
    pub fn extend<F: FnOnce() -> String>(&self, scorer: &Scorer, exp: &Expansion<'_>, spelled: F) -> TextState {
        let mut score = self.score + scorer.char_score(exp.off_lexicon);
        let mut state = None;
        if let Some((color, end)) = exp.completes {
            let (delta, next) = score_end(scorer, &self.scorer, color, end, spelled);
            score += delta;
            state = Some(next);
        }
        TextState {
            cursor: exp.next,
            scorer: state.unwrap_or_else(|| self.scorer.clone()),
            score,
        }
    }

    /// Final text score if the utterance ended here, and whether the open
    /// partial word survives into the transcript.
    pub fn finish<F: FnOnce() -> String>(&self, scorer: &Scorer, lexicon: &ColoredLexicon, spelled: F) -> (f64, bool) {
        match lexicon.word_end_at(self.cursor) {
            Some((color, end)) => {
                let (delta, _) = score_end(scorer, &self.scorer, color, end, spelled);
                (self.score + delta, true)
            }
            // Dropped partial characters still pay for an unknown word, so
            // stopping one character short of a lexicon word is never free.
            None => match self.cursor {
                WordCursor::InWord { color, .. } => {
                    let (delta, _) = scorer.score_word(&self.scorer, None, color);
                    (self.score + delta, false)
                }
                WordCursor::Boundary { .. } => (self.score, false),
            },
        }
    }
}

fn score_end<F: FnOnce() -> String>(
    scorer: &Scorer,
    state: &ScorerState,
    color: ColorId,
    end: WordEnd<'_>,
    spelled: F,
) -> (f64, ScorerState) {
    match end {
        WordEnd::Lexicon(w) => scorer.score_word(state, Some(w), color),
        WordEnd::Spelled => {
            let w = spelled();
            scorer.score_word(state, Some(&w), color)
        }
        WordEnd::Unknown => scorer.score_word(state, None, color),
    }
}
