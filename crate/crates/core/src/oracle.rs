//! Slow, exact reference implementations used to check the beam search.
//!
//! `ctc_path_sum` is the textbook CTC forward recursion over the
//! blank-interleaved label sequence; `exhaustive_decode` scores every colored
//! labeling the lexicons admit; `reference_beam_search` is a plain
//! single-lexicon prefix beam search keyed by strings.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use crate::decoder::{words_from_chars, ColoredTranscript, LogitsMatrix};
use crate::error::OracleError;
use crate::fusion::{Scorer, TextState};
use crate::lexicon::{ColoredChar, ColoredLexicon, Expansion};
use crate::logprob::{ln_to_log10, log10_add, LOG10_ZERO};
use crate::ngram::{LmState, NGramModel};

pub const MAX_CANDIDATES: usize = 1_000_000;

/// log10 probability mass of alignments collapsing to `labeling`, split into
/// paths whose last frame is blank and paths whose last frame is the final
/// label.
pub fn ctc_path_sum_split(logits: &LogitsMatrix, labeling: &[u16]) -> Result<(f64, f64), OracleError> {
    let frames = logits.frames();
    if labeling.len() > frames {
        return Err(OracleError::LabelTooLong {
            len: labeling.len(),
            frames,
        });
    }
    let blank = logits.columns() - 1;
    if frames == 0 {
        return Ok((0.0, LOG10_ZERO));
    }
    // extended sequence: blank, l1, blank, l2, ..., lU, blank
    let ext: Vec<usize> = std::iter::once(blank)
        .chain(labeling.iter().flat_map(|&l| [l as usize, blank]))
        .collect();
    let s = |t: usize, c: usize| ln_to_log10(logits.row(t)[c]);
    let mut alpha = vec![LOG10_ZERO; ext.len()];
    alpha[0] = s(0, ext[0]);
    if ext.len() > 1 {
        alpha[1] = s(0, ext[1]);
    }
    for t in 1..frames {
        let prev = alpha.clone();
        for i in 0..ext.len() {
            let mut a = prev[i];
            if i >= 1 {
                a = log10_add(a, prev[i - 1]);
            }
            if i >= 2 && ext[i] != blank && ext[i] != ext[i - 2] {
                a = log10_add(a, prev[i - 2]);
            }
            alpha[i] = a + s(t, ext[i]);
        }
    }
    let last = ext.len() - 1;
    let ending_nonblank = if last >= 1 { alpha[last - 1] } else { LOG10_ZERO };
    Ok((alpha[last], ending_nonblank))
}

/// log10 P(labeling | logits) summed over all alignments.
pub fn ctc_path_sum(logits: &LogitsMatrix, labeling: &[u16]) -> Result<f64, OracleError> {
    let (b, nb) = ctc_path_sum_split(logits, labeling)?;
    Ok(log10_add(b, nb))
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub best: ColoredTranscript,
    /// The winning colored labeling.
    pub best_labeling: Vec<ColoredChar>,
    /// Every admissible colored labeling with its exact log10
    /// `P_tot * P_text`, in depth-first enumeration order.
    pub all_scores: Vec<(Vec<ColoredChar>, f64)>,
}

fn rank(a: (&[ColoredChar], f64), b: (&[ColoredChar], f64)) -> Ordering {
    b.1.total_cmp(&a.1)
        .then_with(|| a.0.len().cmp(&b.0.len()))
        .then_with(|| a.0.cmp(b.0))
}

/// Scores every colored labeling of length at most `max_label_len` that the
/// lexicon constraints admit and returns the argmax, breaking ties exactly
/// as the beam search does.
pub fn exhaustive_decode(
    logits: &LogitsMatrix,
    scorer: &Scorer,
    lexicon: &ColoredLexicon,
    max_label_len: usize,
) -> Result<OracleResult, OracleError> {
    let max_label_len = max_label_len.min(logits.frames());
    let mut count = 0;
    count_labelings(lexicon, crate::lexicon::WordCursor::START, max_label_len, &mut count)?;
    let mut all = Vec::with_capacity(count);
    let mut path = Vec::new();
    let root = TextState::initial(scorer);
    enumerate(logits, scorer, lexicon, max_label_len, &root, &mut path, &mut all)?;

    let best = all
        .iter()
        .min_by(|a, b| rank((&a.0, a.1 .0), (&b.0, b.1 .0)))
        .expect("the empty labeling is always present");
    let (labeling, (score, keep)) = (best.0.clone(), best.1);
    let transcript = if score > LOG10_ZERO {
        ColoredTranscript {
            words: words_from_chars(&labeling, lexicon, keep),
            score,
        }
    } else {
        ColoredTranscript::empty()
    };
    Ok(OracleResult {
        best: transcript,
        best_labeling: labeling,
        all_scores: all.into_iter().map(|(l, (s, _))| (l, s)).collect(),
    })
}

type Scored = (Vec<ColoredChar>, (f64, bool));

fn count_labelings(
    lexicon: &ColoredLexicon,
    cursor: crate::lexicon::WordCursor,
    remaining: usize,
    count: &mut usize,
) -> Result<(), OracleError> {
    *count += 1;
    if *count > MAX_CANDIDATES {
        return Err(OracleError::InstanceTooLarge { limit: MAX_CANDIDATES });
    }
    if remaining == 0 {
        return Ok(());
    }
    let mut exps = Vec::new();
    lexicon.expansions(cursor, &mut exps);
    for exp in exps {
        count_labelings(lexicon, exp.next, remaining - 1, count)?;
    }
    Ok(())
}

fn enumerate(
    logits: &LogitsMatrix,
    scorer: &Scorer,
    lexicon: &ColoredLexicon,
    max_len: usize,
    text: &TextState,
    path: &mut Vec<ColoredChar>,
    out: &mut Vec<Scored>,
) -> Result<(), OracleError> {
    let columns: Vec<u16> = path.iter().map(|c| c.column).collect();
    let acoustic = ctc_path_sum(logits, &columns)?;
    let (final_text, keep) = text.finish(scorer, lexicon, || open_word(lexicon, path));
    out.push((path.clone(), (acoustic + final_text, keep)));
    if path.len() == max_len {
        return Ok(());
    }
    let mut exps: Vec<Expansion<'_>> = Vec::new();
    lexicon.expansions(text.cursor, &mut exps);
    for exp in &exps {
        let next = text.extend(scorer, exp, || open_word(lexicon, path));
        path.push(exp.ch);
        enumerate(logits, scorer, lexicon, max_len, &next, path, out)?;
        path.pop();
    }
    Ok(())
}

fn open_word(lexicon: &ColoredLexicon, path: &[ColoredChar]) -> String {
    let sep = lexicon.alphabet().separator_column() as u16;
    let start = path.iter().rposition(|c| c.column == sep).map_or(0, |i| i + 1);
    lexicon.alphabet().render(path[start..].iter().map(|c| c.column))
}

/// Settings for [`reference_beam_search`].
#[derive(Clone, Debug)]
pub struct ReferenceSearch<'a> {
    pub alphabet: &'a [char],
    pub separator: char,
    pub words: &'a [String],
    pub lm: &'a NGramModel,
    pub alpha: f64,
    pub beta: f64,
    pub unk_penalty: f64,
    pub beam_width: usize,
}

#[derive(Clone)]
struct RefBeam {
    p_blank: f64,
    p_nonblank: f64,
    text: f64,
    lm: LmState,
    partial: String,
}

/// Single-lexicon CTC prefix beam search with word-level shallow fusion,
/// written independently of the colored decoder. Returns the best text and
/// its log10 score.
pub fn reference_beam_search(logits: &LogitsMatrix, cfg: &ReferenceSearch<'_>) -> (String, f64) {
    let index: HashMap<char, usize> = cfg.alphabet.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let blank = cfg.alphabet.len();
    let lexicon: HashSet<&str> = cfg.words.iter().map(String::as_str).collect();
    let mut prefixes: HashSet<String> = HashSet::new();
    for w in cfg.words {
        for (i, _) in w.char_indices().skip(1) {
            prefixes.insert(w[..i].to_string());
        }
        prefixes.insert(w.clone());
    }
    let order = |s: &str| -> Vec<usize> { s.chars().map(|c| index[&c]).collect() };
    let cmp = |a: (&String, f64), b: (&String, f64)| {
        b.1.total_cmp(&a.1)
            .then_with(|| a.0.chars().count().cmp(&b.0.chars().count()))
            .then_with(|| order(a.0).cmp(&order(b.0)))
    };

    let mut beams: Vec<(String, RefBeam)> = vec![(
        String::new(),
        RefBeam {
            p_blank: 0.0,
            p_nonblank: LOG10_ZERO,
            text: 0.0,
            lm: LmState::empty(),
            partial: String::new(),
        },
    )];
    for t in 0..logits.frames() {
        let row: Vec<f64> = logits.row(t).iter().map(|&v| ln_to_log10(v)).collect();
        beams.sort_by(|a, b| {
            cmp(
                (&a.0, log10_add(a.1.p_blank, a.1.p_nonblank) + a.1.text),
                (&b.0, log10_add(b.1.p_blank, b.1.p_nonblank) + b.1.text),
            )
        });
        beams.truncate(cfg.beam_width);

        let mut next: Vec<(String, RefBeam)> = Vec::new();
        let mut slot: HashMap<String, usize> = HashMap::new();
        let mut add = |prefix: String, make: &dyn Fn() -> RefBeam, pb: f64, pnb: f64| {
            let i = *slot.entry(prefix.clone()).or_insert_with(|| {
                let mut fresh = make();
                fresh.p_blank = LOG10_ZERO;
                fresh.p_nonblank = LOG10_ZERO;
                next.push((prefix, fresh));
                next.len() - 1
            });
            let b = &mut next[i].1;
            b.p_blank = log10_add(b.p_blank, pb);
            b.p_nonblank = log10_add(b.p_nonblank, pnb);
        };
        for (prefix, beam) in &beams {
            let total = log10_add(beam.p_blank, beam.p_nonblank);
            let last = prefix.chars().last();
            if let Some(l) = last {
                add(
                    prefix.clone(),
                    &|| beam.clone(),
                    LOG10_ZERO,
                    beam.p_nonblank + row[index[&l]],
                );
            }
            add(prefix.clone(), &|| beam.clone(), total + row[blank], LOG10_ZERO);

            let mut candidates: Vec<char> = Vec::new();
            if beam.partial.is_empty() {
                for w in cfg.words {
                    candidates.extend(w.chars().next());
                }
                candidates.push(cfg.separator);
            } else {
                for &c in cfg.alphabet {
                    if c != cfg.separator && prefixes.contains(&format!("{}{c}", beam.partial)) {
                        candidates.push(c);
                    }
                }
                if lexicon.contains(beam.partial.as_str()) {
                    candidates.push(cfg.separator);
                }
            }
            candidates.sort_by_key(|c| index[c]);
            candidates.dedup();
            for c in candidates {
                let extended = format!("{prefix}{c}");
                let make = || {
                    let mut b = beam.clone();
                    if c == cfg.separator {
                        if !b.partial.is_empty() {
                            let (lp, st) = cfg.lm.score_word(&b.lm, &b.partial, cfg.unk_penalty);
                            b.text += cfg.alpha * lp + cfg.beta;
                            b.lm = st;
                            b.partial.clear();
                        }
                    } else {
                        b.partial.push(c);
                    }
                    b
                };
                let source = if last == Some(c) { beam.p_blank } else { total };
                add(extended, &make, LOG10_ZERO, source + row[index[&c]]);
            }
        }
        beams = next;
    }

    let mut best: Option<(String, String, f64)> = None;
    for (prefix, beam) in &beams {
        let mut text = beam.text;
        let mut words: Vec<&str> = prefix.split(cfg.separator).filter(|w| !w.is_empty()).collect();
        if !beam.partial.is_empty() {
            if lexicon.contains(beam.partial.as_str()) {
                let (lp, _) = cfg.lm.score_word(&beam.lm, &beam.partial, cfg.unk_penalty);
                text += cfg.alpha * lp + cfg.beta;
            } else {
                text += cfg.alpha * cfg.unk_penalty + cfg.beta;
                words.pop();
            }
        }
        let score = log10_add(beam.p_blank, beam.p_nonblank) + text;
        let better = match &best {
            None => true,
            Some((p, _, s)) => cmp((prefix, score), (p, *s)) == Ordering::Less,
        };
        if better {
            best = Some((prefix.clone(), words.join(" "), score));
        }
    }
    match best {
        Some((_, text, score)) if score > LOG10_ZERO => (text, score),
        _ => (String::new(), LOG10_ZERO),
    }
}
