//! CTC prefix beam search with word coloring.
//!
//! Each hypothesis is a colored prefix: a character sequence in which every
//! character carries the color of the lexicon its word was drawn from. The
//! acoustic side follows the classic prefix recursion, keeping for every
//! prefix the probability of alignments ending in blank (`p_blank`) and in its
//! last character (`p_nonblank`). The text side is a [`TextState`] updated
//! whenever a separator closes a word. Beams are ranked by
//! `log10 P_tot + log10 P_text`.

use std::cmp::Ordering;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::DecodeError;
use crate::fusion::{Scorer, TextState};
use crate::lexicon::{ColorId, ColoredChar, ColoredLexicon, Expansion};
use crate::logprob::{ln_to_log10, log10_add, LOG10_ZERO};

/// Per-frame natural-log posteriors over `K` characters plus the blank,
/// which occupies the last column.
#[derive(Clone, Debug, PartialEq)]
pub struct LogitsMatrix {
    frames: usize,
    columns: usize,
    values: Vec<f64>,
}

impl LogitsMatrix {
    /// Row-major natural-log probabilities. Every row must sum to one within
    /// 1e-6 in the linear domain.
    pub fn new(frames: usize, columns: usize, values: Vec<f64>) -> Result<Self, DecodeError> {
        if columns == 0 || values.len() != frames * columns {
            return Err(DecodeError::ShapeMismatch {
                expected: frames * columns.max(1),
                got: values.len(),
            });
        }
        let m = LogitsMatrix {
            frames,
            columns,
            values,
        };
        for t in 0..frames {
            let sum: f64 = m.row(t).iter().map(|v| v.exp()).sum();
            if (sum - 1.0).abs() > 1e-6 || sum.is_nan() {
                return Err(DecodeError::NotNormalized { frame: t, sum });
            }
        }
        Ok(m)
    }

    pub fn from_log_rows(rows: &[Vec<f64>]) -> Result<Self, DecodeError> {
        let columns = rows.first().map_or(1, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != columns) {
            return Err(DecodeError::ShapeMismatch {
                expected: columns,
                got: bad.len(),
            });
        }
        Self::new(rows.len(), columns, rows.iter().flatten().copied().collect())
    }

    /// Linear-domain rows, converted with `ln`.
    pub fn from_prob_rows(rows: &[Vec<f64>]) -> Result<Self, DecodeError> {
        let logs: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|p| p.ln()).collect()).collect();
        Self::from_log_rows(&logs)
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.columns..(t + 1) * self.columns]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_log_rows(&self) -> Vec<Vec<f64>> {
        (0..self.frames).map(|t| self.row(t).to_vec()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoredWord {
    pub word: String,
    pub color: ColorId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColoredTranscript {
    pub words: Vec<ColoredWord>,
    /// log10 of `P_tot * P_text` for the winning prefix.
    pub score: f64,
}

impl ColoredTranscript {
    pub fn empty() -> Self {
        ColoredTranscript {
            words: Vec::new(),
            score: LOG10_ZERO,
        }
    }

    pub fn text(&self) -> String {
        let words: Vec<&str> = self.words.iter().map(|w| w.word.as_str()).collect();
        words.join(" ")
    }

    pub fn colors(&self) -> Vec<ColorId> {
        self.words.iter().map(|w| w.color).collect()
    }
}

pub type PrefixId = u32;

pub const ROOT_PREFIX: PrefixId = 0;

struct PrefixNode {
    parent: PrefixId,
    ch: Option<ColoredChar>,
    depth: u32,
    text: TextState,
}

/// Every colored prefix reached so far, stored once. Identical prefixes
/// built along different paths resolve to the same id.
pub struct PrefixArena {
    nodes: Vec<PrefixNode>,
    children: FxHashMap<(PrefixId, ColoredChar), PrefixId>,
    separator: u16,
}

impl PrefixArena {
    pub fn new(scorer: &Scorer, lexicon: &ColoredLexicon) -> Self {
        PrefixArena {
            nodes: vec![PrefixNode {
                parent: ROOT_PREFIX,
                ch: None,
                depth: 0,
                text: TextState::initial(scorer),
            }],
            children: FxHashMap::default(),
            separator: lexicon.alphabet().separator_column() as u16,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn last(&self, id: PrefixId) -> Option<ColoredChar> {
        self.nodes[id as usize].ch
    }

    pub fn depth(&self, id: PrefixId) -> u32 {
        self.nodes[id as usize].depth
    }

    pub fn text(&self, id: PrefixId) -> &TextState {
        &self.nodes[id as usize].text
    }

    /// The colored characters of a prefix, oldest first.
    pub fn chars(&self, id: PrefixId) -> Vec<ColoredChar> {
        let mut out = Vec::with_capacity(self.depth(id) as usize);
        let mut node = id;
        while let Some(ch) = self.nodes[node as usize].ch {
            out.push(ch);
            node = self.nodes[node as usize].parent;
        }
        out.reverse();
        out
    }

    /// Lexicographic order of two prefixes of equal depth: walk both up to
    /// their common ancestor; the last differing pair seen is the first
    /// difference from the left.
    fn cmp_same_depth(&self, mut a: PrefixId, mut b: PrefixId) -> Ordering {
        let mut order = Ordering::Equal;
        while a != b {
            let (na, nb) = (&self.nodes[a as usize], &self.nodes[b as usize]);
            let o = na.ch.cmp(&nb.ch);
            if o != Ordering::Equal {
                order = o;
            }
            a = na.parent;
            b = nb.parent;
        }
        order
    }

    /// Columns of the word being spelled at the end of `id`.
    fn open_word(&self, id: PrefixId) -> Vec<u16> {
        let mut out = Vec::new();
        let mut node = id;
        while let Some(ch) = self.nodes[node as usize].ch {
            if ch.column == self.separator {
                break;
            }
            out.push(ch.column);
            node = self.nodes[node as usize].parent;
        }
        out.reverse();
        out
    }

    pub fn child(
        &mut self,
        parent: PrefixId,
        exp: &Expansion<'_>,
        scorer: &Scorer,
        lexicon: &ColoredLexicon,
    ) -> PrefixId {
        if let Some(&id) = self.children.get(&(parent, exp.ch)) {
            return id;
        }
        let text = self.nodes[parent as usize]
            .text
            .extend(scorer, exp, || lexicon.alphabet().render(self.open_word(parent)));
        let id = self.nodes.len() as PrefixId;
        self.nodes.push(PrefixNode {
            parent,
            ch: Some(exp.ch),
            depth: self.nodes[parent as usize].depth + 1,
            text,
        });
        self.children.insert((parent, exp.ch), id);
        id
    }

    /// Final text score if decoding stopped at `id`, and whether the open
    /// partial word is kept.
    pub fn finish(&self, id: PrefixId, scorer: &Scorer, lexicon: &ColoredLexicon) -> (f64, bool) {
        self.text(id)
            .finish(scorer, lexicon, || lexicon.alphabet().render(self.open_word(id)))
    }

    /// Splits a prefix into colored words. A trailing partial word is kept
    /// only when `keep_partial` is set.
    pub fn words(&self, id: PrefixId, lexicon: &ColoredLexicon, keep_partial: bool) -> Vec<ColoredWord> {
        words_from_chars(&self.chars(id), lexicon, keep_partial)
    }
}

/// Splits a colored character sequence at separators.
pub fn words_from_chars(chars: &[ColoredChar], lexicon: &ColoredLexicon, keep_partial: bool) -> Vec<ColoredWord> {
    let alphabet = lexicon.alphabet();
    let sep = alphabet.separator_column() as u16;
    let mut words = Vec::new();
    let mut current = String::new();
    let mut color = ColorId::GENERAL;
    for ch in chars {
        if ch.column == sep {
            if !current.is_empty() {
                words.push(ColoredWord {
                    word: std::mem::take(&mut current),
                    color,
                });
            }
        } else {
            color = ch.color;
            current.push(alphabet.char_at(ch.column as usize));
        }
    }
    if keep_partial && !current.is_empty() {
        words.push(ColoredWord { word: current, color });
    }
    words
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Beam {
    pub prefix: PrefixId,
    /// log10 P⁻: alignments of the prefix ending in blank.
    pub p_blank: f64,
    /// log10 P⁺: alignments ending in the prefix's last character.
    pub p_nonblank: f64,
}

impl Beam {
    pub fn p_total(&self) -> f64 {
        log10_add(self.p_blank, self.p_nonblank)
    }
}

/// Orders candidates by descending score, then shorter prefix, then
/// lexicographic colored characters.
fn rank(arena: &PrefixArena, a: (PrefixId, f64), b: (PrefixId, f64)) -> Ordering {
    b.1.total_cmp(&a.1)
        .then_with(|| arena.depth(a.0).cmp(&arena.depth(b.0)))
        .then_with(|| arena.cmp_same_depth(a.0, b.0))
}

/// The top `m` beams by `log10 P_tot + log10 P_text`, best first.
pub fn get_best_beams(arena: &PrefixArena, beams: Vec<Beam>, m: usize) -> Vec<Beam> {
    if m == 0 {
        return Vec::new();
    }
    let mut keyed: Vec<(f64, Beam)> = beams
        .into_iter()
        .map(|b| (b.p_total() + arena.text(b.prefix).score, b))
        .collect();
    let cmp = |a: &(f64, Beam), b: &(f64, Beam)| rank(arena, (a.1.prefix, a.0), (b.1.prefix, b.0));
    if keyed.len() > m {
        keyed.select_nth_unstable_by(m - 1, cmp);
        keyed.truncate(m);
    }
    keyed.sort_by(cmp);
    keyed.into_iter().map(|(_, b)| b).collect()
}

/// Sums the blank and non-blank masses of beams that share a prefix, keeping
/// first-seen order.
pub fn merge_duplicate_prefixes(beams: Vec<Beam>) -> Vec<Beam> {
    let mut index: FxHashMap<PrefixId, usize> = FxHashMap::with_capacity_and_hasher(beams.len(), Default::default());
    let mut merged: Vec<Beam> = Vec::with_capacity(beams.len());
    for b in beams {
        match index.get(&b.prefix) {
            Some(&i) => {
                let m = &mut merged[i];
                m.p_blank = log10_add(m.p_blank, b.p_blank);
                m.p_nonblank = log10_add(m.p_nonblank, b.p_nonblank);
            }
            None => {
                index.insert(b.prefix, merged.len());
                merged.push(b);
            }
        }
    }
    merged
}

#[derive(Clone, Copy, Debug)]
pub struct DecoderConfig<'a> {
    pub beam_width: usize,
    /// Drop beams scoring more than this many log10 units below the frame's
    /// best. Disabled by default.
    pub prune_threshold: Option<f64>,
    pub scorer: &'a Scorer,
    pub lexicon: &'a ColoredLexicon,
}

impl<'a> DecoderConfig<'a> {
    pub fn new(scorer: &'a Scorer, lexicon: &'a ColoredLexicon, beam_width: usize) -> Self {
        DecoderConfig {
            beam_width,
            prune_threshold: None,
            scorer,
            lexicon,
        }
    }

    fn validate(&self, logits: &LogitsMatrix) -> Result<(), DecodeError> {
        let expected = self.lexicon.alphabet().len() + 1;
        if logits.columns() != expected {
            return Err(DecodeError::ShapeMismatch {
                expected,
                got: logits.columns(),
            });
        }
        if self.beam_width == 0 {
            return Err(DecodeError::InvalidConfig("beam width must be at least 1".into()));
        }
        if self.scorer.kind().is_colored() {
            let colors = self.lexicon.num_colors() as usize;
            let priors = self.scorer.num_colors();
            if colors != priors {
                return Err(DecodeError::InvalidConfig(format!(
                    "lexicon has {colors} colors, scorer has {priors} language models"
                )));
            }
        }
        let off = self.scorer.config().unknown_subword_penalty.is_some();
        if off != self.lexicon.off_lexicon_enabled() {
            return Err(DecodeError::InvalidConfig(
                "off-lexicon extension must be enabled exactly when an unknown sub-word penalty is set".into(),
            ));
        }
        Ok(())
    }
}

/// Per-frame counters for instrumented decodes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DecodeStats {
    /// Beams kept and expanded at each frame.
    pub expanded_per_frame: Vec<usize>,
    /// Successor hypotheses (stay + extensions) generated at each frame.
    pub successors_per_frame: Vec<usize>,
    /// Largest number of successors any single beam produced.
    pub max_successors_per_beam: usize,
}

pub fn decode(logits: &LogitsMatrix, config: &DecoderConfig<'_>) -> Result<ColoredTranscript, DecodeError> {
    decode_with_stats(logits, config).map(|(t, _)| t)
}

pub fn decode_with_stats(
    logits: &LogitsMatrix,
    config: &DecoderConfig<'_>,
) -> Result<(ColoredTranscript, DecodeStats), DecodeError> {
    config.validate(logits)?;
    let scorer = config.scorer;
    let lexicon = config.lexicon;
    let blank = lexicon.alphabet().blank_index();
    let mut arena = PrefixArena::new(scorer, lexicon);
    let mut stats = DecodeStats::default();
    let mut beams = vec![Beam {
        prefix: ROOT_PREFIX,
        p_blank: 0.0,
        p_nonblank: LOG10_ZERO,
    }];
    let mut expansions: Vec<Expansion<'_>> = Vec::new();
    let mut row = vec![0.0; logits.columns()];

    for t in 0..logits.frames() {
        for (dst, &src) in row.iter_mut().zip(logits.row(t)) {
            *dst = ln_to_log10(src);
        }
        let mut selected = get_best_beams(&arena, beams, config.beam_width);
        if let (Some(threshold), Some(best)) = (config.prune_threshold, selected.first()) {
            let floor = best.p_total() + arena.text(best.prefix).score - threshold;
            selected.retain(|b| b.p_total() + arena.text(b.prefix).score >= floor);
        }
        stats.expanded_per_frame.push(selected.len());
        let mut next = Vec::with_capacity(selected.len() * 4);
        let mut successors = 0;
        for beam in &selected {
            let p_total = beam.p_total();
            let last = arena.last(beam.prefix);
            let before = next.len();
            if let Some(last) = last {
                next.push(Beam {
                    prefix: beam.prefix,
                    p_blank: LOG10_ZERO,
                    p_nonblank: beam.p_nonblank + row[last.column as usize],
                });
            }
            next.push(Beam {
                prefix: beam.prefix,
                p_blank: p_total + row[blank],
                p_nonblank: LOG10_ZERO,
            });
            expansions.clear();
            lexicon.expansions(arena.text(beam.prefix).cursor, &mut expansions);
            for exp in &expansions {
                let child = arena.child(beam.prefix, exp, scorer, lexicon);
                let source = match last {
                    Some(l) if l.column == exp.ch.column => beam.p_blank,
                    _ => p_total,
                };
                next.push(Beam {
                    prefix: child,
                    p_blank: LOG10_ZERO,
                    p_nonblank: source + row[exp.ch.column as usize],
                });
            }
            // the stay update counts once even though it is two entries
            let spawned = next.len() - before - usize::from(last.is_some());
            successors += spawned;
            stats.max_successors_per_beam = stats.max_successors_per_beam.max(spawned);
        }
        stats.successors_per_frame.push(successors);
        beams = merge_duplicate_prefixes(next);
    }

    let finals: Vec<(PrefixId, f64, bool)> = beams
        .iter()
        .map(|b| {
            let (text, keep) = arena.finish(b.prefix, scorer, lexicon);
            (b.prefix, b.p_total() + text, keep)
        })
        .collect();
    let best = finals
        .iter()
        .min_by(|a, b| rank(&arena, (a.0, a.1), (b.0, b.1)))
        .copied();
    let transcript = match best {
        Some((prefix, score, keep)) if score > LOG10_ZERO => ColoredTranscript {
            words: arena.words(prefix, lexicon, keep),
            score,
        },
        _ => ColoredTranscript::empty(),
    };
    Ok((transcript, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{FusionKind, ScorerConfig};
    use crate::lexicon::{ColoredAlphabet, Lexicon};
    use crate::ngram::{NGramModel, NgramEntry};
    use std::sync::Arc;

    fn unigram(words: &[&str]) -> Arc<NGramModel> {
        let p = -(words.len() as f64).log10();
        Arc::new(
            NGramModel::from_ngrams(
                1,
                words.iter().map(|&w| {
                    (
                        vec![w],
                        NgramEntry {
                            log10_prob: p,
                            backoff_log10: None,
                        },
                    )
                }),
            )
            .unwrap(),
        )
    }

    fn no_lm(models: &[Arc<NGramModel>]) -> Scorer {
        let cfg = ScorerConfig {
            alpha: 0.0,
            ..ScorerConfig::default()
        };
        Scorer::new(FusionKind::Coloring, models, cfg, None).unwrap()
    }

    #[test]
    fn forced_single_frame_path() {
        let lex = ColoredLexicon::from_word_lists(vec![' ', 'a', 'b'], ' ', &[vec!["a"], vec!["b"]], false).unwrap();
        let scorer = no_lm(&[unigram(&["a"]), unigram(&["b"])]);
        let s = LogitsMatrix::from_prob_rows(&[vec![0.0, 1.0, 0.0, 0.0]]).unwrap();
        let t = decode(&s, &DecoderConfig::new(&scorer, &lex, 8)).unwrap();
        assert_eq!(t.text(), "a");
        assert_eq!(t.colors(), vec![ColorId(0)]);
        assert_eq!(t.score, 0.0);
    }

    #[test]
    fn zero_frames_give_empty_transcript() {
        let lex = ColoredLexicon::from_word_lists(vec![' ', 'a'], ' ', &[vec!["a"]], false).unwrap();
        let scorer = no_lm(&[unigram(&["a"])]);
        let s = LogitsMatrix::new(0, 3, vec![]).unwrap();
        let t = decode(&s, &DecoderConfig::new(&scorer, &lex, 4)).unwrap();
        assert!(t.words.is_empty());
        assert_eq!(t.score, 0.0);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let lex = ColoredLexicon::from_word_lists(vec![' ', 'a'], ' ', &[vec!["a"]], false).unwrap();
        let scorer = no_lm(&[unigram(&["a"])]);
        let s = LogitsMatrix::from_prob_rows(&[vec![0.5, 0.5]]).unwrap();
        assert_eq!(
            decode(&s, &DecoderConfig::new(&scorer, &lex, 4)),
            Err(DecodeError::ShapeMismatch { expected: 3, got: 2 })
        );
    }

    #[test]
    fn unnormalized_rows_rejected() {
        assert!(matches!(
            LogitsMatrix::from_prob_rows(&[vec![0.5, 0.6]]),
            Err(DecodeError::NotNormalized { frame: 0, .. })
        ));
    }

    #[test]
    fn repeated_letters_need_a_blank() {
        // "aa" only via a, blank, a
        let lex = ColoredLexicon::from_word_lists(vec![' ', 'a'], ' ', &[vec!["a", "aa"]], false).unwrap();
        let scorer = no_lm(&[unigram(&["a", "aa"])]);
        let a = vec![0.0, 1.0, 0.0];
        let b = vec![0.0, 0.0, 1.0];
        let s = LogitsMatrix::from_prob_rows(&[a.clone(), a.clone()]).unwrap();
        assert_eq!(decode(&s, &DecoderConfig::new(&scorer, &lex, 8)).unwrap().text(), "a");
        let s = LogitsMatrix::from_prob_rows(&[a.clone(), b, a]).unwrap();
        assert_eq!(decode(&s, &DecoderConfig::new(&scorer, &lex, 8)).unwrap().text(), "aa");
    }

    #[test]
    fn open_partial_word_dropped_when_not_a_word() {
        let lex = ColoredLexicon::from_word_lists(vec![' ', 'a', 'b'], ' ', &[vec!["ab"]], false).unwrap();
        let scorer = no_lm(&[unigram(&["ab"])]);
        let s = LogitsMatrix::from_prob_rows(&[vec![0.0, 1.0, 0.0, 0.0]]).unwrap();
        let t = decode(&s, &DecoderConfig::new(&scorer, &lex, 8)).unwrap();
        assert!(t.words.is_empty());
        assert_eq!(t.score, 0.0);

        let cfg = ScorerConfig {
            alpha: 0.5,
            beta: 0.25,
            ..ScorerConfig::default()
        };
        let scorer = Scorer::new(FusionKind::Coloring, &[unigram(&["ab"])], cfg, None).unwrap();
        let t = decode(&s, &DecoderConfig::new(&scorer, &lex, 8)).unwrap();
        assert!(t.words.is_empty());
        assert_eq!(t.score, 0.5 * -10.0 + 0.25);
    }

    #[test]
    fn best_beams_sorted_and_truncated() {
        let alphabet = ColoredAlphabet::new(vec![' ', 'a', 'b'], 1, ' ').unwrap();
        let lex = ColoredLexicon::new(alphabet, vec![Lexicon::Open], false).unwrap();
        let scorer = no_lm(&[unigram(&["a"])]);
        let mut arena = PrefixArena::new(&scorer, &lex);
        let mut exps = Vec::new();
        lex.expansions(arena.text(ROOT_PREFIX).cursor, &mut exps);
        let ids: Vec<PrefixId> = exps
            .iter()
            .map(|e| arena.child(ROOT_PREFIX, e, &scorer, &lex))
            .collect();
        let beams: Vec<Beam> = ids
            .iter()
            .zip([-1.0, -3.0, -2.0])
            .map(|(&prefix, p)| Beam {
                prefix,
                p_blank: p,
                p_nonblank: LOG10_ZERO,
            })
            .collect();
        let best = get_best_beams(&arena, beams.clone(), 2);
        let scores: Vec<f64> = best.iter().map(Beam::p_total).collect();
        assert_eq!(scores, vec![-1.0, -2.0]);
        assert_eq!(get_best_beams(&arena, beams.clone(), 10).len(), 3);
        // exact ties resolve by colored character order
        let tied: Vec<Beam> = beams.iter().map(|b| Beam { p_blank: -1.0, ..*b }).rev().collect();
        let best = get_best_beams(&arena, tied, 3);
        let firsts: Vec<u16> = best.iter().map(|b| arena.last(b.prefix).unwrap().column).collect();
        assert_eq!(firsts, vec![0, 1, 2]);
    }

    #[test]
    fn shorter_prefix_wins_ties() {
        let alphabet = ColoredAlphabet::new(vec![' ', 'a'], 1, ' ').unwrap();
        let lex = ColoredLexicon::new(alphabet, vec![Lexicon::Open], false).unwrap();
        let scorer = no_lm(&[unigram(&["a"])]);
        let mut arena = PrefixArena::new(&scorer, &lex);
        let mut exps = Vec::new();
        lex.expansions(arena.text(ROOT_PREFIX).cursor, &mut exps);
        let a = arena.child(ROOT_PREFIX, &exps[1], &scorer, &lex);
        let beams = vec![
            Beam {
                prefix: a,
                p_blank: -1.0,
                p_nonblank: LOG10_ZERO,
            },
            Beam {
                prefix: ROOT_PREFIX,
                p_blank: -1.0,
                p_nonblank: LOG10_ZERO,
            },
        ];
        assert_eq!(get_best_beams(&arena, beams, 1)[0].prefix, ROOT_PREFIX);
    }

    #[test]
    fn duplicates_merge_by_linear_sum() {
        let b = |prefix, nb: f64| Beam {
            prefix,
            p_blank: LOG10_ZERO,
            p_nonblank: nb.log10(),
        };
        let merged = merge_duplicate_prefixes(vec![b(3, 0.1), b(5, 0.4), b(3, 0.2)]);
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[0].prefix, 3);
        assert!((10f64.powf(merged[0].p_nonblank) - 0.3).abs() < 1e-15);
        let distinct = vec![b(1, 0.1), b(2, 0.2)];
        assert_eq!(merge_duplicate_prefixes(distinct.clone()), distinct);
    }
}
