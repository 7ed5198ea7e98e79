//! Character and word error rates.
//!
//! Rates are pooled at corpus level: total edits over total reference
//! length, times 100. Colors are ignored; callers pass plain words.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::MetricsError;

/// Levenshtein distance with unit costs.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlignOp {
    Match { r: usize, h: usize },
    Substitute { r: usize, h: usize },
    Delete { r: usize },
    Insert { h: usize },
}

/// One minimal edit script turning `reference` into `hypothesis`. Ties
/// prefer match/substitution, then deletion, then insertion.
pub fn align<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Vec<AlignOp> {
    let (n, m) = (reference.len(), hypothesis.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[i - 1][j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let same = reference[i - 1] == hypothesis[j - 1];
            if d[i][j] == d[i - 1][j - 1] + usize::from(!same) {
                ops.push(if same {
                    AlignOp::Match { r: i - 1, h: j - 1 }
                } else {
                    AlignOp::Substitute { r: i - 1, h: j - 1 }
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[i][j] == d[i - 1][j] + 1 {
            ops.push(AlignOp::Delete { r: i - 1 });
            i -= 1;
        } else {
            ops.push(AlignOp::Insert { h: j - 1 });
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

fn check_lengths(refs: usize, hyps: usize) -> Result<(), MetricsError> {
    if refs != hyps {
        return Err(MetricsError::LengthMismatch { refs, hyps });
    }
    Ok(())
}

fn pooled(edits: usize, length: usize) -> f64 {
    match (edits, length) {
        (0, 0) => 0.0,
        (_, 0) => f64::INFINITY,
        _ => 100.0 * edits as f64 / length as f64,
    }
}

/// Raw counts behind a pooled rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub edits: usize,
    pub reference_length: usize,
}

impl ErrorCounts {
    pub fn rate(self) -> f64 {
        pooled(self.edits, self.reference_length)
    }
}

impl std::ops::Add for ErrorCounts {
    type Output = ErrorCounts;

    fn add(self, o: ErrorCounts) -> ErrorCounts {
        ErrorCounts {
            edits: self.edits + o.edits,
            reference_length: self.reference_length + o.reference_length,
        }
    }
}

pub fn word_counts<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> ErrorCounts {
    let r: Vec<&str> = reference.iter().map(AsRef::as_ref).collect();
    let h: Vec<&str> = hypothesis.iter().map(AsRef::as_ref).collect();
    ErrorCounts {
        edits: edit_distance(&r, &h),
        reference_length: r.len(),
    }
}

/// Character counts over the space-joined texts.
pub fn char_counts<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> ErrorCounts {
    let join = |ws: &[S]| -> Vec<char> {
        let ws: Vec<&str> = ws.iter().map(AsRef::as_ref).collect();
        ws.join(" ").chars().collect()
    };
    let (r, h) = (join(reference), join(hypothesis));
    ErrorCounts {
        edits: edit_distance(&r, &h),
        reference_length: r.len(),
    }
}

/// Corpus-level word error rate in percent.
pub fn wer<S: AsRef<str>>(refs: &[Vec<S>], hyps: &[Vec<S>]) -> Result<f64, MetricsError> {
    check_lengths(refs.len(), hyps.len())?;
    let total = refs
        .iter()
        .zip(hyps)
        .fold(ErrorCounts::default(), |acc, (r, h)| acc + word_counts(r, h));
    Ok(total.rate())
}

/// Corpus-level character error rate in percent. Word separators count as
/// characters.
pub fn cer<S: AsRef<str>>(refs: &[Vec<S>], hyps: &[Vec<S>]) -> Result<f64, MetricsError> {
    check_lengths(refs.len(), hyps.len())?;
    let total = refs
        .iter()
        .zip(hyps)
        .fold(ErrorCounts::default(), |acc, (r, h)| acc + char_counts(r, h));
    Ok(total.rate())
}

/// A reference sentence with a jargon flag per word.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedReference {
    pub words: Vec<String>,
    pub jargon: Vec<bool>,
}

/// Edits charged to jargon reference words: substitutions and deletions in
/// alignment columns whose reference word is marked. Insertions have no
/// reference word and are never charged.
pub fn jargon_counts<S: AsRef<str>>(reference: &MarkedReference, hypothesis: &[S]) -> ErrorCounts {
    let r: Vec<&str> = reference.words.iter().map(String::as_str).collect();
    let h: Vec<&str> = hypothesis.iter().map(AsRef::as_ref).collect();
    let marked = |i: usize| reference.jargon.get(i).copied().unwrap_or(false);
    let mut counts = ErrorCounts::default();
    for op in align(&r, &h) {
        match op {
            AlignOp::Match { r, .. } if marked(r) => counts.reference_length += 1,
            AlignOp::Substitute { r, .. } | AlignOp::Delete { r } if marked(r) => {
                counts.reference_length += 1;
                counts.edits += 1;
            }
            _ => {}
        }
    }
    counts
}

/// WER restricted to jargon-marked reference words. `None` when no reference
/// word is marked.
pub fn jargon_wer<S: AsRef<str>>(refs: &[MarkedReference], hyps: &[Vec<S>]) -> Result<Option<f64>, MetricsError> {
    check_lengths(refs.len(), hyps.len())?;
    let total = refs
        .iter()
        .zip(hyps)
        .fold(ErrorCounts::default(), |acc, (r, h)| acc + jargon_counts(r, h));
    Ok((total.reference_length > 0).then(|| total.rate()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub cer: f64,
    pub wer: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub jargon_wer: Option<f64>,
    pub utterance_count: usize,
}

impl ReportRow {
    /// Scores one method over a corpus. `refs` carry jargon marks only when
    /// the corpus has them.
    pub fn evaluate<S: AsRef<str>>(
        method: impl Into<String>,
        refs: &[Vec<String>],
        marks: Option<&[MarkedReference]>,
        hyps: &[Vec<S>],
    ) -> Result<Self, MetricsError> {
        check_lengths(refs.len(), hyps.len())?;
        let hyps: Vec<Vec<&str>> = hyps.iter().map(|h| h.iter().map(AsRef::as_ref).collect()).collect();
        let refs: Vec<Vec<&str>> = refs.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
        Ok(ReportRow {
            method: method.into(),
            cer: cer(&refs, &hyps)?,
            wer: wer(&refs, &hyps)?,
            jargon_wer: match marks {
                Some(m) => jargon_wer(m, &hyps)?,
                None => None,
            },
            utterance_count: refs.len(),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned text table, one row per method.
    pub fn to_table(&self) -> String {
        let method_w = self
            .rows
            .iter()
            .map(|r| r.method.len())
            .max()
            .unwrap_or(0)
            .max("method".len());
        let mut out = String::from("# pooled rates: total edits / total reference length\n");
        let _ = writeln!(
            out,
            "{:<method_w$}  {:>8}  {:>8}  {:>10}  {:>6}",
            "method", "CER", "WER", "jargon-WER", "utts"
        );
        for r in &self.rows {
            let jw = r.jargon_wer.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
            let _ = writeln!(
                out,
                "{:<method_w$}  {:>8.2}  {:>8.2}  {:>10}  {:>6}",
                r.method, r.cer, r.wer, jw, r.utterance_count
            );
        }
        out
    }
}
