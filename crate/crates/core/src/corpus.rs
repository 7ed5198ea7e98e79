//! Files on disk: logits matrices, lexicons, manifests and colored
//! transcripts.

use std::collections::HashSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decoder::{ColoredTranscript, ColoredWord, LogitsMatrix};
use crate::error::CorpusError;
use crate::lexicon::ColorId;
use crate::metrics::MarkedReference;

pub const CTCL1_MAGIC: &[u8] = b"CTCL1\n";

/// Serializes logits as CTCL1: magic, an ASCII `frames columns` line, then
/// little-endian f64 natural-log values in row-major order.
pub fn encode_ctcl1(logits: &LogitsMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + logits.values().len() * 8);
    out.extend_from_slice(CTCL1_MAGIC);
    out.extend_from_slice(format!("{} {}\n", logits.frames(), logits.columns()).as_bytes());
    for v in logits.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_ctcl1(bytes: &[u8]) -> Result<LogitsMatrix, CorpusError> {
    let bad = |m: &str| CorpusError::MalformedLogits(m.to_string());
    let rest = bytes
        .strip_prefix(CTCL1_MAGIC)
        .ok_or_else(|| bad("missing CTCL1 magic"))?;
    let nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad("missing header line"))?;
    let header = std::str::from_utf8(&rest[..nl]).map_err(|_| bad("header is not ASCII"))?;
    let dims: Vec<usize> = header
        .split_ascii_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| bad("header must be `frames columns`"))?;
    let &[frames, columns] = dims.as_slice() else {
        return Err(bad("header must be `frames columns`"));
    };
    let body = &rest[nl + 1..];
    let expected = frames
        .checked_mul(columns)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| bad("dimensions overflow"))?;
    if body.len() != expected {
        return Err(CorpusError::MalformedLogits(format!(
            "expected {expected} payload bytes, found {}",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(LogitsMatrix::new(frames, columns, values)?)
}

#[derive(Deserialize)]
struct JsonLogits {
    frames: Vec<Vec<Option<f64>>>,
}

/// Parses `{"frames": [[...], ...]}`. Rows may be probabilities or natural
/// logs; a row of values in [0, 1] summing to one can only be the former.
/// `null` stands for log 0.
pub fn parse_json_logits(text: &str) -> Result<LogitsMatrix, CorpusError> {
    let parsed: JsonLogits = serde_json::from_str(text).map_err(|e| CorpusError::MalformedLogits(e.to_string()))?;
    let rows: Vec<Vec<f64>> = parsed
        .frames
        .into_iter()
        .map(|row| {
            let is_prob = row.iter().all(|v| v.is_some_and(|p| (0.0..=1.0).contains(&p)))
                && (row.iter().flatten().sum::<f64>() - 1.0).abs() <= 1e-6;
            row.into_iter()
                .map(|v| match v {
                    None => f64::NEG_INFINITY,
                    Some(p) if is_prob => p.ln(),
                    Some(l) => l,
                })
                .collect()
        })
        .collect();
    Ok(LogitsMatrix::from_log_rows(&rows)?)
}

/// Reads CTCL1 or, when the magic is absent, the JSON form.
pub fn read_logits(path: &Path) -> Result<LogitsMatrix, CorpusError> {
    let bytes = fs::read(path).map_err(|e| CorpusError::io(path, e))?;
    if bytes.starts_with(CTCL1_MAGIC) {
        decode_ctcl1(&bytes)
    } else {
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| CorpusError::MalformedLogits("neither CTCL1 nor UTF-8 JSON".into()))?;
        parse_json_logits(text)
    }
}

pub fn write_logits(path: &Path, logits: &LogitsMatrix) -> Result<(), CorpusError> {
    fs::write(path, encode_ctcl1(logits)).map_err(|e| CorpusError::io(path, e))
}

/// One word per line, trimmed and lowercased. Blank lines and repeats are
/// dropped; first occurrence order is kept.
pub fn parse_lexicon(text: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    text.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|w| !w.is_empty() && seen.insert(w.clone()))
        .collect()
}

pub fn read_lexicon(path: &Path) -> Result<Vec<String>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let words = parse_lexicon(&text);
    if words.is_empty() {
        return Err(CorpusError::EmptyLexicon(path.display().to_string()));
    }
    Ok(words)
}

pub fn write_lexicon(path: &Path, words: &[String]) -> Result<(), CorpusError> {
    let mut text = words.join("\n");
    text.push('\n');
    fs::write(path, text).map_err(|e| CorpusError::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Utterance {
    pub id: String,
    /// Resolved against the manifest directory.
    pub logits_path: PathBuf,
    pub reference: Vec<String>,
    pub jargon_mask: Option<Vec<bool>>,
}

impl Utterance {
    pub fn marked_reference(&self) -> Option<MarkedReference> {
        self.jargon_mask.as_ref().map(|mask| MarkedReference {
            words: self.reference.clone(),
            jargon: mask.clone(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ManifestRecord {
    id: String,
    logits: String,
    reference: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    jargon_mask: Option<Vec<bool>>,
}

/// Parses manifest text. Relative logits paths are joined onto `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<Utterance>, CorpusError> {
    let mut ids = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| CorpusError::MalformedManifest { line: line_no, message };
        let rec: ManifestRecord = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        if !ids.insert(rec.id.clone()) {
            return Err(malformed(format!("duplicate id `{}`", rec.id)));
        }
        let reference: Vec<String> = rec.reference.split_whitespace().map(str::to_string).collect();
        if let Some(mask) = &rec.jargon_mask {
            if mask.len() != reference.len() {
                return Err(malformed(format!(
                    "jargon_mask has {} entries for {} reference words",
                    mask.len(),
                    reference.len()
                )));
            }
        }
        out.push(Utterance {
            id: rec.id,
            logits_path: base.join(rec.logits),
            reference,
            jargon_mask: rec.jargon_mask,
        });
    }
    Ok(out)
}

/// Reads a JSONL manifest and checks every logits file exists.
pub fn read_manifest(path: &Path) -> Result<Vec<Utterance>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let utts = parse_manifest(&text, base)?;
    if let Some(u) = utts.iter().find(|u| !u.logits_path.is_file()) {
        return Err(CorpusError::MissingLogitsFile(u.logits_path.clone()));
    }
    Ok(utts)
}

/// Renders manifest text, writing logits paths relative to `base` when they
/// live under it.
pub fn render_manifest(utts: &[Utterance], base: &Path) -> String {
    let mut out = String::new();
    for u in utts {
        let rel = u.logits_path.strip_prefix(base).unwrap_or(&u.logits_path);
        let rec = ManifestRecord {
            id: u.id.clone(),
            logits: rel.to_string_lossy().into_owned(),
            reference: u.reference.join(" "),
            jargon_mask: u.jargon_mask.clone(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("manifest record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_manifest(path: &Path, utts: &[Utterance]) -> Result<(), CorpusError> {
    let base = path.parent().unwrap_or(Path::new(""));
    fs::write(path, render_manifest(utts, base)).map_err(|e| CorpusError::io(path, e))
}

/// Markup form: color 0 bare, other colors `[J:word]` when there are two
/// colors and `[J<idx>:word]` otherwise.
pub fn render_colored(words: &[ColoredWord], num_colors: u16) -> String {
    let parts: Vec<String> = words
        .iter()
        .map(|w| match w.color.0 {
            0 => w.word.clone(),
            c if num_colors <= 2 => {
                debug_assert_eq!(c, 1);
                format!("[J:{}]", w.word)
            }
            c => format!("[J{c}:{}]", w.word),
        })
        .collect();
    parts.join(" ")
}

pub fn parse_colored(text: &str) -> Result<Vec<ColoredWord>, CorpusError> {
    let bad = |t: &str| CorpusError::MalformedTranscript(format!("bad token `{t}`"));
    text.split_whitespace()
        .map(|tok| {
            let Some(inner) = tok.strip_prefix("[J").and_then(|t| t.strip_suffix(']')) else {
                if tok.contains(['[', ']']) {
                    return Err(bad(tok));
                }
                return Ok(ColoredWord {
                    word: tok.to_string(),
                    color: ColorId::GENERAL,
                });
            };
            let (idx, word) = inner.split_once(':').ok_or_else(|| bad(tok))?;
            let color = if idx.is_empty() {
                1
            } else {
                idx.parse::<u16>().map_err(|_| bad(tok))?
            };
            if word.is_empty() || color == 0 {
                return Err(bad(tok));
            }
            Ok(ColoredWord {
                word: word.to_string(),
                color: ColorId(color),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSidecar {
    pub words: Vec<ColoredWord>,
    /// `None` when no hypothesis survived (log probability zero).
    pub score: Option<f64>,
    pub num_colors: u16,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".json");
    path.with_file_name(name)
}

/// Writes the markup line to `path` and the exact (word, color) list with
/// the score to `<path>.json`.
pub fn write_colored_transcript(t: &ColoredTranscript, num_colors: u16, path: &Path) -> Result<(), CorpusError> {
    let mut f = fs::File::create(path).map_err(|e| CorpusError::io(path, e))?;
    writeln!(f, "{}", render_colored(&t.words, num_colors)).map_err(|e| CorpusError::io(path, e))?;
    let side = sidecar_path(path);
    let sidecar = TranscriptSidecar {
        words: t.words.clone(),
        score: t.score.is_finite().then_some(t.score),
        num_colors,
    };
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    fs::write(&side, json + "\n").map_err(|e| CorpusError::io(&side, e))
}

pub fn read_colored_transcript(path: &Path) -> Result<ColoredTranscript, CorpusError> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| CorpusError::io(&side, e))?;
    let sidecar: TranscriptSidecar =
        serde_json::from_str(&text).map_err(|e| CorpusError::MalformedTranscript(e.to_string()))?;
    Ok(ColoredTranscript {
        words: sidecar.words,
        score: sidecar.score.unwrap_or(f64::NEG_INFINITY),
    })
}
