//! Plumbing behind the `color-decode` binary: per-method decoder setup,
//! corpus evaluation and hyperparameter grid search.

pub mod cli;
pub mod verify;

use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use colordecode::corpus::{read_logits, read_manifest};
use colordecode::fusion::{calibration_pairs, BinTable};
use colordecode::metrics::{MarkedReference, ReportRow};
use colordecode::{
    decode, ColoredLexicon, ColoredTranscript, DecoderConfig, FusionKind, LogitsMatrix, NGramModel, Scorer,
    ScorerConfig,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_BEAM_WIDTH: usize = 64;
pub const CALIBRATION_DISTRACTORS: usize = 5;

/// Raised for bad flag combinations; the binary maps it to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

/// Lexicons and language models in color order: general first.
#[derive(Clone, Debug)]
pub struct Resources {
    pub base_chars: Vec<char>,
    pub separator: char,
    pub lexicons: Vec<Vec<String>>,
    pub models: Vec<Arc<NGramModel>>,
}

/// One fusion method with all of its settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub kind: FusionKind,
    #[serde(flatten)]
    pub scorer: ScorerConfig,
    /// Bin count for `bins`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
}

pub struct Setup {
    pub scorer: Scorer,
    pub lexicon: ColoredLexicon,
}

pub fn english_chars() -> Vec<char> {
    colordecode::ColoredAlphabet::english(1).base_chars().to_vec()
}

impl Resources {
    pub fn new(lexicons: Vec<Vec<String>>, models: Vec<Arc<NGramModel>>) -> Self {
        Resources {
            base_chars: english_chars(),
            separator: ' ',
            lexicons,
            models,
        }
    }

    /// Word lists the decoder may emit for `kind`, one per color: each
    /// single model keeps its own lexicon, interpolations search the union
    /// of the two, coloring keeps every lexicon under its own color.
    pub fn word_lists(&self, kind: FusionKind) -> Result<Vec<Vec<String>>> {
        let need = |n: usize| -> Result<()> {
            if self.lexicons.len() < n {
                return usage(format!(
                    "fusion `{kind}` needs {n} --lexicon flag(s), got {}",
                    self.lexicons.len()
                ));
            }
            Ok(())
        };
        Ok(match kind {
            FusionKind::General => {
                need(1)?;
                vec![self.lexicons[0].clone()]
            }
            FusionKind::Jargon => {
                need(2)?;
                vec![self.lexicons[1].clone()]
            }
            FusionKind::Coloring => {
                need(1)?;
                self.lexicons.clone()
            }
            _ => {
                need(2)?;
                let mut union = self.lexicons[0].clone();
                let seen: std::collections::HashSet<String> = union.iter().cloned().collect();
                union.extend(self.lexicons[1].iter().filter(|w| !seen.contains(*w)).cloned());
                vec![union]
            }
        })
    }

    fn check_models(&self, kind: FusionKind) -> Result<()> {
        let needed = match kind {
            FusionKind::General => 1,
            FusionKind::Coloring => self.lexicons.len(),
            _ => 2,
        };
        if self.models.len() < needed {
            return usage(format!(
                "fusion `{kind}` needs {needed} --lm flag(s), got {}",
                self.models.len()
            ));
        }
        if kind == FusionKind::Coloring && self.models.len() != self.lexicons.len() {
            return usage(format!(
                "coloring pairs --lm with --lexicon by position: {} vs {}",
                self.models.len(),
                self.lexicons.len()
            ));
        }
        Ok(())
    }

    /// Scorer and lexicon for one method. `calibration` supplies reference
    /// sentences for fitting the bin table.
    pub fn setup(&self, method: &MethodConfig, calibration: Option<&[Vec<String>]>) -> Result<Setup> {
        let kind = method.kind;
        self.check_models(kind)?;
        let lists = self.word_lists(kind)?;
        let bins = if kind == FusionKind::Bins {
            let Some(n) = method.bins else {
                return usage("fusion `bins` needs --bins");
            };
            let Some(sentences) = calibration else {
                return usage("fusion `bins` needs calibration references (--calibration)");
            };
            let unk = (method.scorer.unk_penalty(0), method.scorer.unk_penalty(1));
            let pairs = calibration_pairs(
                &self.models[0],
                &self.models[1],
                sentences,
                unk,
                CALIBRATION_DISTRACTORS,
                0,
            );
            Some(BinTable::fit(&pairs, n)?)
        } else {
            None
        };
        let models = if kind == FusionKind::Coloring {
            &self.models[..self.lexicons.len()]
        } else {
            &self.models[..]
        };
        let scorer = Scorer::new(kind, models, method.scorer.clone(), bins)?;
        let off = method.scorer.unknown_subword_penalty.is_some();
        let lexicon = ColoredLexicon::from_word_lists(self.base_chars.clone(), self.separator, &lists, off)?;
        Ok(Setup { scorer, lexicon })
    }
}

#[derive(Clone, Debug)]
pub struct LoadedUtterance {
    pub id: String,
    pub logits: LogitsMatrix,
    pub reference: Vec<String>,
    pub marks: Option<MarkedReference>,
}

pub fn load_corpus(manifest: &Path) -> Result<Vec<LoadedUtterance>> {
    let utts = read_manifest(manifest).with_context(|| format!("reading manifest {}", manifest.display()))?;
    utts.into_iter()
        .map(|u| {
            let logits = read_logits(&u.logits_path).with_context(|| format!("utterance {}", u.id))?;
            Ok(LoadedUtterance {
                marks: u.marked_reference(),
                id: u.id,
                logits,
                reference: u.reference,
            })
        })
        .collect()
}

/// Runs `f` on a pool of `jobs` threads.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("building thread pool")?;
    Ok(pool.install(f))
}

/// Decodes every utterance; results come back in input order whatever the
/// thread count.
pub fn decode_corpus(setup: &Setup, utts: &[LoadedUtterance], beam_width: usize) -> Result<Vec<ColoredTranscript>> {
    let config = DecoderConfig::new(&setup.scorer, &setup.lexicon, beam_width);
    utts.par_iter()
        .map(|u| decode(&u.logits, &config).with_context(|| format!("decoding utterance {}", u.id)))
        .collect()
}

pub fn score_corpus(method: &str, utts: &[LoadedUtterance], hyps: &[ColoredTranscript]) -> Result<ReportRow> {
    let refs: Vec<Vec<String>> = utts.iter().map(|u| u.reference.clone()).collect();
    let marks: Option<Vec<MarkedReference>> = utts.iter().map(|u| u.marks.clone()).collect();
    let hyp_words: Vec<Vec<&str>> = hyps
        .iter()
        .map(|h| h.words.iter().map(|w| w.word.as_str()).collect())
        .collect();
    Ok(ReportRow::evaluate(method, &refs, marks.as_deref(), &hyp_words)?)
}

pub fn references(utts: &[LoadedUtterance]) -> Vec<Vec<String>> {
    utts.iter().map(|u| u.reference.clone()).collect()
}

/// Value lists for the grid search. Dimensions a method ignores are not
/// crossed for it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub unknown_word: Vec<f64>,
    /// `None` keeps decoding inside the lexicon.
    pub unknown_subword: Vec<Option<f64>>,
    pub bins: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            alpha: vec![0.5, 0.75, 1.0, 1.25, 1.5],
            beta: vec![0.5, 0.75, 1.0, 1.25, 1.5],
            lambda: vec![0.25, 0.5, 0.75],
            unknown_word: vec![-10.0, -50.0],
            unknown_subword: vec![Some(-7.0), Some(-5.0), Some(-3.0), Some(-1.0), Some(0.0)],
            bins: vec![53, 100],
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let lists = [
            ("alpha", self.alpha.len()),
            ("beta", self.beta.len()),
            ("lambda", self.lambda.len()),
            ("unknown-word", self.unknown_word.len()),
            ("unknown-subword", self.unknown_subword.len()),
            ("bins", self.bins.len()),
        ];
        if let Some((name, _)) = lists.iter().find(|(_, n)| *n == 0) {
            return usage(format!("grid for {name} is empty"));
        }
        Ok(())
    }

    /// Cross product for one method, in a fixed nesting order.
    pub fn configs(&self, kind: FusionKind) -> Vec<MethodConfig> {
        let lambdas = if kind.uses_lambda() {
            self.lambda.clone()
        } else {
            vec![0.5]
        };
        let bins: Vec<Option<usize>> = if kind == FusionKind::Bins {
            self.bins.iter().map(|&b| Some(b)).collect()
        } else {
            vec![None]
        };
        let mut out = Vec::new();
        for &alpha in &self.alpha {
            for &beta in &self.beta {
                for &lambda in &lambdas {
                    for &unk in &self.unknown_word {
                        for &sub in &self.unknown_subword {
                            for &b in &bins {
                                out.push(MethodConfig {
                                    kind,
                                    scorer: ScorerConfig {
                                        alpha,
                                        beta,
                                        unknown_word_penalty: vec![unk],
                                        unknown_subword_penalty: sub,
                                        lambda,
                                        color_prior: None,
                                    },
                                    bins: b,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub config: MethodConfig,
    pub cer: f64,
    pub wer: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jargon_wer: Option<f64>,
}

/// Index of the lowest WER row, CER breaking ties, earliest row winning
/// exact ties.
pub fn best_row(rows: &[GridRow]) -> Option<usize> {
    (0..rows.len()).min_by(|&a, &b| {
        rows[a]
            .wer
            .total_cmp(&rows[b].wer)
            .then(rows[a].cer.total_cmp(&rows[b].cer))
            .then(a.cmp(&b))
    })
}

/// Evaluates every configuration of `kind` on `utts`. Calibration for the
/// bin method uses the same references.
pub fn grid_search(
    resources: &Resources,
    kind: FusionKind,
    grid: &GridSpec,
    utts: &[LoadedUtterance],
    beam_width: usize,
) -> Result<Vec<GridRow>> {
    let refs = references(utts);
    grid.configs(kind)
        .into_iter()
        .map(|config| {
            let setup = resources.setup(&config, Some(&refs))?;
            let hyps = decode_corpus(&setup, utts, beam_width)?;
            let row = score_corpus(kind.name(), utts, &hyps)?;
            Ok(GridRow {
                config,
                cer: row.cer,
                wer: row.wer,
                jargon_wer: row.jargon_wer,
            })
        })
        .collect()
}

/// Reads lexicon and ARPA files, pairing them by position.
pub fn load_resources(lexicons: &[impl AsRef<Path>], lms: &[impl AsRef<Path>]) -> Result<Resources> {
    let lexicons = lexicons
        .iter()
        .map(|p| colordecode::corpus::read_lexicon(p.as_ref()).map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    let models = lms
        .iter()
        .map(|p| {
            let p = p.as_ref();
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let model = NGramModel::parse_arpa(&text).with_context(|| format!("parsing {}", p.display()))?;
            Ok(Arc::new(model))
        })
        .collect::<Result<Vec<_>>>()?;
    if lexicons.is_empty() {
        bail!(UsageError("at least one --lexicon is required".into()));
    }
    Ok(Resources::new(lexicons, models))
}
