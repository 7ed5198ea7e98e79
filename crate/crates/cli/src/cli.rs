//! Argument parsing and the subcommands.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use colordecode::corpus::{read_logits, render_colored, write_colored_transcript, write_lexicon};
use colordecode::metrics::EvalReport;
use colordecode::synth::{builtin_lexicons, estimate_backoff_lm, synthesize_corpus, SynthesisSpec, SyntheticDomain};
use colordecode::{decode, ColorId, ColoredAlphabet, DecoderConfig, FusionKind, NGramModel, ScorerConfig};
use serde::Serialize;

use crate::verify::{self, Shape};
use crate::{
    best_row, decode_corpus, grid_search, load_corpus, load_resources, references, score_corpus, usage, with_jobs,
    GridRow, GridSpec, MethodConfig, Resources, DEFAULT_BEAM_WIDTH,
};

#[derive(Parser, Debug)]
#[command(
    name = "color-decode",
    version,
    about = "Colored CTC beam search over general and jargon lexicons"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decode one logits file.
    Decode(DecodeArgs),
    /// Score fusion methods on a manifest.
    Eval(EvalArgs),
    /// Search hyperparameters on a validation manifest.
    Gridsearch(GridArgs),
    /// Merge ARPA models into one colored model.
    MergeLm(MergeArgs),
    /// Write a synthetic mixed-speech corpus with lexicons and models.
    Synth(SynthArgs),
    /// Compare beam search with exhaustive search on random small instances.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ResourceArgs {
    /// Lexicon file, one word per line. Repeat for more colors; the first is general.
    #[arg(long = "lexicon")]
    pub lexicons: Vec<PathBuf>,
    /// ARPA model paired with the lexicon at the same position.
    #[arg(long = "lm")]
    pub lms: Vec<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ScorerArgs {
    /// Language model weight.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Per-word insertion bonus.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub beta: f64,
    /// Interpolation weight on the jargon model.
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// log10 score of an unknown word, per model, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "-10", allow_hyphen_values = true)]
    pub unk_word_penalty: Vec<f64>,
    /// log10 cost per character spelled outside the lexicon; unset keeps
    /// decoding inside the lexicon.
    #[arg(long, allow_negative_numbers = true)]
    pub unk_subword_penalty: Option<f64>,
    /// Number of bins per axis for `--fusion bins`.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Manifest whose references calibrate `--fusion bins`.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Color prior, comma separated; uniform when unset.
    #[arg(long, value_delimiter = ',')]
    pub color_prior: Option<Vec<f64>>,
}

impl ScorerArgs {
    fn method(&self, kind: FusionKind) -> MethodConfig {
        MethodConfig {
            kind,
            scorer: ScorerConfig {
                alpha: self.alpha,
                beta: self.beta,
                unknown_word_penalty: self.unk_word_penalty.clone(),
                unknown_subword_penalty: self.unk_subword_penalty,
                lambda: self.lambda,
                color_prior: self.color_prior.clone(),
            },
            bins: self.bins,
        }
    }

    fn calibration(&self) -> Result<Option<Vec<Vec<String>>>> {
        self.calibration
            .as_deref()
            .map(|p| load_corpus(p).map(|u| references(&u)))
            .transpose()
    }
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    /// CTCL1 or JSON logits file.
    #[arg(long)]
    pub logits: PathBuf,
    #[command(flatten)]
    pub resources: ResourceArgs,
    #[arg(long, default_value = "coloring")]
    pub fusion: FusionKind,
    #[command(flatten)]
    pub scorer: ScorerArgs,
    #[arg(long, default_value_t = DEFAULT_BEAM_WIDTH)]
    pub beam_width: usize,
    /// Transcript path; a `.json` sidecar is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub resources: ResourceArgs,
    /// Fusion method; repeat to compare several in one run.
    #[arg(long = "fusion")]
    pub fusions: Vec<FusionKind>,
    #[command(flatten)]
    pub scorer: ScorerArgs,
    /// JSON list of method configurations (as written by `gridsearch
    /// --best-out`); one report row each, after any `--fusion` rows.
    #[arg(long)]
    pub configs: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BEAM_WIDTH)]
    pub beam_width: usize,
    /// Decoding threads.
    #[arg(long, env = "COLOR_DECODE_JOBS", default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub report: ReportFormat,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write every hypothesis as JSON lines here.
    #[arg(long)]
    pub hyps: Option<PathBuf>,
}

/// A sub-word penalty grid value: a number or `none`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Penalty(pub Option<f64>);

impl FromStr for Penalty {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("none") {
            return Ok(Penalty(None));
        }
        s.parse()
            .map(|v| Penalty(Some(v)))
            .map_err(|_| format!("`{s}` is neither a number nor `none`"))
    }
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("none"),
        }
    }
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[arg(long)]
    pub manifest_val: PathBuf,
    #[command(flatten)]
    pub resources: ResourceArgs,
    /// Methods to tune; every method the given models support when absent.
    #[arg(long = "fusion")]
    pub fusions: Vec<FusionKind>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.75, 1.0, 1.25, 1.5])]
    pub alpha_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.75, 1.0, 1.25, 1.5], allow_hyphen_values = true)]
    pub beta_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.75])]
    pub lambda_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [-10.0, -50.0], allow_hyphen_values = true)]
    pub unk_word_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true,
          default_values_t = [Penalty(Some(-7.0)), Penalty(Some(-5.0)), Penalty(Some(-3.0)), Penalty(Some(-1.0)), Penalty(Some(0.0))])]
    pub unk_subword_grid: Vec<Penalty>,
    #[arg(long, value_delimiter = ',', default_values_t = [53, 100])]
    pub bins_grid: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_BEAM_WIDTH)]
    pub beam_width: usize,
    #[arg(long, env = "COLOR_DECODE_JOBS", default_value_t = 1)]
    pub jobs: usize,
    /// Every evaluated configuration as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Best configuration per method as JSON, usable with `eval --configs`.
    #[arg(long)]
    pub best_out: Option<PathBuf>,
}

impl GridArgs {
    fn grid(&self) -> GridSpec {
        GridSpec {
            alpha: self.alpha_grid.clone(),
            beta: self.beta_grid.clone(),
            lambda: self.lambda_grid.clone(),
            unknown_word: self.unk_word_grid.clone(),
            unknown_subword: self.unk_subword_grid.iter().map(|p| p.0).collect(),
            bins: self.bins_grid.clone(),
        }
    }
}

#[derive(Args, Debug)]
pub struct MergeArgs {
    /// ARPA model; position i becomes color i.
    #[arg(long = "lm", required = true)]
    pub lms: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Lexicon files, general first; built-in English lists when absent.
    #[arg(long = "lexicon")]
    pub lexicons: Vec<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub sentences: usize,
    #[arg(long, default_value_t = 0.3)]
    pub jargon_rate: f64,
    #[arg(long, default_value_t = 0.25)]
    pub noise: f64,
    #[arg(long, default_value_t = 1)]
    pub frames_per_char: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Order of the trained models.
    #[arg(long, default_value_t = 3)]
    pub lm_order: usize,
    /// Training sentences for the general model.
    #[arg(long, default_value_t = 5000)]
    pub general_lm_sentences: usize,
    /// Training sentences for each jargon model.
    #[arg(long, default_value_t = 400)]
    pub jargon_lm_sentences: usize,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub max_frames: usize,
    /// Alphabet size including the separator.
    #[arg(long, default_value_t = 3)]
    pub max_chars: usize,
    #[arg(long, default_value_t = 2)]
    pub colors: usize,
    #[arg(long, default_value_t = 3)]
    pub max_words: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub beta: f64,
}

pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<()> {
    match cli.command {
        Command::Decode(a) => cmd_decode(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Gridsearch(a) => cmd_gridsearch(a, out),
        Command::MergeLm(a) => cmd_merge_lm(a, out),
        Command::Synth(a) => cmd_synth(a, out),
        Command::Verify(a) => cmd_verify(a, out),
    }
}

fn resources(args: &ResourceArgs) -> Result<Resources> {
    load_resources(&args.lexicons, &args.lms)
}

fn format_score(score: f64) -> String {
    if score.is_finite() {
        format!("{score:.6}")
    } else {
        "-inf".into()
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn cmd_decode(a: DecodeArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let res = resources(&a.resources)?;
    let method = a.scorer.method(a.fusion);
    let calibration = a.scorer.calibration()?;
    let setup = res.setup(&method, calibration.as_deref())?;
    let logits = read_logits(&a.logits)?;
    let t = decode(
        &logits,
        &DecoderConfig::new(&setup.scorer, &setup.lexicon, a.beam_width),
    )?;
    let colors = setup.lexicon.num_colors();
    if let Some(path) = &a.out {
        write_colored_transcript(&t, colors, path)?;
    }
    writeln!(out, "{}", render_colored(&t.words, colors))?;
    writeln!(out, "score\t{}", format_score(t.score))?;
    Ok(())
}

#[derive(Serialize)]
struct HypLine<'a> {
    id: &'a str,
    method: &'a str,
    text: String,
    score: Option<f64>,
}

pub fn cmd_eval(a: EvalArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let res = resources(&a.resources)?;
    let mut methods: Vec<MethodConfig> = a.fusions.iter().map(|&k| a.scorer.method(k)).collect();
    if let Some(path) = &a.configs {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let extra: Vec<MethodConfig> =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        methods.extend(extra);
    }
    if methods.is_empty() {
        methods.push(a.scorer.method(FusionKind::Coloring));
    }
    let utts = load_corpus(&a.manifest)?;
    let calibration = a.scorer.calibration()?;
    let mut report = EvalReport::default();
    let mut hyp_lines = String::new();
    for method in &methods {
        let setup = res.setup(method, calibration.as_deref())?;
        let hyps = with_jobs(a.jobs, || decode_corpus(&setup, &utts, a.beam_width))??;
        let name = method.kind.name();
        report.rows.push(score_corpus(name, &utts, &hyps)?);
        let colors = setup.lexicon.num_colors();
        for (u, h) in utts.iter().zip(&hyps) {
            let line = HypLine {
                id: &u.id,
                method: name,
                text: render_colored(&h.words, colors),
                score: h.score.is_finite().then_some(h.score),
            };
            hyp_lines.push_str(&serde_json::to_string(&line)?);
            hyp_lines.push('\n');
        }
    }
    let rendered = match a.report {
        ReportFormat::Text => report.to_table(),
        ReportFormat::Json => report.to_json() + "\n",
    };
    out.write_all(rendered.as_bytes())?;
    if let Some(path) = &a.out {
        write_file(path, &rendered)?;
    }
    if let Some(path) = &a.hyps {
        write_file(path, &hyp_lines)?;
    }
    Ok(())
}

fn supported_kinds(res: &Resources) -> Vec<FusionKind> {
    FusionKind::ALL
        .into_iter()
        .filter(|&k| match k {
            FusionKind::General => true,
            FusionKind::Coloring => res.models.len() == res.lexicons.len(),
            _ => res.models.len() >= 2 && res.lexicons.len() >= 2,
        })
        .collect()
}

pub fn cmd_gridsearch(a: GridArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let res = resources(&a.resources)?;
    let grid = a.grid();
    grid.validate()?;
    let kinds = if a.fusions.is_empty() {
        supported_kinds(&res)
    } else {
        a.fusions.clone()
    };
    let utts = load_corpus(&a.manifest_val)?;
    let sizes: Vec<(FusionKind, usize)> = kinds.iter().map(|&k| (k, grid.configs(k).len())).collect();
    let total: usize = sizes.iter().map(|s| s.1).sum();
    eprintln!(
        "grid: {total} configurations ({})",
        sizes
            .iter()
            .map(|(k, n)| format!("{k} {n}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    let mut all_rows: Vec<GridRow> = Vec::new();
    let mut best: Vec<MethodConfig> = Vec::new();
    for &kind in &kinds {
        let rows = with_jobs(a.jobs, || grid_search(&res, kind, &grid, &utts, a.beam_width))??;
        let b = &rows[best_row(&rows).expect("nonempty grid")];
        writeln!(
            out,
            "{kind}\tWER {:.2}\tCER {:.2}\t{}",
            b.wer,
            b.cer,
            serde_json::to_string(&b.config)?
        )?;
        best.push(b.config.clone());
        all_rows.extend(rows);
    }
    if let Some(path) = &a.out {
        write_file(path, &(serde_json::to_string_pretty(&all_rows)? + "\n"))?;
    }
    if let Some(path) = &a.best_out {
        write_file(path, &(serde_json::to_string_pretty(&best)? + "\n"))?;
    }
    Ok(())
}

pub fn cmd_merge_lm(a: MergeArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let models = a
        .lms
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            NGramModel::parse_arpa(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let tagged: Vec<(&NGramModel, ColorId)> = models.iter().zip(0..).map(|(m, i)| (m, ColorId(i))).collect();
    let merged = NGramModel::merge_colored(&tagged)?;
    write_file(&a.out, &merged.to_arpa())?;
    writeln!(out, "merged {} model(s) into {}", models.len(), a.out.display())?;
    Ok(())
}

/// Seeds for model training text; fixed so corpora drawn with different
/// `--seed` values share models.
const GENERAL_TEXT_SEED: u64 = 1;
const JARGON_TEXT_SEED: u64 = 2;
pub const LM_DISCOUNT: f64 = 0.7;

/// Models trained on the domain's own text.
pub fn train_domain_models(
    domain: &SyntheticDomain,
    order: usize,
    general_sentences: usize,
    jargon_sentences: usize,
) -> Result<Vec<Arc<NGramModel>>> {
    let mut models = vec![Arc::new(estimate_backoff_lm(
        &domain.general_text(general_sentences, GENERAL_TEXT_SEED),
        order,
        LM_DISCOUNT,
    )?)];
    for i in 0..domain.num_jargon() {
        let text = domain.jargon_text(i, jargon_sentences, JARGON_TEXT_SEED + i as u64);
        models.push(Arc::new(estimate_backoff_lm(&text, order, LM_DISCOUNT)?));
    }
    Ok(models)
}

pub fn cmd_synth(a: SynthArgs, out: &mut dyn std::io::Write) -> Result<()> {
    if a.lm_order == 0 {
        return usage("--lm-order must be at least 1");
    }
    let lexicons: Vec<Vec<String>> = if a.lexicons.is_empty() {
        builtin_lexicons().to_vec()
    } else {
        a.lexicons
            .iter()
            .map(|p| colordecode::corpus::read_lexicon(p).map_err(anyhow::Error::from))
            .collect::<Result<_>>()?
    };
    let spec = SynthesisSpec {
        general_sentences: a.sentences,
        jargon_insertion_rate: a.jargon_rate,
        noise_level: a.noise,
        frames_per_char: a.frames_per_char,
        rng_seed: a.seed,
    };
    if let Err(e) = spec.validate() {
        return usage(e.to_string());
    }
    let alphabet = ColoredAlphabet::english(1);
    let corpus = synthesize_corpus(&spec, &lexicons, &alphabet)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    corpus.write(&a.out_dir)?;
    let domain = SyntheticDomain::new(&lexicons)?;
    let models = train_domain_models(&domain, a.lm_order, a.general_lm_sentences, a.jargon_lm_sentences)?;
    for (i, (lex, lm)) in lexicons.iter().zip(&models).enumerate() {
        write_lexicon(&a.out_dir.join(format!("lexicon-{i}.txt")), lex)?;
        write_file(&a.out_dir.join(format!("lm-{i}.arpa")), &lm.to_arpa())?;
    }
    writeln!(
        out,
        "wrote {} utterances to {} (jargon fraction {:.3})",
        corpus.utterances.len(),
        a.out_dir.display(),
        corpus.jargon_fraction()
    )?;
    Ok(())
}

pub fn cmd_verify(a: VerifyArgs, out: &mut dyn std::io::Write) -> Result<()> {
    if a.max_frames == 0 || a.max_chars < 2 || a.colors == 0 || a.max_words == 0 {
        return usage("verify needs at least one frame, two characters, one color and one word");
    }
    let shape = Shape {
        max_frames: a.max_frames,
        max_chars: a.max_chars,
        colors: a.colors,
        max_words: a.max_words,
        max_word_len: 2,
    };
    let config = ScorerConfig {
        alpha: a.alpha,
        beta: a.beta,
        ..ScorerConfig::default()
    };
    let report = verify::verify(a.instances, a.seed, shape, &config);
    writeln!(out, "{}", serde_json::to_string(&report)?)?;
    if report.mismatches > 0 {
        anyhow::bail!(
            "{} of {} instances disagree with the oracle",
            report.mismatches,
            report.instances
        );
    }
    Ok(())
}
