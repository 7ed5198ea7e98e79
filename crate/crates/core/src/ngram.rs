//! Backoff n-gram language models over (optionally colored) word tokens.
//!
//! Models are read from and written to ARPA text. A colored model tags every
//! token with the color of the lexicon it came from and spells it
//! `<color>:<word>` on disk, which keeps the merged file valid ARPA.

use std::fmt::{self, Write as _};

use indexmap::IndexMap;
use rustc_hash::{FxBuildHasher, FxHashMap};
use smallvec::SmallVec;

use crate::error::LmError;
use crate::lexicon::ColorId;

pub type WordId = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Token {
    pub color: Option<ColorId>,
    pub word: String,
}

impl Token {
    /// Splits the `<digits>:<word>` spelling; anything else is uncolored.
    pub fn parse(s: &str) -> Token {
        if let Some((prefix, word)) = s.split_once(':') {
            if !prefix.is_empty() && !word.is_empty() && prefix.bytes().all(|b| b.is_ascii_digit()) {
                if let Ok(c) = prefix.parse::<u16>() {
                    return Token {
                        color: Some(ColorId(c)),
                        word: word.to_string(),
                    };
                }
            }
        }
        Token {
            color: None,
            word: s.to_string(),
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.color {
            Some(c) => write!(f, "{}:{}", c.0, self.word),
            None => f.write_str(&self.word),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NgramEntry {
    pub log10_prob: f64,
    /// Absent on the highest order, and optional below it (reads as 0.0).
    pub backoff_log10: Option<f64>,
}

type Key = SmallVec<[WordId; 4]>;

#[derive(Clone, Debug, PartialEq)]
pub struct NGramModel {
    max_order: usize,
    vocab: Vec<Token>,
    index: FxHashMap<Option<ColorId>, FxHashMap<String, WordId>>,
    /// `orders[n - 1]` holds the n-grams, in file order.
    orders: Vec<IndexMap<Key, NgramEntry, FxBuildHasher>>,
}

/// The most recent `max_order - 1` words fed to a model.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LmState {
    context: SmallVec<[WordId; 4]>,
}

impl LmState {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn context(&self) -> &[WordId] {
        &self.context
    }
}

impl NGramModel {
    fn with_order(max_order: usize) -> Self {
        NGramModel {
            max_order,
            vocab: Vec::new(),
            index: FxHashMap::default(),
            orders: (0..max_order).map(|_| IndexMap::default()).collect(),
        }
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn vocab(&self) -> &[Token] {
        &self.vocab
    }

    pub fn token(&self, id: WordId) -> &Token {
        &self.vocab[id as usize]
    }

    pub fn num_ngrams(&self, order: usize) -> usize {
        self.orders.get(order.wrapping_sub(1)).map_or(0, |m| m.len())
    }

    pub fn word_id(&self, color: Option<ColorId>, word: &str) -> Option<WordId> {
        self.index.get(&color)?.get(word).copied()
    }

    /// Looks up a token in its on-disk spelling (`fever` or `1:fever`).
    pub fn lookup(&self, token: &str) -> Option<WordId> {
        let t = Token::parse(token);
        self.word_id(t.color, &t.word)
    }

    pub fn entry(&self, ids: &[WordId]) -> Option<&NgramEntry> {
        if ids.is_empty() || ids.len() > self.max_order {
            return None;
        }
        self.orders[ids.len() - 1].get(ids)
    }

    /// Iterates n-grams of one order as (ids, entry) in file order.
    pub fn ngrams(&self, order: usize) -> impl Iterator<Item = (&[WordId], &NgramEntry)> {
        self.orders[order - 1].iter().map(|(k, v)| (k.as_slice(), v))
    }

    fn intern(&mut self, token: Token) -> WordId {
        let by_color = self.index.entry(token.color).or_default();
        if let Some(&id) = by_color.get(&token.word) {
            return id;
        }
        let id = self.vocab.len() as WordId;
        by_color.insert(token.word.clone(), id);
        self.vocab.push(token);
        id
    }

    /// log10 P(word | state) by longest-match backoff, plus the next state.
    ///
    /// `None` is an out-of-vocabulary word: it scores `unk_penalty` and clears
    /// the context, since no n-gram can contain it.
    pub fn score_id(&self, state: &LmState, word: Option<WordId>, unk_penalty: f64) -> (f64, LmState) {
        let Some(word) = word else {
            return (unk_penalty, LmState::empty());
        };
        let ctx = &state.context;
        let mut backoff = 0.0;
        let mut key: Key = SmallVec::with_capacity(ctx.len() + 1);
        let mut score = None;
        for start in 0..=ctx.len() {
            let history = &ctx[start..];
            key.clear();
            key.extend_from_slice(history);
            key.push(word);
            if let Some(e) = self.entry(&key) {
                score = Some(backoff + e.log10_prob);
                break;
            }
            if let Some(bo) = self.entry(history).and_then(|e| e.backoff_log10) {
                backoff += bo;
            }
        }
        // Unigrams exist for every vocabulary id, so the loop always hits.
        let score = score.unwrap_or(unk_penalty);
        let mut next = state.clone();
        next.context.push(word);
        let keep = self.max_order - 1;
        if next.context.len() > keep {
            let drop = next.context.len() - keep;
            next.context.drain(..drop);
        }
        (score, next)
    }

    pub fn score_word(&self, state: &LmState, word: &str, unk_penalty: f64) -> (f64, LmState) {
        self.score_id(state, self.lookup(word), unk_penalty)
    }

    /// Sum of incremental scores starting from the empty context.
    pub fn sentence_logprob<S: AsRef<str>>(&self, words: &[S], unk_penalty: f64) -> f64 {
        let mut state = LmState::empty();
        let mut total = 0.0;
        for w in words {
            let (s, next) = self.score_word(&state, w.as_ref(), unk_penalty);
            total += s;
            state = next;
        }
        total
    }

    /// Builds a model from explicit n-gram listings, checking well-formedness.
    pub fn from_ngrams<I, S>(max_order: usize, ngrams: I) -> Result<Self, LmError>
    where
        I: IntoIterator<Item = (Vec<S>, NgramEntry)>,
        S: AsRef<str>,
    {
        if max_order == 0 {
            return Err(LmError::malformed(0, "order must be at least 1"));
        }
        let mut model = Self::with_order(max_order);
        let mut listed: Vec<Vec<(Vec<String>, NgramEntry)>> = vec![Vec::new(); max_order];
        for (tokens, entry) in ngrams {
            let n = tokens.len();
            if n == 0 || n > max_order {
                return Err(LmError::malformed(0, format!("n-gram of order {n}")));
            }
            listed[n - 1].push((tokens.iter().map(|t| t.as_ref().to_string()).collect(), entry));
        }
        for (i, group) in listed.into_iter().enumerate() {
            for (tokens, entry) in group {
                model.insert(i + 1, &tokens, entry, 0)?;
            }
        }
        Ok(model)
    }

    fn insert(&mut self, order: usize, tokens: &[String], entry: NgramEntry, line: usize) -> Result<(), LmError> {
        if entry.log10_prob.is_nan() || entry.log10_prob > 0.0 {
            return Err(LmError::malformed(
                line,
                format!("log10 probability {} is not <= 0", entry.log10_prob),
            ));
        }
        if order == self.max_order && entry.backoff_log10.is_some() {
            return Err(LmError::malformed(line, "backoff weight on the highest order"));
        }
        if entry.backoff_log10.is_some_and(f64::is_nan) {
            return Err(LmError::malformed(line, "backoff weight is NaN"));
        }
        let key: Key = if order == 1 {
            let id = self.intern(Token::parse(&tokens[0]));
            SmallVec::from_slice(&[id])
        } else {
            tokens
                .iter()
                .map(|t| {
                    self.lookup(t)
                        .ok_or_else(|| LmError::malformed(line, format!("token `{t}` has no unigram")))
                })
                .collect::<Result<_, _>>()?
        };
        if order > 1 && self.entry(&key[..order - 1]).is_none() {
            return Err(LmError::malformed(
                line,
                format!("context of `{}` is not listed", tokens.join(" ")),
            ));
        }
        if self.orders[order - 1].insert(key, entry).is_some() {
            return Err(LmError::malformed(
                line,
                format!("duplicate n-gram `{}`", tokens.join(" ")),
            ));
        }
        Ok(())
    }

    pub fn parse_arpa(text: &str) -> Result<Self, LmError> {
        #[derive(PartialEq)]
        enum Section {
            Preamble,
            Data,
            Grams(usize),
            End,
        }
        let mut section = Section::Preamble;
        let mut counts: Vec<(usize, usize)> = Vec::new();
        let mut model: Option<NGramModel> = None;
        let mut seen_orders = Vec::new();
        let mut last_line = 0;

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            last_line = line_no;
            let line = raw.trim();
            if section == Section::End {
                if !line.is_empty() {
                    return Err(LmError::malformed(line_no, "content after \\end\\"));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            if line == "\\data\\" {
                if section != Section::Preamble {
                    return Err(LmError::malformed(line_no, "repeated \\data\\"));
                }
                section = Section::Data;
                continue;
            }
            if line == "\\end\\" {
                if model.is_none() {
                    return Err(LmError::malformed(line_no, "\\end\\ before any n-gram section"));
                }
                section = Section::End;
                continue;
            }
            if let Some(n) = parse_section_header(line) {
                let n = n.map_err(|m| LmError::malformed(line_no, m))?;
                if section == Section::Preamble {
                    return Err(LmError::malformed(line_no, "n-gram section before \\data\\"));
                }
                if model.is_none() {
                    if counts.is_empty() {
                        return Err(LmError::malformed(line_no, "no ngram counts in \\data\\"));
                    }
                    for (k, &(order, _)) in counts.iter().enumerate() {
                        if order != k + 1 {
                            return Err(LmError::malformed(line_no, "ngram counts must list orders 1..N"));
                        }
                    }
                    model = Some(NGramModel::with_order(counts.len()));
                }
                let expected = seen_orders.len() + 1;
                if n != expected {
                    return Err(LmError::malformed(
                        line_no,
                        format!("expected \\{expected}-grams:, found \\{n}-grams:"),
                    ));
                }
                if let Section::Grams(prev) = section {
                    check_count(&model, &counts, prev, line_no)?;
                }
                seen_orders.push(n);
                section = Section::Grams(n);
                continue;
            }
            match section {
                Section::Preamble => continue,
                Section::Data => {
                    let rest = line
                        .strip_prefix("ngram ")
                        .ok_or_else(|| LmError::malformed(line_no, format!("unexpected line in \\data\\: `{line}`")))?;
                    let (order, count) = rest
                        .split_once('=')
                        .ok_or_else(|| LmError::malformed(line_no, "ngram count line lacks `=`"))?;
                    let order: usize = order
                        .trim()
                        .parse()
                        .map_err(|_| LmError::malformed(line_no, "non-numeric order"))?;
                    let count: usize = count
                        .trim()
                        .parse()
                        .map_err(|_| LmError::malformed(line_no, "non-numeric count"))?;
                    counts.push((order, count));
                }
                Section::Grams(n) => {
                    let model = model.as_mut().expect("created at first section");
                    let fields: Vec<&str> = line.split_whitespace().collect();
                    if fields.len() != n + 1 && fields.len() != n + 2 {
                        return Err(LmError::malformed(line_no, format!("expected {n} tokens in `{line}`")));
                    }
                    let prob = parse_float(fields[0], line_no)?;
                    let backoff = match fields.get(n + 1) {
                        Some(f) => Some(parse_float(f, line_no)?),
                        None => None,
                    };
                    let tokens: Vec<String> = fields[1..=n].iter().map(|s| s.to_string()).collect();
                    model.insert(
                        n,
                        &tokens,
                        NgramEntry {
                            log10_prob: prob,
                            backoff_log10: backoff,
                        },
                        line_no,
                    )?;
                }
                Section::End => unreachable!(),
            }
        }
        if section != Section::End {
            return Err(LmError::malformed(last_line, "missing \\end\\"));
        }
        let n = *seen_orders.last().expect("end requires a section");
        check_count(&model, &counts, n, last_line)?;
        if seen_orders.len() != counts.len() {
            return Err(LmError::malformed(
                last_line,
                format!("header declares {} orders, found {}", counts.len(), seen_orders.len()),
            ));
        }
        Ok(model.expect("checked above"))
    }

    pub fn to_arpa(&self) -> String {
        let mut out = String::from("\\data\\\n");
        for (i, grams) in self.orders.iter().enumerate() {
            let _ = writeln!(out, "ngram {}={}", i + 1, grams.len());
        }
        for (i, grams) in self.orders.iter().enumerate() {
            let _ = write!(out, "\n\\{}-grams:\n", i + 1);
            for (key, entry) in grams {
                let _ = write!(out, "{}\t", entry.log10_prob);
                for (j, id) in key.iter().enumerate() {
                    if j > 0 {
                        out.push(' ');
                    }
                    let _ = write!(out, "{}", self.vocab[*id as usize]);
                }
                if let Some(bo) = entry.backoff_log10 {
                    let _ = write!(out, "\t{bo}");
                }
                out.push('\n');
            }
        }
        out.push_str("\n\\end\\\n");
        out
    }

    /// Disjoint union of the inputs, every token re-tagged with its model's
    /// color. Queries whose context is all one color reproduce the source
    /// model exactly; mixed contexts find no n-gram and back off.
    pub fn merge_colored(models: &[(&NGramModel, ColorId)]) -> Result<NGramModel, LmError> {
        let max_order = models.iter().map(|(m, _)| m.max_order).max().unwrap_or(1);
        let mut merged = NGramModel::with_order(max_order);
        for &(model, color) in models {
            let mut remap = Vec::with_capacity(model.vocab.len());
            for token in &model.vocab {
                let colored = Token {
                    color: Some(color),
                    word: token.word.clone(),
                };
                if merged.word_id(colored.color, &colored.word).is_some() {
                    return Err(LmError::DuplicateColoredToken {
                        token: token.word.clone(),
                        color: color.0,
                    });
                }
                remap.push(merged.intern(colored));
            }
            for (order, grams) in model.orders.iter().enumerate() {
                let highest_merged = order + 1 == max_order;
                for (key, entry) in grams {
                    let mapped: Key = key.iter().map(|&id| remap[id as usize]).collect();
                    let mut entry = *entry;
                    if highest_merged {
                        entry.backoff_log10 = None;
                    }
                    merged.orders[order].insert(mapped, entry);
                }
            }
        }
        Ok(merged)
    }
}

fn parse_section_header(line: &str) -> Option<Result<usize, String>> {
    let inner = line.strip_prefix('\\')?.strip_suffix("-grams:")?;
    Some(
        inner
            .parse::<usize>()
            .map_err(|_| format!("bad section header `{line}`")),
    )
}

fn parse_float(s: &str, line: usize) -> Result<f64, LmError> {
    s.parse::<f64>()
        .map_err(|_| LmError::malformed(line, format!("non-numeric value `{s}`")))
}

fn check_count(
    model: &Option<NGramModel>,
    counts: &[(usize, usize)],
    order: usize,
    line: usize,
) -> Result<(), LmError> {
    let declared = counts
        .get(order - 1)
        .map(|&(_, c)| c)
        .ok_or_else(|| LmError::malformed(line, format!("no count declared for order {order}")))?;
    let found = model.as_ref().map_or(0, |m| m.num_ngrams(order));
    if declared != found {
        return Err(LmError::malformed(
            line,
            format!("header declares {declared} {order}-grams, section lists {found}"),
        ));
    }
    Ok(())
}
