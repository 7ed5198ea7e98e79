//! Colored CTC beam search for mixed general/jargon speech.
//!
//! A general language model and one or more domain ("jargon") models are
//! combined by tagging every decoded word with the lexicon it came from. The
//! decoder is a CTC prefix beam search whose word-start step may enter any
//! lexicon while the rest of the word stays inside the lexicon it started in.

pub mod corpus;
pub mod decoder;
pub mod error;
pub mod fusion;
pub mod lexicon;
pub mod logprob;
pub mod metrics;
pub mod ngram;
pub mod oracle;
pub mod synth;

pub use decoder::{decode, decode_with_stats, ColoredTranscript, ColoredWord, DecoderConfig, LogitsMatrix};
pub use error::{CorpusError, DecodeError, LexiconError, LmError, MetricsError, OracleError, ScorerError};
pub use fusion::{FusionKind, Scorer, ScorerConfig};
pub use lexicon::{ColorId, ColoredAlphabet, ColoredChar, ColoredLexicon, Lexicon, LexiconTrie, WordCursor};
pub use ngram::{LmState, NGramModel, NgramEntry, Token};
