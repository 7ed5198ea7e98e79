use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LmError {
    #[error("malformed ARPA at line {line}: {message}")]
    MalformedArpa { line: usize, message: String },
    #[error("token `{token}` with color {color} supplied by more than one model")]
    DuplicateColoredToken { token: String, color: u16 },
}

impl LmError {
    pub(crate) fn malformed(line: usize, message: impl Into<String>) -> Self {
        LmError::MalformedArpa {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LexiconError {
    #[error("character {0:?} is not in the alphabet")]
    UnknownChar(char),
    #[error("word `{word}` contains character {ch:?} outside the alphabet")]
    InvalidWordChar { word: String, ch: char },
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("color {color} out of range for {num_colors} colors")]
    ColorOutOfRange { color: u16, num_colors: u16 },
}

#[derive(Debug, Error, PartialEq)]
pub enum ScorerError {
    #[error("fusion `{kind}` needs {needed} language model(s), got {got}")]
    MissingModel {
        kind: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("fusion `bins` needs a calibrated bin table")]
    MissingBinTable,
    #[error("bin calibration needs at least one pair")]
    EmptyCalibration,
    #[error("invalid scorer configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Lm(#[from] LmError),
}

#[derive(Debug, Error, PartialEq)]
pub enum DecodeError {
    #[error("logits have {got} columns, alphabet expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("frame {frame} probabilities sum to {sum}, expected 1")]
    NotNormalized { frame: usize, sum: f64 },
    #[error("invalid decoder configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("{refs} references but {hyps} hypotheses")]
    LengthMismatch { refs: usize, hyps: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("labeling of length {len} cannot be emitted in {frames} frames")]
    LabelTooLong { len: usize, frames: usize },
    #[error("instance has more than {limit} candidate labelings")]
    InstanceTooLarge { limit: usize },
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed manifest at line {line}: {message}")]
    MalformedManifest { line: usize, message: String },
    #[error("logits file {0} does not exist")]
    MissingLogitsFile(PathBuf),
    #[error("malformed logits file: {0}")]
    MalformedLogits(String),
    #[error("malformed transcript: {0}")]
    MalformedTranscript(String),
    #[error("lexicon {0} is empty")]
    EmptyLexicon(String),
    #[error("invalid synthesis settings: {0}")]
    InvalidSynthesis(String),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.into(),
            source,
        }
    }
}
