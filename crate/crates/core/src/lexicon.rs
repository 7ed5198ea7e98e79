//! Colored character sets and per-color word tries.
//!
//! Every base character `l` exists once per color as the pair `(l, c)`. The
//! pairs are distinct identities, but all colors of `l` share one acoustic
//! column, so a single logits matrix drives every lexicon at once.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::LexiconError;

/// Index of the lexicon / language model a word is drawn from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColorId(pub u16);

impl ColorId {
    pub const GENERAL: ColorId = ColorId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ColorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A base character (by acoustic column) tagged with a color.
///
/// Ordering is column first, then color; decoder tie-breaks rely on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColoredChar {
    pub column: u16,
    pub color: ColorId,
}

impl ColoredChar {
    pub fn new(column: usize, color: ColorId) -> Self {
        ColoredChar {
            column: column as u16,
            color,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColoredAlphabet {
    base_chars: Vec<char>,
    num_colors: u16,
    separator: u16,
}

impl ColoredAlphabet {
    /// `base_chars` must be unique and contain `separator`. The blank is
    /// implicit and takes the column after the last base character.
    pub fn new(base_chars: Vec<char>, num_colors: u16, separator: char) -> Result<Self, LexiconError> {
        if num_colors == 0 {
            return Err(LexiconError::InvalidAlphabet("at least one color is required".into()));
        }
        if base_chars.is_empty() || base_chars.len() >= u16::MAX as usize {
            return Err(LexiconError::InvalidAlphabet(format!(
                "alphabet size {} out of range",
                base_chars.len()
            )));
        }
        let unique: BTreeSet<char> = base_chars.iter().copied().collect();
        if unique.len() != base_chars.len() {
            return Err(LexiconError::InvalidAlphabet("duplicate characters".into()));
        }
        let separator = base_chars
            .iter()
            .position(|&c| c == separator)
            .ok_or_else(|| LexiconError::InvalidAlphabet(format!("separator {separator:?} missing")))?;
        Ok(ColoredAlphabet {
            base_chars,
            num_colors,
            separator: separator as u16,
        })
    }

    /// Space followed by `a..=z` and the apostrophe.
    pub fn english(num_colors: u16) -> Self {
        let mut chars = vec![' '];
        chars.extend('a'..='z');
        chars.push('\'');
        Self::new(chars, num_colors, ' ').expect("static alphabet is valid")
    }

    /// Number of base characters, `K`.
    pub fn len(&self) -> usize {
        self.base_chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base_chars.is_empty()
    }

    pub fn num_colors(&self) -> u16 {
        self.num_colors
    }

    pub fn blank_index(&self) -> usize {
        self.base_chars.len()
    }

    pub fn separator_column(&self) -> usize {
        self.separator as usize
    }

    pub fn base_chars(&self) -> &[char] {
        &self.base_chars
    }

    pub fn char_at(&self, column: usize) -> char {
        self.base_chars[column]
    }

    /// Acoustic column of `ch`, identical for every color of `ch`.
    pub fn char_column(&self, ch: char) -> Result<usize, LexiconError> {
        self.base_chars
            .iter()
            .position(|&c| c == ch)
            .ok_or(LexiconError::UnknownChar(ch))
    }

    pub fn colored(&self, ch: char, color: ColorId) -> Result<ColoredChar, LexiconError> {
        self.check_color(color)?;
        Ok(ColoredChar::new(self.char_column(ch)?, color))
    }

    pub fn check_color(&self, color: ColorId) -> Result<(), LexiconError> {
        if color.0 >= self.num_colors {
            return Err(LexiconError::ColorOutOfRange {
                color: color.0,
                num_colors: self.num_colors,
            });
        }
        Ok(())
    }

    /// Spells a word as acoustic columns.
    pub fn spell(&self, word: &str) -> Result<Vec<u16>, LexiconError> {
        word.chars()
            .map(|ch| {
                let col = self.char_column(ch).map_err(|_| LexiconError::InvalidWordChar {
                    word: word.to_string(),
                    ch,
                })?;
                if col == self.separator as usize {
                    return Err(LexiconError::InvalidWordChar {
                        word: word.to_string(),
                        ch,
                    });
                }
                Ok(col as u16)
            })
            .collect()
    }

    pub fn render(&self, columns: impl IntoIterator<Item = u16>) -> String {
        columns.into_iter().map(|c| self.base_chars[c as usize]).collect()
    }
}

#[derive(Clone, Debug, Default)]
struct TrieNode {
    /// Sorted by column.
    children: Vec<(u16, u32)>,
    word: Option<Box<str>>,
}

/// Prefix tree over acoustic columns for one lexicon.
#[derive(Clone, Debug)]
pub struct LexiconTrie {
    color: ColorId,
    nodes: Vec<TrieNode>,
    num_words: usize,
}

pub const TRIE_ROOT: u32 = 0;

impl LexiconTrie {
    pub fn build<S: AsRef<str>>(alphabet: &ColoredAlphabet, color: ColorId, words: &[S]) -> Result<Self, LexiconError> {
        alphabet.check_color(color)?;
        let mut trie = LexiconTrie {
            color,
            nodes: vec![TrieNode::default()],
            num_words: 0,
        };
        for word in words {
            let word = word.as_ref();
            let columns = alphabet.spell(word)?;
            if columns.is_empty() {
                continue;
            }
            let mut node = TRIE_ROOT;
            for col in columns {
                node = trie.child_or_insert(node, col);
            }
            let slot = &mut trie.nodes[node as usize].word;
            if slot.is_none() {
                *slot = Some(word.into());
                trie.num_words += 1;
            }
        }
        Ok(trie)
    }

    fn child_or_insert(&mut self, node: u32, column: u16) -> u32 {
        let children = &self.nodes[node as usize].children;
        match children.binary_search_by_key(&column, |&(c, _)| c) {
            Ok(i) => children[i].1,
            Err(i) => {
                let id = self.nodes.len() as u32;
                self.nodes.push(TrieNode::default());
                self.nodes[node as usize].children.insert(i, (column, id));
                id
            }
        }
    }

    pub fn color(&self) -> ColorId {
        self.color
    }

    pub fn num_words(&self) -> usize {
        self.num_words
    }

    pub fn child(&self, node: u32, column: u16) -> Option<u32> {
        let children = &self.nodes[node as usize].children;
        children
            .binary_search_by_key(&column, |&(c, _)| c)
            .ok()
            .map(|i| children[i].1)
    }

    pub fn children(&self, node: u32) -> impl Iterator<Item = (u16, u32)> + '_ {
        self.nodes[node as usize].children.iter().copied()
    }

    /// The completed word if `node` is word-final.
    pub fn word(&self, node: u32) -> Option<&str> {
        self.nodes[node as usize].word.as_deref()
    }

    pub fn contains(&self, alphabet: &ColoredAlphabet, word: &str) -> bool {
        let Ok(columns) = alphabet.spell(word) else {
            return false;
        };
        self.walk(&columns).is_some_and(|n| self.word(n).is_some())
    }

    /// Follows `columns` from the root.
    pub fn walk(&self, columns: &[u16]) -> Option<u32> {
        columns.iter().try_fold(TRIE_ROOT, |node, &col| self.child(node, col))
    }

    /// All words in depth-first column order.
    pub fn words(&self) -> Vec<&str> {
        let mut out = Vec::with_capacity(self.num_words);
        let mut stack = vec![TRIE_ROOT];
        while let Some(node) = stack.pop() {
            if let Some(w) = self.word(node) {
                out.push(w);
            }
            for &(_, child) in self.nodes[node as usize].children.iter().rev() {
                stack.push(child);
            }
        }
        out
    }
}

/// Word constraint for one color.
#[derive(Clone, Debug)]
pub enum Lexicon {
    Trie(LexiconTrie),
    /// Any non-empty character string is a word.
    Open,
}

/// Position inside the word currently being spelled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WordPos {
    Node(u32),
    /// Left the trie; only reachable with off-lexicon extension enabled.
    OffLexicon,
    Open,
}

/// Where a colored prefix stands relative to word boundaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WordCursor {
    /// No partial word. `color` is the color a separator emitted here takes.
    Boundary {
        color: ColorId,
    },
    InWord {
        color: ColorId,
        pos: WordPos,
    },
}

impl WordCursor {
    pub const START: WordCursor = WordCursor::Boundary {
        color: ColorId::GENERAL,
    };
}

/// How a completed word should be scored.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WordEnd<'a> {
    /// Word-final trie node.
    Lexicon(&'a str),
    /// Spelled under an open lexicon; the text is the spelled characters.
    Spelled,
    /// Not a lexicon word; scored with the unknown-word penalty.
    Unknown,
}

/// One legal extension of a colored prefix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Expansion<'a> {
    pub ch: ColoredChar,
    pub next: WordCursor,
    /// The character leaves the trie and costs the unknown-sub-word penalty.
    pub off_lexicon: bool,
    /// Set when `ch` is the separator closing a non-empty word.
    pub completes: Option<(ColorId, WordEnd<'a>)>,
}

/// The alphabet plus one lexicon per color: everything `GetNextChars` needs.
#[derive(Clone, Debug)]
pub struct ColoredLexicon {
    alphabet: ColoredAlphabet,
    lexicons: Vec<Lexicon>,
    off_lexicon: bool,
    /// Union over colors of root children, sorted by (column, color).
    first_chars: Vec<(ColoredChar, u32)>,
}

impl ColoredLexicon {
    pub fn new(alphabet: ColoredAlphabet, lexicons: Vec<Lexicon>, off_lexicon: bool) -> Result<Self, LexiconError> {
        if lexicons.len() != alphabet.num_colors() as usize {
            return Err(LexiconError::InvalidAlphabet(format!(
                "{} lexicons for {} colors",
                lexicons.len(),
                alphabet.num_colors()
            )));
        }
        for (i, lex) in lexicons.iter().enumerate() {
            if let Lexicon::Trie(t) = lex {
                if t.color().index() != i {
                    return Err(LexiconError::InvalidAlphabet(format!(
                        "trie for color {} placed at position {i}",
                        t.color()
                    )));
                }
            }
        }
        let mut first_chars = Vec::new();
        let sep = alphabet.separator_column() as u16;
        for (i, lex) in lexicons.iter().enumerate() {
            let color = ColorId(i as u16);
            match lex {
                Lexicon::Trie(t) => {
                    for (col, node) in t.children(TRIE_ROOT) {
                        first_chars.push((ColoredChar { column: col, color }, node));
                    }
                }
                Lexicon::Open => {
                    for col in 0..alphabet.len() as u16 {
                        if col != sep {
                            first_chars.push((ColoredChar { column: col, color }, u32::MAX));
                        }
                    }
                }
            }
        }
        first_chars.sort_by_key(|&(ch, _)| ch);
        Ok(ColoredLexicon {
            alphabet,
            lexicons,
            off_lexicon,
            first_chars,
        })
    }

    /// Builds one trie per word list; list `i` gets color `i`.
    pub fn from_word_lists<S: AsRef<str>>(
        base_chars: Vec<char>,
        separator: char,
        lists: &[Vec<S>],
        off_lexicon: bool,
    ) -> Result<Self, LexiconError> {
        let alphabet = ColoredAlphabet::new(base_chars, lists.len() as u16, separator)?;
        let lexicons = lists
            .iter()
            .enumerate()
            .map(|(i, words)| LexiconTrie::build(&alphabet, ColorId(i as u16), words).map(Lexicon::Trie))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(alphabet, lexicons, off_lexicon)
    }

    pub fn alphabet(&self) -> &ColoredAlphabet {
        &self.alphabet
    }

    pub fn lexicons(&self) -> &[Lexicon] {
        &self.lexicons
    }

    pub fn lexicon(&self, color: ColorId) -> &Lexicon {
        &self.lexicons[color.index()]
    }

    pub fn num_colors(&self) -> u16 {
        self.alphabet.num_colors()
    }

    pub fn off_lexicon_enabled(&self) -> bool {
        self.off_lexicon
    }

    /// Appends every legal extension of a prefix at `cursor` to `out`.
    ///
    /// At a boundary: the first letters of every lexicon plus the separator.
    /// Mid-word: letters continuing the current word in its own lexicon only,
    /// plus the separator when the word may end here.
    pub fn expansions<'a>(&'a self, cursor: WordCursor, out: &mut Vec<Expansion<'a>>) {
        let sep = self.alphabet.separator_column() as u16;
        match cursor {
            WordCursor::Boundary { color } => {
                for &(ch, node) in &self.first_chars {
                    let pos = if node == u32::MAX {
                        WordPos::Open
                    } else {
                        WordPos::Node(node)
                    };
                    out.push(Expansion {
                        ch,
                        next: WordCursor::InWord { color: ch.color, pos },
                        off_lexicon: false,
                        completes: None,
                    });
                }
                out.push(Expansion {
                    ch: ColoredChar { column: sep, color },
                    next: cursor,
                    off_lexicon: false,
                    completes: None,
                });
            }
            WordCursor::InWord { color, pos } => {
                let end = match (pos, self.lexicon(color)) {
                    (WordPos::Node(node), Lexicon::Trie(trie)) => {
                        if self.off_lexicon {
                            for col in 0..self.alphabet.len() as u16 {
                                if col == sep {
                                    continue;
                                }
                                let (pos, off) = match trie.child(node, col) {
                                    Some(child) => (WordPos::Node(child), false),
                                    None => (WordPos::OffLexicon, true),
                                };
                                out.push(Expansion {
                                    ch: ColoredChar { column: col, color },
                                    next: WordCursor::InWord { color, pos },
                                    off_lexicon: off,
                                    completes: None,
                                });
                            }
                        } else {
                            for (col, child) in trie.children(node) {
                                out.push(Expansion {
                                    ch: ColoredChar { column: col, color },
                                    next: WordCursor::InWord {
                                        color,
                                        pos: WordPos::Node(child),
                                    },
                                    off_lexicon: false,
                                    completes: None,
                                });
                            }
                        }
                        match trie.word(node) {
                            Some(w) => Some(WordEnd::Lexicon(w)),
                            None if self.off_lexicon => Some(WordEnd::Unknown),
                            None => None,
                        }
                    }
                    (WordPos::OffLexicon, _) => {
                        for col in 0..self.alphabet.len() as u16 {
                            if col != sep {
                                out.push(Expansion {
                                    ch: ColoredChar { column: col, color },
                                    next: cursor,
                                    off_lexicon: true,
                                    completes: None,
                                });
                            }
                        }
                        Some(WordEnd::Unknown)
                    }
                    _ => {
                        for col in 0..self.alphabet.len() as u16 {
                            if col != sep {
                                out.push(Expansion {
                                    ch: ColoredChar { column: col, color },
                                    next: cursor,
                                    off_lexicon: false,
                                    completes: None,
                                });
                            }
                        }
                        Some(WordEnd::Spelled)
                    }
                };
                if let Some(end) = end {
                    out.push(Expansion {
                        ch: ColoredChar { column: sep, color },
                        next: WordCursor::Boundary { color },
                        off_lexicon: false,
                        completes: Some((color, end)),
                    });
                }
            }
        }
    }

    /// The `(char, color)` set a prefix at `cursor` may be extended with.
    pub fn get_next_chars(&self, cursor: WordCursor) -> Vec<(char, ColorId)> {
        let mut out = Vec::new();
        self.expansions(cursor, &mut out);
        out.into_iter()
            .map(|e| (self.alphabet.char_at(e.ch.column as usize), e.ch.color))
            .collect()
    }

    /// How an open word would end if the utterance stopped at `cursor`.
    /// `None` means the partial characters cannot form a word and are dropped.
    pub fn word_end_at(&self, cursor: WordCursor) -> Option<(ColorId, WordEnd<'_>)> {
        match cursor {
            WordCursor::Boundary { .. } => None,
            WordCursor::InWord { color, pos } => match (pos, self.lexicon(color)) {
                (WordPos::Node(node), Lexicon::Trie(trie)) => match trie.word(node) {
                    Some(w) => Some((color, WordEnd::Lexicon(w))),
                    None if self.off_lexicon => Some((color, WordEnd::Unknown)),
                    None => None,
                },
                (WordPos::OffLexicon, _) => Some((color, WordEnd::Unknown)),
                _ => Some((color, WordEnd::Spelled)),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn abc() -> Vec<char> {
        vec![' ', 'a', 'b', 'c']
    }

    fn two_color(off: bool) -> ColoredLexicon {
        ColoredLexicon::from_word_lists(abc(), ' ', &[vec!["ab"], vec!["ba"]], off).unwrap()
    }

    fn set(v: Vec<(char, ColorId)>) -> HashSet<(char, u16)> {
        v.into_iter().map(|(c, k)| (c, k.0)).collect()
    }

    #[test]
    fn boundary_offers_first_letters_of_every_lexicon() {
        let lex = two_color(false);
        let got = set(lex.get_next_chars(WordCursor::START));
        let want: HashSet<_> = [('a', 0), ('b', 1), (' ', 0)].into_iter().collect();
        assert_eq!(got, want);
    }

    #[test]
    fn mid_word_stays_in_its_lexicon() {
        let lex = two_color(false);
        let a = lex.alphabet().char_column('a').unwrap() as u16;
        let Lexicon::Trie(t) = lex.lexicon(ColorId(0)) else {
            unreachable!()
        };
        let node = t.child(TRIE_ROOT, a).unwrap();
        let cursor = WordCursor::InWord {
            color: ColorId(0),
            pos: WordPos::Node(node),
        };
        assert_eq!(set(lex.get_next_chars(cursor)), [('b', 0)].into_iter().collect());
    }

    #[test]
    fn word_final_node_offers_separator_with_word_color() {
        let lex = two_color(false);
        let Lexicon::Trie(t) = lex.lexicon(ColorId(1)) else {
            unreachable!()
        };
        let node = t.walk(&lex.alphabet().spell("ba").unwrap()).unwrap();
        let cursor = WordCursor::InWord {
            color: ColorId(1),
            pos: WordPos::Node(node),
        };
        let mut out = Vec::new();
        lex.expansions(cursor, &mut out);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].ch.color, ColorId(1));
        assert_eq!(out[0].next, WordCursor::Boundary { color: ColorId(1) });
        assert_eq!(out[0].completes, Some((ColorId(1), WordEnd::Lexicon("ba"))));
    }

    #[test]
    fn single_open_lexicon_offers_all_chars() {
        let alphabet = ColoredAlphabet::new(abc(), 1, ' ').unwrap();
        let lex = ColoredLexicon::new(alphabet, vec![Lexicon::Open], false).unwrap();
        let all: HashSet<_> = abc().into_iter().map(|c| (c, 0)).collect();
        assert_eq!(set(lex.get_next_chars(WordCursor::START)), all);
        let mid = WordCursor::InWord {
            color: ColorId(0),
            pos: WordPos::Open,
        };
        assert_eq!(set(lex.get_next_chars(mid)), all);
    }

    #[test]
    fn off_lexicon_offers_same_color_chars_with_penalty_flag() {
        let lex = two_color(true);
        let a = lex.alphabet().char_column('a').unwrap() as u16;
        let Lexicon::Trie(t) = lex.lexicon(ColorId(0)) else {
            unreachable!()
        };
        let node = t.child(TRIE_ROOT, a).unwrap();
        let cursor = WordCursor::InWord {
            color: ColorId(0),
            pos: WordPos::Node(node),
        };
        let mut out = Vec::new();
        lex.expansions(cursor, &mut out);
        // a, b, c plus the separator (ends an unknown word)
        assert_eq!(out.len(), 4);
        assert!(out.iter().all(|e| e.ch.color == ColorId(0)));
        let off: Vec<_> = out.iter().filter(|e| e.off_lexicon).map(|e| e.ch.column).collect();
        assert_eq!(off, vec![1, 3]);
        assert!(out.len() <= lex.alphabet().len());
    }

    #[test]
    fn char_column_shared_across_colors() {
        let alphabet = ColoredAlphabet::new(vec!['a', 'b', 'c', ' '], 2, ' ').unwrap();
        assert_eq!(alphabet.char_column('b'), Ok(1));
        let b0 = alphabet.colored('b', ColorId(0)).unwrap();
        let b1 = alphabet.colored('b', ColorId(1)).unwrap();
        assert_ne!(b0, b1);
        assert_eq!(b0.column, b1.column);
        assert_eq!(alphabet.char_column('-'), Err(LexiconError::UnknownChar('-')));
        assert_eq!(alphabet.blank_index(), 4);
    }

    #[test]
    fn trie_marks_prefix_words() {
        let alphabet = ColoredAlphabet::new(abc(), 1, ' ').unwrap();
        let t = LexiconTrie::build(&alphabet, ColorId(0), &["ab", "a"]).unwrap();
        let a = t.child(TRIE_ROOT, 1).unwrap();
        assert_eq!(t.word(a), Some("a"));
        let ab = t.child(a, 2).unwrap();
        assert_eq!(t.word(ab), Some("ab"));
        assert_eq!(t.num_words(), 2);
    }

    #[test]
    fn empty_word_list_contributes_no_first_letters() {
        let lex = ColoredLexicon::from_word_lists(abc(), ' ', &[vec!["a"], Vec::<&str>::new()], false).unwrap();
        let got = set(lex.get_next_chars(WordCursor::START));
        assert_eq!(got, [('a', 0), (' ', 0)].into_iter().collect());
    }

    #[test]
    fn rejects_words_outside_alphabet() {
        let alphabet = ColoredAlphabet::new(abc(), 1, ' ').unwrap();
        let err = LexiconTrie::build(&alphabet, ColorId(0), &["abz"]).unwrap_err();
        assert!(matches!(err, LexiconError::InvalidWordChar { ch: 'z', .. }));
        let err = LexiconTrie::build(&alphabet, ColorId(0), &["a b"]).unwrap_err();
        assert!(matches!(err, LexiconError::InvalidWordChar { ch: ' ', .. }));
    }

    #[test]
    fn color_out_of_range_is_rejected() {
        let alphabet = ColoredAlphabet::new(abc(), 2, ' ').unwrap();
        assert!(alphabet.colored('a', ColorId(2)).is_err());
    }
}
