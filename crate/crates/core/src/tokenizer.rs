//! Knowledge-base driven segmentation of Braille ASCII.
//!
//! [`segment`] splits each space-delimited word into KB fragments by dynamic
//! programming. The objective is lexicographic: most cells covered by KB
//! fragments, then fewest tokens, then leftmost-longest. Cells no fragment
//! covers become single-cell OOV tokens so that nothing is dropped.
//!
//! [`word_segment`] inserts word boundaries into unsegmented Braille using the
//! KB word inventory.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::braille::{BrailleError, BrailleFragment, BrailleSequence};
use crate::kb::KnowledgeBase;

/// Counterpart emitted for tokens that no KB entry covers.
pub const OOV_SENTINEL: &str = "<oov>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub fragment: String,
    /// Top KB counterpart, `None` for OOV cells.
    pub counterpart: Option<String>,
    /// Byte span in the serialized input.
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn is_oov(&self) -> bool {
        self.counterpart.is_none()
    }

    /// Vocabulary name of the token, e.g. `<|G*A|>`.
    pub fn name(&self) -> String {
        token_name(&self.fragment)
    }
}

pub fn token_name(fragment: &str) -> String {
    format!("<|{fragment}|>")
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedSequence {
    pub tokens: Vec<Token>,
    /// Token indices that begin a new word (never 0).
    pub word_boundaries: Vec<usize>,
}

impl TokenizedSequence {
    /// Rebuilds the serialized input from the tokens.
    pub fn reconstruct(&self) -> String {
        let mut out = String::new();
        let mut next_boundary = self.word_boundaries.iter().peekable();
        for (i, t) in self.tokens.iter().enumerate() {
            if next_boundary.peek() == Some(&&i) {
                out.push(' ');
                next_boundary.next();
            }
            out.push_str(&t.fragment);
        }
        out
    }

    pub fn fragments(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.fragment.as_str()).collect()
    }

    pub fn names(&self) -> String {
        self.tokens.iter().map(Token::name).collect()
    }
}

/// Fragment lookup keyed by string, with the longest fragment length in cells.
struct FragmentIndex<'a> {
    kb: &'a KnowledgeBase,
    max_cells: usize,
}

impl<'a> FragmentIndex<'a> {
    fn new(kb: &'a KnowledgeBase) -> Self {
        let max_cells = kb
            .fragments()
            .iter()
            .map(|f| f.len_cells())
            .max()
            .unwrap_or(0);
        FragmentIndex { kb, max_cells }
    }
}

#[derive(Clone, Copy)]
struct Best {
    covered: usize,
    tokens: usize,
    first_len: usize,
    first_known: bool,
}

/// Optimal fragmentation of one word, as `(cell length, known)` pieces.
fn segment_word(cells: &[char], index: &FragmentIndex<'_>) -> Vec<(usize, bool)> {
    let n = cells.len();
    let mut best: Vec<Option<Best>> = vec![None; n + 1];
    best[n] = Some(Best {
        covered: 0,
        tokens: 0,
        first_len: 0,
        first_known: false,
    });
    let mut buf = String::new();
    for i in (0..n).rev() {
        let mut choice: Option<Best> = None;
        let longest = index.max_cells.min(n - i);
        for len in (1..=longest).rev() {
            buf.clear();
            buf.extend(&cells[i..i + len]);
            if !index.kb.contains_fragment(&buf) {
                continue;
            }
            let rest = best[i + len].expect("suffix solved");
            let cand = Best {
                covered: rest.covered + len,
                tokens: rest.tokens + 1,
                first_len: len,
                first_known: true,
            };
            if better(&cand, choice.as_ref()) {
                choice = Some(cand);
            }
        }
        let rest = best[i + 1].expect("suffix solved");
        let oov = Best {
            covered: rest.covered,
            tokens: rest.tokens + 1,
            first_len: 1,
            first_known: false,
        };
        if better(&oov, choice.as_ref()) {
            choice = Some(oov);
        }
        best[i] = choice;
    }
    let mut pieces = Vec::new();
    let mut i = 0;
    while i < n {
        let b = best[i].expect("solved");
        pieces.push((b.first_len, b.first_known));
        i += b.first_len;
    }
    pieces
}

// Candidates arrive longest-first, so ties keep the longer first piece.
fn better(cand: &Best, current: Option<&Best>) -> bool {
    match current {
        None => true,
        Some(cur) => {
            (cand.covered, std::cmp::Reverse(cand.tokens))
                > (cur.covered, std::cmp::Reverse(cur.tokens))
        }
    }
}

/// Splits every word of `seq` into KB fragments and OOV cells.
pub fn segment(seq: &BrailleSequence, kb: &KnowledgeBase) -> TokenizedSequence {
    let index = FragmentIndex::new(kb);
    let mut out = TokenizedSequence::default();
    let mut offset = 0;
    for (w, word) in seq.words().iter().enumerate() {
        if w > 0 {
            out.word_boundaries.push(out.tokens.len());
            offset += 1;
        }
        let cells: Vec<char> = word.as_str().chars().collect();
        let mut pos = 0;
        for (len, known) in segment_word(&cells, &index) {
            let fragment: String = cells[pos..pos + len].iter().collect();
            let counterpart = if known {
                kb.top_entry(&fragment).map(|e| e.counterpart.clone())
            } else {
                None
            };
            let start = offset;
            offset += fragment.len();
            out.tokens.push(Token {
                fragment,
                counterpart,
                start,
                end: offset,
            });
            pos += len;
        }
    }
    out
}

/// Per-token top counterpart; OOV tokens map to [`OOV_SENTINEL`].
pub fn map_counterparts(tokens: &TokenizedSequence, kb: &KnowledgeBase) -> Vec<String> {
    tokens
        .tokens
        .iter()
        .map(|t| {
            kb.top_entry(&t.fragment)
                .map(|e| e.counterpart.clone())
                .unwrap_or_else(|| OOV_SENTINEL.to_string())
        })
        .collect()
}

/// Word inventory used by [`word_segment`]: surface string to log-probability.
struct WordModel {
    log_prob: HashMap<String, f64>,
    max_cells: usize,
}

impl WordModel {
    /// The KB word list, or every fragment as a one-fragment word when the list is empty.
    fn new(kb: &KnowledgeBase) -> Self {
        let words: Vec<(String, u64)> = if kb.words().is_empty() {
            kb.fragments()
                .into_iter()
                .map(|f| {
                    let freq = kb.top_entry(f.as_str()).map_or(0, |e| e.frequency);
                    (f.as_str().to_string(), freq)
                })
                .collect()
        } else {
            kb.words()
                .iter()
                .map(|w| (w.surface(), w.frequency))
                .collect()
        };
        // add-one smoothing keeps zero-frequency words scorable
        let total: f64 = words.iter().map(|(_, f)| *f as f64 + 1.0).sum();
        let max_cells = words
            .iter()
            .map(|(w, _)| w.chars().count())
            .max()
            .unwrap_or(0);
        let log_prob = words
            .into_iter()
            .map(|(w, f)| (w, ((f as f64 + 1.0) / total).ln()))
            .collect();
        WordModel {
            log_prob,
            max_cells,
        }
    }

    /// Splits a space-free chunk into words. Cells not covered by any known
    /// word stay glued to their uncovered neighbours.
    fn split(&self, cells: &[char]) -> Vec<String> {
        let n = cells.len();
        // (covered, log-prob, first piece length, first piece known)
        let mut best: Vec<(usize, f64, usize, bool)> = vec![(0, 0.0, 0, false); n + 1];
        let mut buf = String::new();
        for i in (0..n).rev() {
            let mut choice: Option<(usize, f64, usize, bool)> = None;
            for len in (1..=self.max_cells.min(n - i)).rev() {
                buf.clear();
                buf.extend(&cells[i..i + len]);
                if let Some(lp) = self.log_prob.get(&buf) {
                    let rest = best[i + len];
                    let cand = (rest.0 + len, rest.1 + lp, len, true);
                    if choice.is_none_or(|c| (cand.0, cand.1) > (c.0, c.1)) {
                        choice = Some(cand);
                    }
                }
            }
            let rest = best[i + 1];
            let unknown = (rest.0, rest.1, 1, false);
            if choice.is_none_or(|c| (unknown.0, unknown.1) > (c.0, c.1)) {
                choice = Some(unknown);
            }
            best[i] = choice.expect("at least the unknown piece");
        }
        let mut words: Vec<String> = Vec::new();
        let mut glue = false;
        let mut i = 0;
        while i < n {
            let (_, _, len, known) = best[i];
            let piece: String = cells[i..i + len].iter().collect();
            match words.last_mut() {
                Some(last) if glue && !known => last.push_str(&piece),
                _ => words.push(piece),
            }
            glue = !known;
            i += len;
        }
        words
    }
}

/// Inserts word boundaries into Braille ASCII. Existing spaces are kept as
/// fixed boundaries; with no inventory evidence nothing is inserted.
pub fn word_segment(s: &str, kb: &KnowledgeBase) -> Result<BrailleSequence, BrailleError> {
    let model = WordModel::new(kb);
    let mut words = Vec::new();
    for chunk in s.split(' ').filter(|c| !c.is_empty()) {
        let cells: Vec<char> = chunk.chars().collect();
        for w in model.split(&cells) {
            words.push(BrailleFragment::new(w.clone()).map_err(|_| {
                let (position, ch) = w
                    .chars()
                    .enumerate()
                    .find(|(_, c)| !crate::braille::is_braille_char(*c))
                    .unwrap_or((0, ' '));
                BrailleError::InvalidChar { position, ch }
            })?);
        }
    }
    Ok(BrailleSequence::from_words(words))
}
