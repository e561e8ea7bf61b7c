//! Six-dot Braille cells, the North American Braille ASCII codec and
//! dot-level perturbation.
//!
//! Braille ASCII assigns one printable character (0x20..=0x5F) to each of the
//! 64 six-dot cells. Space doubles as the blank cell and the inter-word
//! separator; to keep those apart, a blank cell that appears *inside* a word
//! (only produced by [`perturb_dots`]) is written with [`BLANK_CELL`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::unit_f64;

/// Braille ASCII characters indexed by dot mask (bit k set means dot k+1).
pub const BRAILLE_ASCII: &str =
    " A1B'K2L@CIF/MSP\"E3H9O6R^DJG>NTQ,*5<-U8V.%[$+X!&;:4\\0Z7(_?W]#Y)=";

/// In-word blank cell. Distinct from the ASCII space, which always separates words.
pub const BLANK_CELL: char = '\u{2800}';

pub const WORD_SEPARATOR: char = ' ';

const UNICODE_BASE: u32 = 0x2800;

/// Reverse of [`BRAILLE_ASCII`]: byte value minus 0x20 to dot mask.
const ASCII_TO_MASK: [u8; 64] = build_reverse();

const fn build_reverse() -> [u8; 64] {
    let table = BRAILLE_ASCII.as_bytes();
    let mut out = [0u8; 64];
    let mut mask = 0;
    while mask < 64 {
        out[(table[mask] - 0x20) as usize] = mask as u8;
        mask += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BrailleError {
    #[error("invalid Braille ASCII character {ch:?} at position {position}")]
    InvalidChar { position: usize, ch: char },
    #[error("code point at position {position} is outside U+2800..=U+283F")]
    OutOfRange { position: usize },
    #[error("perturbation rate {0} is not within [0, 1]")]
    InvalidRate(f64),
    #[error("malformed Braille sequence: {0}")]
    Malformed(&'static str),
    #[error("Braille fragment must be non-empty and space-free: {0:?}")]
    InvalidFragment(String),
}

/// One six-dot cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BrailleCell(u8);

impl BrailleCell {
    pub const BLANK: BrailleCell = BrailleCell(0);

    pub fn new(dots: u8) -> Option<Self> {
        (dots < 64).then_some(BrailleCell(dots))
    }

    pub fn dots(self) -> u8 {
        self.0
    }

    /// Cell for a Braille ASCII character. Space and [`BLANK_CELL`] both give the blank cell.
    pub fn from_ascii(ch: char) -> Option<Self> {
        match ch {
            BLANK_CELL => Some(Self::BLANK),
            '\u{20}'..='\u{5F}' => Some(BrailleCell(ASCII_TO_MASK[ch as usize - 0x20])),
            _ => None,
        }
    }

    /// The Braille ASCII character for this cell; the blank cell renders as a space.
    pub fn to_ascii(self) -> char {
        BRAILLE_ASCII.as_bytes()[self.0 as usize] as char
    }

    /// Like [`to_ascii`](Self::to_ascii) but renders the blank cell as [`BLANK_CELL`].
    pub fn to_ascii_in_word(self) -> char {
        if self.0 == 0 {
            BLANK_CELL
        } else {
            self.to_ascii()
        }
    }

    pub fn to_unicode(self) -> char {
        char::from_u32(UNICODE_BASE + self.0 as u32).expect("U+2800..U+283F are valid scalars")
    }

    pub fn from_unicode(ch: char) -> Option<Self> {
        let cp = ch as u32;
        (UNICODE_BASE..UNICODE_BASE + 64)
            .contains(&cp)
            .then(|| BrailleCell((cp - UNICODE_BASE) as u8))
    }
}

/// True for every character a Braille ASCII string may contain within a word.
pub fn is_braille_char(ch: char) -> bool {
    ch != WORD_SEPARATOR && BrailleCell::from_ascii(ch).is_some()
}

/// Braille ASCII to Unicode Braille Patterns.
pub fn ascii_to_unicode(s: &str) -> Result<String, BrailleError> {
    s.chars()
        .enumerate()
        .map(|(position, ch)| {
            BrailleCell::from_ascii(ch)
                .map(BrailleCell::to_unicode)
                .ok_or(BrailleError::InvalidChar { position, ch })
        })
        .collect()
}

/// Unicode Braille Patterns to Braille ASCII. U+2800 becomes a space.
pub fn unicode_to_ascii(s: &str) -> Result<String, BrailleError> {
    s.chars()
        .enumerate()
        .map(|(position, ch)| {
            BrailleCell::from_unicode(ch)
                .map(BrailleCell::to_ascii)
                .ok_or(BrailleError::OutOfRange { position })
        })
        .collect()
}

/// A single character-level problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvalidChar {
    pub position: usize,
    pub ch: char,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub issues: Vec<InvalidChar>,
}

impl ValidationResult {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Membership check: every character must be Braille ASCII, a space or [`BLANK_CELL`].
pub fn validate(s: &str) -> ValidationResult {
    let issues = s
        .chars()
        .enumerate()
        .filter(|(_, ch)| BrailleCell::from_ascii(*ch).is_none())
        .map(|(position, ch)| InvalidChar { position, ch })
        .collect();
    ValidationResult { issues }
}

/// A non-empty run of Braille cells with no word separator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BrailleFragment(String);

impl BrailleFragment {
    pub fn new(s: impl Into<String>) -> Result<Self, BrailleError> {
        let s = s.into();
        if s.is_empty() || !s.chars().all(is_braille_char) {
            return Err(BrailleError::InvalidFragment(s));
        }
        Ok(BrailleFragment(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn cells(&self) -> Vec<BrailleCell> {
        self.0
            .chars()
            .map(|c| BrailleCell::from_ascii(c).expect("validated at construction"))
            .collect()
    }

    pub fn len_cells(&self) -> usize {
        self.0.chars().count()
    }
}

impl TryFrom<String> for BrailleFragment {
    type Error = BrailleError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        BrailleFragment::new(s)
    }
}

impl From<BrailleFragment> for String {
    fn from(f: BrailleFragment) -> String {
        f.0
    }
}

impl fmt::Display for BrailleFragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Words of Braille cells separated by single spaces.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BrailleSequence {
    words: Vec<BrailleFragment>,
}

impl BrailleSequence {
    /// Parses the canonical serialization. The empty string is the empty sequence.
    pub fn parse(s: &str) -> Result<Self, BrailleError> {
        if let Some(bad) = validate(s).issues.into_iter().next() {
            return Err(BrailleError::InvalidChar {
                position: bad.position,
                ch: bad.ch,
            });
        }
        if s.is_empty() {
            return Ok(Self::default());
        }
        if s.starts_with(WORD_SEPARATOR) || s.ends_with(WORD_SEPARATOR) {
            return Err(BrailleError::Malformed("leading or trailing space"));
        }
        let words = s
            .split(WORD_SEPARATOR)
            .map(|w| BrailleFragment::new(w).map_err(|_| BrailleError::Malformed("double space")))
            .collect::<Result<_, _>>()?;
        Ok(BrailleSequence { words })
    }

    pub fn from_words(words: Vec<BrailleFragment>) -> Self {
        BrailleSequence { words }
    }

    pub fn words(&self) -> &[BrailleFragment] {
        &self.words
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn cell_count(&self) -> usize {
        self.words.iter().map(BrailleFragment::len_cells).sum()
    }
}

impl fmt::Display for BrailleSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.words.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(w.as_str())?;
        }
        Ok(())
    }
}

impl TryFrom<String> for BrailleSequence {
    type Error = BrailleError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        BrailleSequence::parse(&s)
    }
}

impl From<BrailleSequence> for String {
    fn from(s: BrailleSequence) -> String {
        s.to_string()
    }
}

const PERTURB_DOMAIN: u64 = 0x5045_5254_5552_4231;

/// Flips each dot of each cell independently with probability `rate`.
///
/// The decision for dot `d` of the `i`-th cell (counting cells only, not
/// separators) depends on `(seed, i, d)` alone. Word boundaries are kept.
pub fn perturb_dots(
    seq: &BrailleSequence,
    rate: f64,
    seed: u64,
) -> Result<BrailleSequence, BrailleError> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(BrailleError::InvalidRate(rate));
    }
    let mut cell_index = 0u64;
    let words = seq
        .words
        .iter()
        .map(|word| {
            let s: String = word
                .cells()
                .into_iter()
                .map(|cell| {
                    let mut dots = cell.dots();
                    for dot in 0..6u64 {
                        if unit_f64(&[PERTURB_DOMAIN, seed, cell_index, dot]) < rate {
                            dots ^= 1 << dot;
                        }
                    }
                    cell_index += 1;
                    BrailleCell(dots).to_ascii_in_word()
                })
                .collect();
            BrailleFragment(s)
        })
        .collect();
    Ok(BrailleSequence { words })
}

/// Number of dots that differ between two sequences of identical shape.
pub fn dot_distance(a: &BrailleSequence, b: &BrailleSequence) -> Option<u64> {
    if a.words.len() != b.words.len() {
        return None;
    }
    let mut flips = 0u64;
    for (wa, wb) in a.words.iter().zip(&b.words) {
        let (ca, cb) = (wa.cells(), wb.cells());
        if ca.len() != cb.len() {
            return None;
        }
        flips += ca
            .iter()
            .zip(&cb)
            .map(|(x, y)| (x.dots() ^ y.dots()).count_ones() as u64)
            .sum::<u64>();
    }
    Some(flips)
}
