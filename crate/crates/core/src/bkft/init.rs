use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::table::{EmbeddingTable, VocabIndex};
use super::BkftError;
use crate::kb::{strip_tone, CharPinyin, KnowledgeBase};
use crate::tokenizer::token_name;

/// Fragment of a Braille token name `<|FRAGMENT|>`.
pub fn braille_fragment_of(name: &str) -> Option<&str> {
    name.strip_prefix("<|")
        .and_then(|s| s.strip_suffix("|>"))
        .filter(|s| !s.is_empty())
}

/// Appends one zero row per fragment under the name `<|fragment|>`.
/// Nothing is modified when any name already exists.
pub fn extend_vocab<S: AsRef<str>>(
    vocab: &mut VocabIndex,
    table: &mut EmbeddingTable,
    fragments: &[S],
) -> Result<Vec<usize>, BkftError> {
    let names: Vec<String> = fragments.iter().map(|f| token_name(f.as_ref())).collect();
    let mut fresh = BTreeSet::new();
    for n in &names {
        if vocab.get(n).is_some() || !fresh.insert(n.as_str()) {
            return Err(BkftError::DuplicateToken(n.clone()));
        }
    }
    let rows = names
        .into_iter()
        .map(|n| vocab.push(n).expect("checked above"))
        .collect();
    table.push_zero_rows(fragments.len());
    Ok(rows)
}

/// Syllable to the vocabulary rows of its single-character homophones.
#[derive(Debug, Clone, Default)]
pub struct SyllableTokenMap {
    exact: BTreeMap<String, BTreeSet<usize>>,
    toneless: BTreeMap<String, BTreeSet<usize>>,
}

impl SyllableTokenMap {
    /// Collects every single-character vocabulary token with a reading.
    pub fn build(vocab: &VocabIndex, readings: &CharPinyin) -> Self {
        let mut map = SyllableTokenMap::default();
        for (row, name) in vocab.names().iter().enumerate() {
            let mut chars = name.chars();
            if let (Some(c), None) = (chars.next(), chars.next()) {
                for p in readings.readings(c) {
                    map.insert(p, row);
                }
            }
        }
        map
    }

    pub fn insert(&mut self, syllable: &str, row: usize) {
        self.exact
            .entry(syllable.to_string())
            .or_default()
            .insert(row);
        self.toneless
            .entry(strip_tone(syllable).to_string())
            .or_default()
            .insert(row);
    }

    /// Rows for `syllable` in ascending order: exact tone first, any tone as fallback.
    pub fn rows(&self, syllable: &str) -> Vec<usize> {
        self.exact
            .get(syllable)
            .filter(|s| !s.is_empty())
            .or_else(|| self.toneless.get(strip_tone(syllable)))
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ambiguity {
    /// Take the most frequent counterpart.
    #[default]
    TopFrequency,
    Reject,
}

fn target_row(vocab: &VocabIndex, fragment: &str) -> Result<usize, BkftError> {
    vocab
        .get(&token_name(fragment))
        .ok_or_else(|| BkftError::TokenNotInVocab(token_name(fragment)))
}

/// Mean of `rows`, summed in ascending row order.
fn mean_rows(table: &EmbeddingTable, rows: &[usize]) -> Vec<f64> {
    let mut sorted = rows.to_vec();
    sorted.sort_unstable();
    let mut acc = vec![0.0; table.dim()];
    for &r in &sorted {
        for (a, x) in acc.iter_mut().zip(table.row(r)) {
            *a += x;
        }
    }
    let n = sorted.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Homophone-mean vector for a Chinese fragment, without writing it.
pub fn chinese_vector(
    table: &EmbeddingTable,
    syllables: &SyllableTokenMap,
    kc: &KnowledgeBase,
    fragment: &str,
    ambiguity: Ambiguity,
) -> Result<Vec<f64>, BkftError> {
    let counterparts = kc.lookup(fragment);
    let syllable = match counterparts.as_slice() {
        [] => return Err(BkftError::UnknownFragment(fragment.to_string())),
        [_, _, ..] if ambiguity == Ambiguity::Reject => {
            return Err(BkftError::AmbiguousSyllable {
                fragment: fragment.to_string(),
                candidates: counterparts.iter().map(|s| s.to_string()).collect(),
            })
        }
        [first, ..] => *first,
    };
    let rows = syllables.rows(syllable);
    if rows.is_empty() {
        return Err(BkftError::EmptySyllableSet(syllable.to_string()));
    }
    Ok(mean_rows(table, &rows))
}

/// Sets the fragment's row to the mean of its syllable's homophone rows.
pub fn init_chinese(
    table: &mut EmbeddingTable,
    vocab: &VocabIndex,
    syllables: &SyllableTokenMap,
    kc: &KnowledgeBase,
    fragment: &str,
    ambiguity: Ambiguity,
) -> Result<Vec<f64>, BkftError> {
    let row = target_row(vocab, fragment)?;
    let v = chinese_vector(table, syllables, kc, fragment, ambiguity)?;
    table.set_row(row, &v);
    Ok(v)
}

/// Greedy longest-prefix split of `word` into non-Braille vocabulary entries.
fn decompose(vocab: &VocabIndex, word: &str) -> Option<Vec<usize>> {
    let chars: Vec<char> = word.chars().collect();
    let mut rows = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let found = (i + 1..=chars.len()).rev().find_map(|j| {
            let piece: String = chars[i..j].iter().collect();
            vocab.get(&piece).map(|r| (r, j))
        })?;
        rows.push(found.0);
        i = found.1;
    }
    (!rows.is_empty()).then_some(rows)
}

/// Word vector for an English fragment: a copy of the word row, or the mean
/// of its sub-word rows when the word is not a single vocabulary entry.
pub fn english_vector(
    table: &EmbeddingTable,
    vocab: &VocabIndex,
    ke: &KnowledgeBase,
    fragment: &str,
) -> Result<Vec<f64>, BkftError> {
    let word = ke
        .top_entry(fragment)
        .ok_or_else(|| BkftError::UnknownFragment(fragment.to_string()))?
        .counterpart
        .as_str();
    if let Some(r) = vocab.get(word) {
        return Ok(table.row(r).to_vec());
    }
    let pieces =
        decompose(vocab, word).ok_or_else(|| BkftError::WordNotInVocab(word.to_string()))?;
    Ok(mean_rows(table, &pieces))
}

/// Copies the embedding of the fragment's word into the fragment's row.
pub fn init_english(
    table: &mut EmbeddingTable,
    vocab: &VocabIndex,
    ke: &KnowledgeBase,
    fragment: &str,
) -> Result<Vec<f64>, BkftError> {
    let row = target_row(vocab, fragment)?;
    let v = english_vector(table, vocab, ke, fragment)?;
    table.set_row(row, &v);
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub token: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitReport {
    pub chinese_inited: usize,
    pub english_inited: usize,
    pub skipped: Vec<Skipped>,
}

/// Initializes every Braille token row. Chinese KB membership wins over English.
/// Each vector is computed in full before its row is written.
pub fn init_all(
    table: &mut EmbeddingTable,
    vocab: &VocabIndex,
    kc: &KnowledgeBase,
    ke: &KnowledgeBase,
    syllables: &SyllableTokenMap,
) -> InitReport {
    let mut report = InitReport::default();
    for (row, name) in vocab.names().iter().enumerate() {
        let Some(fragment) = braille_fragment_of(name) else {
            continue;
        };
        let staged = if kc.contains_fragment(fragment) {
            chinese_vector(table, syllables, kc, fragment, Ambiguity::TopFrequency)
                .map(|v| (v, true))
        } else if ke.contains_fragment(fragment) {
            english_vector(table, vocab, ke, fragment).map(|v| (v, false))
        } else {
            Err(BkftError::UnknownFragment(fragment.to_string()))
        };
        match staged {
            Ok((v, chinese)) => {
                table.set_row(row, &v);
                if chinese {
                    report.chinese_inited += 1;
                } else {
                    report.english_inited += 1;
                }
            }
            Err(e) => report.skipped.push(Skipped {
                token: name.clone(),
                reason: e.reason_code().to_string(),
            }),
        }
    }
    report
}
