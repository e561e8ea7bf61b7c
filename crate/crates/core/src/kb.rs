//! Prior knowledge bases mapping Braille fragments to their plain-text
//! counterparts, the attribute-labelled fragment inventory used for
//! augmentation, and the character reading table.
//!
//! All tables are tab-separated with `#` comment lines:
//!
//! * prior: `fragment \t counterpart \t frequency?`
//! * attributes: `fragment \t attribute \t text`
//! * words: `space-joined fragments \t frequency?`
//! * character readings: `character \t pinyin`

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braille::{BrailleCell, BrailleFragment};
use crate::edit::levenshtein;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Chinese,
    English,
}

impl FromStr for Language {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "zh" | "chinese" => Ok(Language::Chinese),
            "en" | "english" => Ok(Language::English),
            other => Err(format!("unknown language {other:?}")),
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::Chinese => "Chinese",
            Language::English => "English",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RowError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: duplicate entry")]
    DuplicateEntry { line: usize },
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Rows(Vec<RowError>),
    #[error("no entries with attribute {0} remain after exclusion")]
    EmptyAttributeGroup(Attribute),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Grammatical role of an attribute fragment. Open-ended: unknown labels are kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum Attribute {
    Verb,
    PersonalName,
    Quantifier,
    PlaceName,
    Adjective,
    Noun,
    Pronoun,
    Location,
    Other(String),
}

impl From<String> for Attribute {
    fn from(s: String) -> Self {
        match s.as_str() {
            "Verb" => Attribute::Verb,
            "PersonalName" => Attribute::PersonalName,
            "Quantifier" => Attribute::Quantifier,
            "PlaceName" => Attribute::PlaceName,
            "Adjective" => Attribute::Adjective,
            "Noun" => Attribute::Noun,
            "Pronoun" => Attribute::Pronoun,
            "Location" => Attribute::Location,
            _ => Attribute::Other(s),
        }
    }
}

impl From<Attribute> for String {
    fn from(a: Attribute) -> String {
        a.to_string()
    }
}

impl FromStr for Attribute {
    type Err = std::convert::Infallible;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Attribute::from(s.to_string()))
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Attribute::Verb => "Verb",
            Attribute::PersonalName => "PersonalName",
            Attribute::Quantifier => "Quantifier",
            Attribute::PlaceName => "PlaceName",
            Attribute::Adjective => "Adjective",
            Attribute::Noun => "Noun",
            Attribute::Pronoun => "Pronoun",
            Attribute::Location => "Location",
            Attribute::Other(s) => s,
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorEntry {
    pub fragment: BrailleFragment,
    pub counterpart: String,
    pub language: Language,
    pub frequency: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeEntry {
    pub fragment: BrailleFragment,
    pub attribute: Attribute,
    pub text: String,
}

/// A multi-fragment Braille word from the word inventory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordEntry {
    pub fragments: Vec<BrailleFragment>,
    pub frequency: u64,
}

impl WordEntry {
    pub fn surface(&self) -> String {
        self.fragments.iter().map(BrailleFragment::as_str).collect()
    }
}

/// Pinyin syllable: lowercase letters (ü or v allowed) and an optional tone digit 1-5.
pub fn is_pinyin_syllable(s: &str) -> bool {
    let body = strip_tone(s);
    !body.is_empty() && body.chars().all(|c| c.is_ascii_lowercase() || c == 'ü')
}

/// The syllable without its trailing tone digit.
pub fn strip_tone(s: &str) -> &str {
    match s.as_bytes().last() {
        Some(b'1'..=b'5') => &s[..s.len() - 1],
        _ => s,
    }
}

fn data_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line.split('\t').collect()))
        }
    })
}

fn parse_frequency(field: Option<&&str>, line: usize) -> Result<u64, RowError> {
    match field.map(|s| s.trim()) {
        None | Some("") => Ok(0),
        Some(f) => f.parse().map_err(|_| RowError::Parse {
            line,
            reason: format!("frequency {f:?} is not a non-negative integer"),
        }),
    }
}

fn parse_fragment(s: &str, line: usize) -> Result<BrailleFragment, RowError> {
    BrailleFragment::new(s).map_err(|e| RowError::Parse {
        line,
        reason: e.to_string(),
    })
}

/// Fragment/counterpart knowledge base for one language, with inverse indices.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    language: Language,
    entries: Vec<PriorEntry>,
    by_fragment: HashMap<String, Vec<usize>>,
    by_counterpart: HashMap<String, Vec<usize>>,
    by_toneless: HashMap<String, Vec<usize>>,
    attributes: Vec<AttributeEntry>,
    by_attribute: BTreeMap<Attribute, Vec<usize>>,
    words: Vec<WordEntry>,
}

impl KnowledgeBase {
    pub fn empty(language: Language) -> Self {
        KnowledgeBase {
            language,
            entries: Vec::new(),
            by_fragment: HashMap::new(),
            by_counterpart: HashMap::new(),
            by_toneless: HashMap::new(),
            attributes: Vec::new(),
            by_attribute: BTreeMap::new(),
            words: Vec::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>, language: Language) -> Result<Self, KbError> {
        Self::parse(&std::fs::read_to_string(path)?, language)
    }

    /// Parses a prior table. Every bad row is reported, not just the first.
    pub fn parse(text: &str, language: Language) -> Result<Self, KbError> {
        let mut errors = Vec::new();
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (line, cols) in data_rows(text) {
            let row = (|| {
                if cols.len() < 2 || cols.len() > 3 {
                    return Err(RowError::Parse {
                        line,
                        reason: format!("expected 2 or 3 columns, found {}", cols.len()),
                    });
                }
                let fragment = parse_fragment(cols[0], line)?;
                let counterpart = cols[1].trim().to_string();
                if counterpart.is_empty() {
                    return Err(RowError::Parse {
                        line,
                        reason: "empty counterpart".into(),
                    });
                }
                if language == Language::Chinese && !is_pinyin_syllable(&counterpart) {
                    return Err(RowError::Parse {
                        line,
                        reason: format!("{counterpart:?} is not a Pinyin syllable"),
                    });
                }
                let frequency = parse_frequency(cols.get(2), line)?;
                if !seen.insert((fragment.clone(), counterpart.clone())) {
                    return Err(RowError::DuplicateEntry { line });
                }
                Ok(PriorEntry {
                    fragment,
                    counterpart,
                    language,
                    frequency,
                })
            })();
            match row {
                Ok(e) => entries.push(e),
                Err(e) => errors.push(e),
            }
        }
        if !errors.is_empty() {
            return Err(KbError::Rows(errors));
        }
        Ok(Self::from_entries(language, entries))
    }

    pub fn from_entries(language: Language, entries: Vec<PriorEntry>) -> Self {
        let mut kb = KnowledgeBase::empty(language);
        kb.entries = entries;
        kb.reindex();
        kb
    }

    fn reindex(&mut self) {
        self.by_fragment.clear();
        self.by_counterpart.clear();
        self.by_toneless.clear();
        for (i, e) in self.entries.iter().enumerate() {
            self.by_fragment
                .entry(e.fragment.as_str().to_string())
                .or_default()
                .push(i);
            self.by_counterpart
                .entry(e.counterpart.clone())
                .or_default()
                .push(i);
            if self.language == Language::Chinese {
                self.by_toneless
                    .entry(strip_tone(&e.counterpart).to_string())
                    .or_default()
                    .push(i);
            }
        }
        let entries = &self.entries;
        for ids in self.by_fragment.values_mut() {
            ids.sort_by(|&a, &b| {
                let (x, y) = (&entries[a], &entries[b]);
                y.frequency
                    .cmp(&x.frequency)
                    .then_with(|| x.counterpart.cmp(&y.counterpart))
            });
        }
        for ids in self
            .by_counterpart
            .values_mut()
            .chain(self.by_toneless.values_mut())
        {
            ids.sort_by(|&a, &b| {
                let (x, y) = (&entries[a], &entries[b]);
                y.frequency
                    .cmp(&x.frequency)
                    .then_with(|| x.fragment.cmp(&y.fragment))
            });
        }
    }

    pub fn load_attributes(&mut self, path: impl AsRef<Path>) -> Result<(), KbError> {
        self.parse_attributes(&std::fs::read_to_string(path)?)
    }

    pub fn parse_attributes(&mut self, text: &str) -> Result<(), KbError> {
        let mut errors = Vec::new();
        let mut seen: HashSet<(BrailleFragment, Attribute)> = self
            .attributes
            .iter()
            .map(|a| (a.fragment.clone(), a.attribute.clone()))
            .collect();
        for (line, cols) in data_rows(text) {
            if cols.len() != 3 {
                errors.push(RowError::Parse {
                    line,
                    reason: format!("expected 3 columns, found {}", cols.len()),
                });
                continue;
            }
            let fragment = match parse_fragment(cols[0], line) {
                Ok(f) => f,
                Err(e) => {
                    errors.push(e);
                    continue;
                }
            };
            let attribute = Attribute::from(cols[1].trim().to_string());
            let text = cols[2].trim().to_string();
            if text.is_empty() {
                errors.push(RowError::Parse {
                    line,
                    reason: "empty text".into(),
                });
                continue;
            }
            if !seen.insert((fragment.clone(), attribute.clone())) {
                errors.push(RowError::DuplicateEntry { line });
                continue;
            }
            self.add_attribute(AttributeEntry {
                fragment,
                attribute,
                text,
            });
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(KbError::Rows(errors))
        }
    }

    pub fn add_attribute(&mut self, entry: AttributeEntry) {
        self.by_attribute
            .entry(entry.attribute.clone())
            .or_default()
            .push(self.attributes.len());
        self.attributes.push(entry);
    }

    pub fn load_words(&mut self, path: impl AsRef<Path>) -> Result<(), KbError> {
        self.parse_words(&std::fs::read_to_string(path)?)
    }

    pub fn parse_words(&mut self, text: &str) -> Result<(), KbError> {
        let mut errors = Vec::new();
        let mut seen: HashSet<String> = self.words.iter().map(WordEntry::surface).collect();
        for (line, cols) in data_rows(text) {
            if cols.is_empty() || cols.len() > 2 {
                errors.push(RowError::Parse {
                    line,
                    reason: format!("expected 1 or 2 columns, found {}", cols.len()),
                });
                continue;
            }
            let fragments: Result<Vec<_>, _> = cols[0]
                .split(' ')
                .map(|f| parse_fragment(f, line))
                .collect();
            let parsed = fragments.and_then(|fragments| {
                Ok(WordEntry {
                    fragments,
                    frequency: parse_frequency(cols.get(1), line)?,
                })
            });
            match parsed {
                Ok(w) if !seen.insert(w.surface()) => {
                    errors.push(RowError::DuplicateEntry { line })
                }
                Ok(w) => self.words.push(w),
                Err(e) => errors.push(e),
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(KbError::Rows(errors))
        }
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn entries(&self) -> &[PriorEntry] {
        &self.entries
    }

    pub fn attributes(&self) -> &[AttributeEntry] {
        &self.attributes
    }

    pub fn words(&self) -> &[WordEntry] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains_fragment(&self, fragment: &str) -> bool {
        self.by_fragment.contains_key(fragment)
    }

    /// Distinct fragments in load order.
    pub fn fragments(&self) -> Vec<&BrailleFragment> {
        let mut seen = HashSet::new();
        self.entries
            .iter()
            .map(|e| &e.fragment)
            .filter(|f| seen.insert(f.as_str()))
            .collect()
    }

    /// Counterparts of `fragment`, most frequent first, ties lexicographic.
    pub fn lookup(&self, fragment: &str) -> Vec<&str> {
        self.by_fragment
            .get(fragment)
            .map(|ids| {
                ids.iter()
                    .map(|&i| self.entries[i].counterpart.as_str())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Highest-ranked entry for `fragment`.
    pub fn top_entry(&self, fragment: &str) -> Option<&PriorEntry> {
        self.by_fragment
            .get(fragment)
            .and_then(|ids| ids.first())
            .map(|&i| &self.entries[i])
    }

    /// Fragments whose counterpart is `counterpart`. Chinese lookups fall back to
    /// tone-insensitive matching when the exact syllable is absent.
    pub fn inverse_lookup(&self, counterpart: &str) -> Vec<&BrailleFragment> {
        let ids = match self.by_counterpart.get(counterpart) {
            Some(ids) => Some(ids),
            None if self.language == Language::Chinese => {
                self.by_toneless.get(strip_tone(counterpart))
            }
            None => None,
        };
        ids.map(|ids| ids.iter().map(|&i| &self.entries[i].fragment).collect())
            .unwrap_or_default()
    }

    pub fn attribute_labels(&self) -> impl Iterator<Item = &Attribute> {
        self.by_attribute.keys()
    }

    pub fn attribute_group(&self, attribute: &Attribute) -> Vec<&AttributeEntry> {
        self.by_attribute
            .get(attribute)
            .map(|ids| ids.iter().map(|&i| &self.attributes[i]).collect())
            .unwrap_or_default()
    }

    /// Attribute entries whose fragment is `fragment`.
    pub fn attributes_of(&self, fragment: &str) -> Vec<&AttributeEntry> {
        self.attributes
            .iter()
            .filter(|a| a.fragment.as_str() == fragment)
            .collect()
    }

    /// Uniform draw from the `attribute` group, never returning `exclude`.
    pub fn sample_compatible(
        &self,
        attribute: &Attribute,
        exclude: &str,
        seed: u64,
    ) -> Result<&AttributeEntry, KbError> {
        let candidates: Vec<_> = self
            .attribute_group(attribute)
            .into_iter()
            .filter(|a| a.fragment.as_str() != exclude)
            .collect();
        if candidates.is_empty() {
            return Err(KbError::EmptyAttributeGroup(attribute.clone()));
        }
        let mut rng = rng::stream(seed, &[0x5341_4d50]);
        Ok(candidates[rng.gen_range(0..candidates.len())])
    }

    /// Every `(fragment, text)` pair this KB can substitute: attribute entries
    /// first, then prior entries with their counterpart as text.
    pub fn replacement_pool(&self) -> Vec<(BrailleFragment, String)> {
        self.attributes
            .iter()
            .map(|a| (a.fragment.clone(), a.text.clone()))
            .chain(
                self.entries
                    .iter()
                    .map(|e| (e.fragment.clone(), e.counterpart.clone())),
            )
            .collect()
    }
}

/// `1 - levenshtein(dot masks) / max(len)`; 1 for identical fragments.
pub fn similarity(a: &BrailleFragment, b: &BrailleFragment) -> f64 {
    let (x, y): (Vec<BrailleCell>, Vec<BrailleCell>) = (a.cells(), b.cells());
    let longest = x.len().max(y.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(&x, &y) as f64 / longest as f64
}

/// Character readings, used to build homophone token sets and to
/// transcribe Chinese prose when no per-word Pinyin is supplied.
#[derive(Debug, Clone, Default)]
pub struct CharPinyin {
    readings: HashMap<char, Vec<String>>,
}

impl CharPinyin {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, KbError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, KbError> {
        let mut table = CharPinyin::default();
        let mut errors = Vec::new();
        for (line, cols) in data_rows(text) {
            let mut chars = cols[0].chars();
            match (chars.next(), chars.next(), cols.get(1).map(|s| s.trim())) {
                (Some(c), None, Some(p)) if cols.len() == 2 && is_pinyin_syllable(p) => {
                    let list = table.readings.entry(c).or_default();
                    if list.iter().any(|x| x == p) {
                        errors.push(RowError::DuplicateEntry { line });
                    } else {
                        list.push(p.to_string());
                    }
                }
                _ => errors.push(RowError::Parse {
                    line,
                    reason: "expected a single character and a Pinyin syllable".into(),
                }),
            }
        }
        if errors.is_empty() {
            Ok(table)
        } else {
            Err(KbError::Rows(errors))
        }
    }

    pub fn insert(&mut self, ch: char, syllable: impl Into<String>) {
        self.readings.entry(ch).or_default().push(syllable.into());
    }

    pub fn readings(&self, ch: char) -> &[String] {
        self.readings.get(&ch).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn default_reading(&self, ch: char) -> Option<&str> {
        self.readings(ch).first().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frag(s: &str) -> BrailleFragment {
        BrailleFragment::new(s).unwrap()
    }

    #[test]
    fn load_shipped_rows() {
        let zh = KnowledgeBase::parse("HV2\than4\n", Language::Chinese).unwrap();
        assert_eq!(zh.lookup("HV2"), vec!["han4"]);
        let en = KnowledgeBase::parse("L1/\tleast\n", Language::English).unwrap();
        assert_eq!(en.lookup("L1/"), vec!["least"]);
        assert_eq!(en.inverse_lookup("least"), vec![&frag("L1/")]);
        assert!(en.lookup("XYZ").is_empty());
        assert!(en.inverse_lookup("unknown").is_empty());
    }

    #[test]
    fn empty_file_is_empty_kb() {
        let kb = KnowledgeBase::parse("# nothing\n\n", Language::Chinese).unwrap();
        assert_eq!(kb.len(), 0);
    }

    #[test]
    fn row_errors_are_collected() {
        let text = "HV2\than4\nabc\tfoo\nHV2\than4\nG*A\tJING\nD\tde\tx\n";
        match KnowledgeBase::parse(text, Language::Chinese) {
            Err(KbError::Rows(errs)) => {
                assert_eq!(errs.len(), 4, "{errs:?}");
                assert!(errs.contains(&RowError::DuplicateEntry { line: 3 }));
                assert!(matches!(errs[0], RowError::Parse { line: 2, .. }));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lookup_orders_by_frequency_then_text() {
        let kb = KnowledgeBase::parse(
            "G*A\tjing1\t5\nG*A\tjin1\t9\nG*A\tjing\t5\n",
            Language::Chinese,
        )
        .unwrap();
        assert_eq!(kb.lookup("G*A"), vec!["jin1", "jing", "jing1"]);
        assert_eq!(kb.top_entry("G*A").unwrap().counterpart, "jin1");
    }

    #[test]
    fn tone_insensitive_fallback() {
        let kb = KnowledgeBase::parse("G*A\tjing1\nGI\tji4\n", Language::Chinese).unwrap();
        assert_eq!(kb.inverse_lookup("jing1"), vec![&frag("G*A")]);
        assert_eq!(kb.inverse_lookup("jing3"), vec![&frag("G*A")]);
        assert_eq!(kb.inverse_lookup("jing"), vec![&frag("G*A")]);
        assert!(kb.inverse_lookup("zhan3").is_empty());
    }

    #[test]
    fn sampling_excludes_and_errors() {
        let mut kb = KnowledgeBase::empty(Language::Chinese);
        kb.parse_attributes("IW\tQuantifier\t一位\nB9A:1SVASW\tQuantifier\t八十三岁\n")
            .unwrap();
        for seed in 0..20 {
            let e = kb
                .sample_compatible(&Attribute::Quantifier, "IW", seed)
                .unwrap();
            assert_eq!(e.fragment.as_str(), "B9A:1SVASW");
        }
        let mut single = KnowledgeBase::empty(Language::Chinese);
        single.parse_attributes("IW\tQuantifier\t一位\n").unwrap();
        assert!(matches!(
            single.sample_compatible(&Attribute::Quantifier, "IW", 0),
            Err(KbError::EmptyAttributeGroup(Attribute::Quantifier))
        ));
    }

    #[test]
    fn duplicate_attribute_pair_rejected() {
        let mut kb = KnowledgeBase::empty(Language::Chinese);
        let r = kb.parse_attributes("IW\tQuantifier\ta\nIW\tQuantifier\tb\nIW\tNoun\tc\n");
        assert!(
            matches!(r, Err(KbError::Rows(ref e)) if e == &[RowError::DuplicateEntry { line: 2 }])
        );
    }

    #[test]
    fn similarity_examples() {
        assert_eq!(similarity(&frag("IW"), &frag("IW")), 1.0);
        assert_eq!(similarity(&frag("A"), &frag("B")), 0.0);
        assert!((similarity(&frag("IW"), &frag("IW2")) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pinyin_pattern() {
        assert!(is_pinyin_syllable("han4"));
        assert!(is_pinyin_syllable("de"));
        assert!(is_pinyin_syllable("lü4"));
        assert!(!is_pinyin_syllable("han6"));
        assert!(!is_pinyin_syllable("4"));
        assert!(!is_pinyin_syllable("Han4"));
    }

    #[test]
    fn words_and_readings() {
        let mut kb = KnowledgeBase::empty(Language::Chinese);
        kb.parse_words("G*A GI\t50\nD\n").unwrap();
        assert_eq!(kb.words()[0].surface(), "G*AGI");
        assert_eq!(kb.words()[1].frequency, 0);
        let cp = CharPinyin::parse("经\tjing1\n的\tde\n").unwrap();
        assert_eq!(cp.default_reading('经'), Some("jing1"));
        assert!(CharPinyin::parse("经济\tjing1\n").is_err());
    }
}
