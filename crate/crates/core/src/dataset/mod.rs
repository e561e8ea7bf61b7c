//! Corpus ingestion: parallel examples, normalization, validation, instruction
//! rendering and rule-based mixed-text transcription.

pub mod latex;
mod normalize;
mod template;
mod transcribe;
mod validate;

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use normalize::{math_spans, normalize, normalize_example, MathSpan};
pub use template::{render_instruction, Direction, InstructionRecord, TaskType};
pub use transcribe::{transcribe_mixed, Context, Pattern, Rule, RuleSet, Transcriber};
pub use validate::{validate_example, Issue, Side};

use crate::kb::Language;

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("unbalanced math delimiters")]
    UnbalancedMathDelimiters,
    #[error("unbalanced braces in math")]
    UnbalancedBraces,
    #[error("malformed LaTeX: {0}")]
    MalformedLatex(String),
    #[error("unknown template placeholder {{{0}}}")]
    UnknownPlaceholder(String),
    #[error("template must contain {{input}} exactly once")]
    InputPlaceholder,
    #[error("rendered instruction does not contain the input exactly once")]
    AmbiguousInput,
    #[error("no rule or knowledge-base entry for {symbol:?} at character {position}")]
    UntranscribableSymbol { position: usize, symbol: String },
    #[error("{given} pinyin syllables supplied for {needed} characters")]
    PinyinMismatch { given: usize, needed: usize },
    #[error("rules line {line}: {reason}")]
    Rule { line: usize, reason: String },
    #[error("alignment is not a monotone in-bounds span list")]
    BrokenAlignment,
    #[error("line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for DatasetError {
    fn from(e: std::io::Error) -> Self {
        DatasetError::Io(e.to_string())
    }
}

/// One aligned text/Braille pair. Alignment entries are
/// `[text_start, text_end, braille_start, braille_end]` in characters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelExample {
    pub id: String,
    pub language: Language,
    pub text: String,
    pub braille: String,
    #[serde(default)]
    pub alignment: Vec<[usize; 4]>,
}

/// An example cut into aligned units and the gaps between them.
/// `gaps` has one more element than `units`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedParts {
    pub text_units: Vec<String>,
    pub text_gaps: Vec<String>,
    pub braille_units: Vec<String>,
    pub braille_gaps: Vec<String>,
}

fn cut(
    chars: &[char],
    spans: impl Iterator<Item = (usize, usize)>,
) -> Option<(Vec<String>, Vec<String>)> {
    let mut units = Vec::new();
    let mut gaps = Vec::new();
    let mut pos = 0;
    for (s, e) in spans {
        if s < pos || e < s || e > chars.len() {
            return None;
        }
        gaps.push(chars[pos..s].iter().collect());
        units.push(chars[s..e].iter().collect());
        pos = e;
    }
    gaps.push(chars[pos..].iter().collect());
    Some((units, gaps))
}

impl ParallelExample {
    pub fn parts(&self) -> Result<AlignedParts, DatasetError> {
        let t: Vec<char> = self.text.chars().collect();
        let b: Vec<char> = self.braille.chars().collect();
        let (text_units, text_gaps) = cut(&t, self.alignment.iter().map(|a| (a[0], a[1])))
            .ok_or(DatasetError::BrokenAlignment)?;
        let (braille_units, braille_gaps) = cut(&b, self.alignment.iter().map(|a| (a[2], a[3])))
            .ok_or(DatasetError::BrokenAlignment)?;
        Ok(AlignedParts {
            text_units,
            text_gaps,
            braille_units,
            braille_gaps,
        })
    }

    /// Reassembles an example, recomputing alignment offsets.
    pub fn from_parts(id: impl Into<String>, language: Language, parts: &AlignedParts) -> Self {
        fn join(units: &[String], gaps: &[String]) -> (String, Vec<(usize, usize)>) {
            let mut s = String::new();
            let mut spans = Vec::new();
            let mut pos = 0;
            for (u, g) in units.iter().zip(gaps) {
                s.push_str(g);
                pos += g.chars().count();
                s.push_str(u);
                let end = pos + u.chars().count();
                spans.push((pos, end));
                pos = end;
            }
            if let Some(last) = gaps.get(units.len()) {
                s.push_str(last);
            }
            (s, spans)
        }
        let (text, ts) = join(&parts.text_units, &parts.text_gaps);
        let (braille, bs) = join(&parts.braille_units, &parts.braille_gaps);
        let alignment = ts
            .iter()
            .zip(&bs)
            .map(|(t, b)| [t.0, t.1, b.0, b.1])
            .collect();
        ParallelExample {
            id: id.into(),
            language,
            text,
            braille,
            alignment,
        }
    }
}

pub fn read_jsonl<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| DatasetError::Json {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(mut writer: impl Write, rows: &[T]) -> Result<(), DatasetError> {
    for r in rows {
        let line = serde_json::to_string(r).map_err(|e| DatasetError::Io(e.to_string()))?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

/// Drops examples whose normalized text was already seen; first occurrence wins.
pub fn dedup(corpus: Vec<ParallelExample>) -> Vec<ParallelExample> {
    let mut seen = HashSet::new();
    corpus
        .into_iter()
        .filter(|ex| seen.insert(normalize(&ex.text).unwrap_or_else(|_| ex.text.clone())))
        .collect()
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestReport {
    pub kept: Vec<ParallelExample>,
    pub rejected: Vec<(String, Vec<Issue>)>,
    pub duplicates: usize,
}

/// Normalize, validate and deduplicate a corpus.
pub fn ingest(corpus: Vec<ParallelExample>) -> IngestReport {
    let mut report = IngestReport::default();
    let mut clean = Vec::new();
    for ex in corpus {
        match normalize_example(&ex) {
            Ok(n) => {
                let issues = validate_example(&n);
                if issues.is_empty() {
                    clean.push(n);
                } else {
                    report.rejected.push((n.id, issues));
                }
            }
            Err(e) => report.rejected.push((
                ex.id,
                vec![Issue::MalformedLatex {
                    message: e.to_string(),
                }],
            )),
        }
    }
    let before = clean.len();
    report.kept = dedup(clean);
    report.duplicates = before - report.kept.len();
    report
}
