use unicode_normalization::UnicodeNormalization;

use super::latex;
use super::{DatasetError, ParallelExample};

/// A `$...$` or `$$...$$` region, in character offsets including delimiters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MathSpan {
    pub start: usize,
    pub end: usize,
    pub display: bool,
    pub body: String,
}

pub fn math_spans(text: &str) -> Result<Vec<MathSpan>, DatasetError> {
    let chars: Vec<char> = text.chars().collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        match chars[i] {
            '\\' => i += 2,
            '$' => {
                let display = chars.get(i + 1) == Some(&'$');
                let width = if display { 2 } else { 1 };
                let open = i;
                let mut j = i + width;
                let close = loop {
                    match chars.get(j) {
                        None => return Err(DatasetError::UnbalancedMathDelimiters),
                        Some('\\') => j += 2,
                        Some('$') if !display => break j,
                        Some('$') if chars.get(j + 1) == Some(&'$') => break j,
                        Some('$') => return Err(DatasetError::UnbalancedMathDelimiters),
                        Some(_) => j += 1,
                    }
                };
                spans.push(MathSpan {
                    start: open,
                    end: close + width,
                    display,
                    body: chars[open + width..close].iter().collect(),
                });
                i = close + width;
            }
            _ => i += 1,
        }
    }
    Ok(spans)
}

fn clean_prose(s: &str, out: &mut String) {
    for c in s.chars() {
        if c.is_whitespace() {
            if !out.is_empty() && !out.ends_with(' ') {
                out.push(' ');
            }
        } else {
            out.push(c);
        }
    }
}

/// NFC, control characters removed, prose whitespace collapsed and math
/// spans rewritten to canonical LaTeX.
pub fn normalize(raw: &str) -> Result<String, DatasetError> {
    let composed: String = raw
        .nfc()
        .filter_map(|c| match c {
            c if c.is_whitespace() => Some(' '),
            c if c.is_control() => None,
            c => Some(c),
        })
        .collect();
    let chars: Vec<char> = composed.chars().collect();
    let mut out = String::new();
    let mut pos = 0;
    for span in math_spans(&composed)? {
        let prose: String = chars[pos..span.start].iter().collect();
        clean_prose(&prose, &mut out);
        let body = latex::serialize(&latex::canonicalize(latex::parse(&span.body)?));
        let delim = if span.display { "$$" } else { "$" };
        out.push_str(delim);
        out.push_str(&body);
        out.push_str(delim);
        pos = span.end;
    }
    let prose: String = chars[pos..].iter().collect();
    clean_prose(&prose, &mut out);
    Ok(out.trim_end().to_string())
}

/// Normalizes each aligned text unit separately so offsets can be recomputed.
pub fn normalize_example(ex: &ParallelExample) -> Result<ParallelExample, DatasetError> {
    if ex.alignment.is_empty() {
        let mut out = ex.clone();
        out.text = normalize(&ex.text)?;
        return Ok(out);
    }
    let mut parts = ex.parts()?;
    let last = parts.text_gaps.len() - 1;
    for u in parts.text_units.iter_mut() {
        *u = normalize(u)?;
    }
    for (i, g) in parts.text_gaps.iter_mut().enumerate() {
        *g = if i == 0 || i == last || g.is_empty() {
            String::new()
        } else {
            " ".to_string()
        };
    }
    Ok(ParallelExample::from_parts(&ex.id, ex.language, &parts))
}
