use serde::Serialize;

use super::{latex, math_spans, ParallelExample};
use crate::braille::{validate, BrailleSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Text,
    Braille,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Issue {
    EmptyText,
    EmptyBraille,
    InvalidBrailleAscii { position: usize, ch: char },
    MalformedBraille { message: String },
    MalformedLatex { message: String },
    AlignmentOutOfBounds { index: usize, side: Side },
    AlignmentEmptySpan { index: usize, side: Side },
    AlignmentOverlap { index: usize, side: Side },
    AlignmentGap { index: usize, side: Side },
}

fn check_side(spans: &[(usize, usize)], chars: &[char], side: Side, issues: &mut Vec<Issue>) {
    let mut prev_end = 0;
    let mut in_bounds = true;
    for (i, &(s, e)) in spans.iter().enumerate() {
        if e > chars.len() || s > e {
            issues.push(Issue::AlignmentOutOfBounds { index: i, side });
            in_bounds = false;
            continue;
        }
        if s == e {
            issues.push(Issue::AlignmentEmptySpan { index: i, side });
        }
        if s < prev_end {
            issues.push(Issue::AlignmentOverlap { index: i, side });
        } else if chars[prev_end..s].iter().any(|c| !c.is_whitespace()) {
            issues.push(Issue::AlignmentGap { index: i, side });
        }
        prev_end = prev_end.max(e);
    }
    if in_bounds && !spans.is_empty() && chars[prev_end..].iter().any(|c| !c.is_whitespace()) {
        issues.push(Issue::AlignmentGap {
            index: spans.len(),
            side,
        });
    }
}

/// Every problem found in `ex`; an empty list means the example is clean.
/// Alignment, when present, must cover both sides except for whitespace.
pub fn validate_example(ex: &ParallelExample) -> Vec<Issue> {
    let mut issues = Vec::new();
    if ex.text.trim().is_empty() {
        issues.push(Issue::EmptyText);
    }
    if ex.braille.is_empty() {
        issues.push(Issue::EmptyBraille);
    }
    let bad = validate(&ex.braille).issues;
    let braille_ok = bad.is_empty();
    issues.extend(bad.into_iter().map(|b| Issue::InvalidBrailleAscii {
        position: b.position,
        ch: b.ch,
    }));
    if braille_ok {
        if let Err(e) = BrailleSequence::parse(&ex.braille) {
            issues.push(Issue::MalformedBraille {
                message: e.to_string(),
            });
        }
    }
    match math_spans(&ex.text) {
        Ok(spans) => {
            for s in spans {
                if let Err(e) = latex::parse(&s.body) {
                    issues.push(Issue::MalformedLatex {
                        message: e.to_string(),
                    });
                }
            }
        }
        Err(e) => issues.push(Issue::MalformedLatex {
            message: e.to_string(),
        }),
    }
    let t: Vec<char> = ex.text.chars().collect();
    let b: Vec<char> = ex.braille.chars().collect();
    let ts: Vec<_> = ex.alignment.iter().map(|a| (a[0], a[1])).collect();
    let bs: Vec<_> = ex.alignment.iter().map(|a| (a[2], a[3])).collect();
    check_side(&ts, &t, Side::Text, &mut issues);
    check_side(&bs, &b, Side::Braille, &mut issues);
    issues
}
