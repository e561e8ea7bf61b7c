use super::tokenize::{tokenize, Tokenize};
use super::{Metric, MetricError};
use crate::edit::levenshtein;

const MAX_SHIFT_SIZE: usize = 10;
const MAX_SHIFT_DIST: usize = 50;

pub struct Ter {
    pub tokenize: Tokenize,
    pub shifts: bool,
}

fn occurs_in<T: PartialEq>(phrase: &[T], haystack: &[T]) -> bool {
    haystack.windows(phrase.len()).any(|w| w == phrase)
}

fn shifted<T: Clone>(seq: &[T], start: usize, len: usize, dest: usize) -> Vec<T> {
    let mut rest: Vec<T> = seq[..start].to_vec();
    rest.extend_from_slice(&seq[start + len..]);
    let block = &seq[start..start + len];
    rest.splice(dest..dest, block.iter().cloned());
    rest
}

/// Best single block move, scanned by start, then longest block, then destination.
fn best_shift<T: PartialEq + Clone>(
    hyp: &[T],
    reference: &[T],
    current: usize,
) -> Option<(Vec<T>, usize)> {
    let mut best: Option<(Vec<T>, usize)> = None;
    for start in 0..hyp.len() {
        let longest = MAX_SHIFT_SIZE.min(hyp.len() - start);
        for len in (1..=longest).rev() {
            if !occurs_in(&hyp[start..start + len], reference) {
                continue;
            }
            for dest in 0..=hyp.len() - len {
                if dest == start || dest.abs_diff(start) > MAX_SHIFT_DIST {
                    continue;
                }
                let cand = shifted(hyp, start, len, dest);
                let d = levenshtein(&cand, reference);
                let bar = best.as_ref().map_or(current, |b| b.1);
                if d < bar {
                    best = Some((cand, d));
                }
            }
        }
    }
    best
}

/// `(edits, shifts)` after greedily applying distance-reducing block moves.
pub(crate) fn ter_counts<T: PartialEq + Clone>(
    hyp: &[T],
    reference: &[T],
    allow_shifts: bool,
) -> (usize, usize) {
    let mut cur = hyp.to_vec();
    let mut d = levenshtein(&cur, reference);
    let mut shifts = 0;
    while allow_shifts && d > 0 {
        match best_shift(&cur, reference, d) {
            Some((next, nd)) => {
                cur = next;
                d = nd;
                shifts += 1;
            }
            None => break,
        }
    }
    (d, shifts)
}

/// `(edits + shifts) / |ref| * 100`.
pub fn ter<T: PartialEq + Clone>(hyp: &[T], reference: &[T]) -> Result<f64, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let (e, s) = ter_counts(hyp, reference, true);
    Ok(100.0 * (e + s) as f64 / reference.len() as f64)
}

/// TER without block moves: plain token edit distance over reference length.
pub fn ter_edit_only<T: PartialEq + Clone>(hyp: &[T], reference: &[T]) -> Result<f64, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    Ok(100.0 * levenshtein(hyp, reference) as f64 / reference.len() as f64)
}

impl Metric for Ter {
    fn name(&self) -> &'static str {
        "ter"
    }

    fn stats(&self, hyp: &str, reference: &str) -> Result<Vec<f64>, MetricError> {
        let h = tokenize(hyp, self.tokenize);
        let r = tokenize(reference, self.tokenize);
        if r.is_empty() {
            return Err(MetricError::EmptyReference);
        }
        let (e, s) = ter_counts(&h, &r, self.shifts);
        Ok(vec![(e + s) as f64, r.len() as f64])
    }

    fn score(&self, stats: &[f64]) -> f64 {
        100.0 * stats[0] / stats[1]
    }
}
