use std::collections::HashMap;

use super::tokenize::{tokenize, Tokenize};
use super::{Metric, MetricError};

pub struct Bleu {
    pub max_n: usize,
    pub tokenize: Tokenize,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

impl Bleu {
    /// `[hyp_len, ref_len, match_1, total_1, .., match_n, total_n]`
    fn pair_stats(&self, hyp: &str, reference: &str) -> Vec<f64> {
        let h = tokenize(hyp, self.tokenize);
        let r = tokenize(reference, self.tokenize);
        let mut stats = vec![h.len() as f64, r.len() as f64];
        for n in 1..=self.max_n {
            let hc = ngram_counts(&h, n);
            let rc = ngram_counts(&r, n);
            let matched: usize = hc
                .iter()
                .map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0)))
                .sum();
            stats.push(matched as f64);
            stats.push(h.len().saturating_sub(n - 1) as f64);
        }
        stats
    }

    fn combine(&self, stats: &[f64], smooth: bool) -> f64 {
        let (c, r) = (stats[0], stats[1]);
        if c == 0.0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        let mut order = 0;
        let mut k = 1.0;
        for n in 0..self.max_n {
            let (m, t) = (stats[2 + 2 * n], stats[3 + 2 * n]);
            if t == 0.0 {
                continue;
            }
            order += 1;
            let p = if m > 0.0 {
                m / t
            } else if smooth {
                k *= 2.0;
                1.0 / (k * t)
            } else {
                return 0.0;
            };
            log_sum += p.ln();
        }
        if order == 0 {
            return 0.0;
        }
        let bp = if c >= r { 1.0 } else { (1.0 - r / c).exp() };
        100.0 * bp * (log_sum / order as f64).exp()
    }
}

impl Metric for Bleu {
    fn name(&self) -> &'static str {
        "bleu"
    }

    fn stats(&self, hyp: &str, reference: &str) -> Result<Vec<f64>, MetricError> {
        Ok(self.pair_stats(hyp, reference))
    }

    /// Unsmoothed; orders without any hypothesis n-gram are left out of the mean.
    fn score(&self, stats: &[f64]) -> f64 {
        self.combine(stats, false)
    }

    /// Exponentially smoothed zero precisions.
    fn sentence_score(&self, hyp: &str, reference: &str) -> Result<f64, MetricError> {
        Ok(self.combine(&self.pair_stats(hyp, reference), true))
    }
}

pub fn corpus_bleu(
    hyps: &[&str],
    refs: &[&str],
    max_n: usize,
    tokenize: Tokenize,
) -> Result<f64, MetricError> {
    Bleu { max_n, tokenize }.corpus_score(hyps, refs)
}

pub fn sentence_bleu(hyp: &str, reference: &str, max_n: usize, tokenize: Tokenize) -> f64 {
    Bleu { max_n, tokenize }
        .sentence_score(hyp, reference)
        .expect("bleu accepts any pair")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_disjoint() {
        let hyps = ["the cat sat on the mat", "经济快速发展"];
        assert_eq!(corpus_bleu(&hyps, &hyps, 4, Tokenize::Intl).unwrap(), 100.0);
        assert_eq!(
            corpus_bleu(&["a b c d"], &["a b c e"], 4, Tokenize::Whitespace).unwrap(),
            0.0
        );
        assert!(matches!(
            corpus_bleu(&[], &[], 4, Tokenize::Char),
            Err(MetricError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn hand_computed_with_brevity_penalty() {
        // 3 of 3 unigrams, 2 of 2 bigrams; 4 reference tokens.
        let b = corpus_bleu(&["a b c"], &["a b c d"], 2, Tokenize::Whitespace).unwrap();
        assert!((b - 100.0 * (1.0f64 - 4.0 / 3.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn smoothing_keeps_sentence_scores_positive() {
        let s = sentence_bleu("a b c d", "a b c e", 4, Tokenize::Whitespace);
        assert!(s > 0.0 && s < 100.0);
    }
}
