use std::collections::HashMap;
use std::hash::Hash;

use super::{Metric, MetricError};

/// chrF++ with character orders `1..=char_n` and word orders `1..=word_n`.
pub struct ChrF {
    pub char_n: usize,
    pub word_n: usize,
    pub beta: f64,
}

fn count<T: Eq + Hash>(s: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut m = HashMap::new();
    if s.len() >= n {
        for w in s.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

fn matches<T: Eq + Hash>(h: &[T], r: &[T], n: usize) -> [f64; 3] {
    let (hc, rc) = (count(h, n), count(r, n));
    let matched: usize = hc
        .iter()
        .map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0)))
        .sum();
    [
        h.len().saturating_sub(n - 1) as f64,
        r.len().saturating_sub(n - 1) as f64,
        matched as f64,
    ]
}

/// Whitespace split with one leading and one trailing punctuation mark split off.
pub(crate) fn chrf_words(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    for w in s.split_whitespace() {
        let chars: Vec<char> = w.chars().collect();
        if chars.len() == 1 {
            out.push(w.to_string());
            continue;
        }
        let lead = chars[0].is_ascii_punctuation();
        let trail = chars[chars.len() - 1].is_ascii_punctuation();
        let (a, b) = (usize::from(lead), chars.len() - usize::from(trail));
        if lead {
            out.push(chars[0].to_string());
        }
        if a < b {
            out.push(chars[a..b].iter().collect());
        }
        if trail {
            out.push(chars[chars.len() - 1].to_string());
        }
    }
    out
}

impl Metric for ChrF {
    fn name(&self) -> &'static str {
        "chrf"
    }

    /// `[hyp, ref, match]` per order, character orders first.
    fn stats(&self, hyp: &str, reference: &str) -> Result<Vec<f64>, MetricError> {
        let hc: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
        let rc: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
        let hw = chrf_words(hyp);
        let rw = chrf_words(reference);
        let mut stats = Vec::with_capacity(3 * (self.char_n + self.word_n));
        for n in 1..=self.char_n {
            stats.extend(matches(&hc, &rc, n));
        }
        for n in 1..=self.word_n {
            stats.extend(matches(&hw, &rw, n));
        }
        Ok(stats)
    }

    /// Precision and recall are averaged over the orders where both sides have
    /// n-grams, then combined into F-beta.
    fn score(&self, stats: &[f64]) -> f64 {
        if stats
            .iter()
            .step_by(3)
            .chain(stats.iter().skip(1).step_by(3))
            .all(|&x| x == 0.0)
        {
            return 100.0;
        }
        let (mut p, mut r, mut orders) = (0.0, 0.0, 0usize);
        for s in stats.chunks_exact(3) {
            if s[0] > 0.0 && s[1] > 0.0 {
                p += s[2] / s[0];
                r += s[2] / s[1];
                orders += 1;
            }
        }
        if orders == 0 {
            return 0.0;
        }
        let (p, r) = (p / orders as f64, r / orders as f64);
        let b2 = self.beta * self.beta;
        let denom = b2 * p + r;
        if denom == 0.0 {
            0.0
        } else {
            100.0 * (1.0 + b2) * p * r / denom
        }
    }
}

pub fn chrf_pp(hyp: &str, reference: &str, char_n: usize, word_n: usize, beta: f64) -> f64 {
    ChrF {
        char_n,
        word_n,
        beta,
    }
    .sentence_score(hyp, reference)
    .expect("chrF accepts any pair")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_values() {
        assert_eq!(chrf_pp("经济的 发展", "经济的 发展", 6, 2, 2.0), 100.0);
        assert_eq!(chrf_pp("", "", 6, 2, 2.0), 100.0);
        assert_eq!(chrf_pp("", "abc", 6, 2, 2.0), 0.0);
        assert_eq!(chrf_pp("abc", "xyz", 6, 2, 2.0), 0.0);
    }

    #[test]
    fn abcd_vs_abce_by_hand() {
        // char orders 1..4 have matches 3/4, 2/3, 1/2, 0/1; words: 0/1.
        let p = (0.75 + 2.0 / 3.0 + 0.5 + 0.0 + 0.0) / 5.0;
        let want = 100.0 * 5.0 * p * p / (4.0 * p + p);
        assert!((chrf_pp("abcd", "abce", 6, 2, 2.0) - want).abs() < 1e-12);
    }

    #[test]
    fn word_punctuation_split() {
        assert_eq!(
            chrf_words("Hello, (world)!"),
            ["Hello", ",", "(", "world)", "!"]
        );
        assert_eq!(chrf_words("a ."), ["a", "."]);
    }
}
