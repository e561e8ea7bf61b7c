//! Reference-based evaluation: BLEU, chrF++, CER and TER.
//!
//! Every metric reduces a pair to a vector of additive sufficient statistics.
//! Corpus scores are computed from the element-wise sum, so they do not depend
//! on pair order.

mod bleu;
mod chrf;
mod ter;
mod tokenize;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bleu::{corpus_bleu, sentence_bleu, Bleu};
pub use chrf::{chrf_pp, ChrF};
pub use ter::{ter, ter_edit_only, Ter};
pub use tokenize::{tokenize, Tokenize};

use crate::edit::levenshtein;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("{hyps} hypotheses but {refs} references")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("unknown metric {0}")]
    UnknownMetric(String),
}

pub trait Metric: Send + Sync {
    fn name(&self) -> &'static str;
    /// Additive sufficient statistics of one pair.
    fn stats(&self, hyp: &str, reference: &str) -> Result<Vec<f64>, MetricError>;
    /// Score from (possibly summed) statistics.
    fn score(&self, stats: &[f64]) -> f64;

    fn sentence_score(&self, hyp: &str, reference: &str) -> Result<f64, MetricError> {
        Ok(self.score(&self.stats(hyp, reference)?))
    }

    fn corpus_score(&self, hyps: &[&str], refs: &[&str]) -> Result<f64, MetricError> {
        Ok(self.score(&corpus_stats(self, hyps, refs)?))
    }
}

fn corpus_stats<M: Metric + ?Sized>(
    metric: &M,
    hyps: &[&str],
    refs: &[&str],
) -> Result<Vec<f64>, MetricError> {
    if hyps.len() != refs.len() || hyps.is_empty() {
        return Err(MetricError::LengthMismatch {
            hyps: hyps.len(),
            refs: refs.len(),
        });
    }
    let mut total: Vec<f64> = Vec::new();
    for (h, r) in hyps.iter().zip(refs) {
        let s = metric.stats(h, r)?;
        if total.is_empty() {
            total = s;
        } else {
            total.iter_mut().zip(&s).for_each(|(t, x)| *t += x);
        }
    }
    Ok(total)
}

/// Character error rate: Levenshtein distance over Unicode scalar values divided by reference length.
pub fn cer(hyp: &str, reference: &str) -> Result<f64, MetricError> {
    let s = Cer.stats(hyp, reference)?;
    Ok(Cer.score(&s))
}

pub struct Cer;

impl Metric for Cer {
    fn name(&self) -> &'static str {
        "cer"
    }

    fn stats(&self, hyp: &str, reference: &str) -> Result<Vec<f64>, MetricError> {
        let r: Vec<char> = reference.chars().collect();
        if r.is_empty() {
            return Err(MetricError::EmptyReference);
        }
        let h: Vec<char> = hyp.chars().collect();
        Ok(vec![levenshtein(&h, &r) as f64, r.len() as f64])
    }

    fn score(&self, stats: &[f64]) -> f64 {
        stats[0] / stats[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub tokenize: Tokenize,
    pub max_n: usize,
    pub char_n: usize,
    pub word_n: usize,
    pub beta: f64,
    pub ter_shifts: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            tokenize: Tokenize::Intl,
            max_n: 4,
            char_n: 6,
            word_n: 2,
            beta: 2.0,
            ter_shifts: true,
        }
    }
}

/// Metrics by name, built from one configuration.
pub struct MetricRegistry {
    metrics: BTreeMap<&'static str, Box<dyn Metric>>,
}

impl MetricRegistry {
    pub fn empty() -> Self {
        MetricRegistry {
            metrics: BTreeMap::new(),
        }
    }

    pub fn with_config(config: &MetricConfig) -> Self {
        let mut r = MetricRegistry::empty();
        r.register(Box::new(Bleu {
            max_n: config.max_n,
            tokenize: config.tokenize,
        }));
        r.register(Box::new(ChrF {
            char_n: config.char_n,
            word_n: config.word_n,
            beta: config.beta,
        }));
        r.register(Box::new(Cer));
        r.register(Box::new(Ter {
            tokenize: config.tokenize,
            shifts: config.ter_shifts,
        }));
        r
    }

    pub fn register(&mut self, metric: Box<dyn Metric>) {
        self.metrics.insert(metric.name(), metric);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Metric, MetricError> {
        self.metrics
            .get(name)
            .map(|m| m.as_ref())
            .ok_or_else(|| MetricError::UnknownMetric(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.metrics.keys().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub per_pair: Vec<BTreeMap<String, f64>>,
    pub corpus: BTreeMap<String, f64>,
    pub stats: BTreeMap<String, Vec<f64>>,
    pub config: MetricConfig,
}

/// Scores `hyps` against `refs` with the named metrics.
pub fn evaluate(
    hyps: &[&str],
    refs: &[&str],
    names: &[&str],
    config: &MetricConfig,
) -> Result<MetricReport, MetricError> {
    let registry = MetricRegistry::with_config(config);
    let metrics = names
        .iter()
        .map(|n| registry.get(n))
        .collect::<Result<Vec<_>, _>>()?;
    let mut per_pair = vec![BTreeMap::new(); hyps.len()];
    let mut corpus = BTreeMap::new();
    let mut stats = BTreeMap::new();
    for m in metrics {
        for (i, (h, r)) in hyps.iter().zip(refs).enumerate() {
            per_pair[i].insert(m.name().to_string(), m.sentence_score(h, r)?);
        }
        let total = corpus_stats(m, hyps, refs)?;
        corpus.insert(m.name().to_string(), m.score(&total));
        stats.insert(m.name().to_string(), total);
    }
    Ok(MetricReport {
        per_pair,
        corpus,
        stats,
        config: config.clone(),
    })
}
