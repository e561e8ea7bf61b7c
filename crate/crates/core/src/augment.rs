//! Braille data augmentation.
//!
//! [`augment`] swaps labelled spans of an annotated example for other
//! fragments with the same attribute. [`noise_inject`] and
//! [`fragment_replace`] are the attribute-agnostic baselines.
//!
//! Span indices address alignment units, so replacing a span rewrites the
//! Braille and text sides together.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braille::{BrailleFragment, WORD_SEPARATOR};
use crate::dataset::{validate_example, AlignedParts, DatasetError, Issue, ParallelExample};
use crate::kb::{similarity, Attribute, KnowledgeBase, Language};
use crate::rng;

const SYNTAX_DOMAIN: u64 = 0x5359_4e54;
const NOISE_DOMAIN: u64 = 0x4e4f_4953;
const REPLACE_DOMAIN: u64 = 0x5245_504c;

#[derive(Debug, Error, PartialEq)]
pub enum AugmentError {
    #[error("k must be at least 1")]
    ZeroReplacements,
    #[error("{eligible} spans have an alternative but {needed} replacements were requested (span {span:?} has none)")]
    InsufficientCandidates {
        span: Option<usize>,
        eligible: usize,
        needed: usize,
    },
    #[error("rate {0} is outside [0, 1]")]
    InvalidRate(f64),
    #[error("knowledge base has no replacement entries")]
    EmptyKnowledgeBase,
    #[error("example {id} is invalid: {issues:?}")]
    InvalidExample { id: String, issues: Vec<Issue> },
    #[error("example {id}: {source}")]
    Dataset { id: String, source: DatasetError },
    #[error("unknown augmenter {0}")]
    UnknownAugmenter(String),
}

/// A labelled run of alignment units `start..end`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSpan {
    pub start: usize,
    pub end: usize,
    pub attribute: Attribute,
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedExample {
    #[serde(flatten)]
    pub example: ParallelExample,
    #[serde(default)]
    pub spans: Vec<LabeledSpan>,
}

impl AnnotatedExample {
    /// Braille and text covered by span `i`, internal gaps included.
    pub fn span_content(&self, i: usize) -> Result<(String, String), AugmentError> {
        let parts = parts_of(&self.example)?;
        let s = &self.spans[i];
        Ok(region(&parts, s.start, s.end))
    }

    /// Ordering and bounds problems of the annotation.
    pub fn annotation_issues(&self, kb: Option<&KnowledgeBase>) -> Vec<String> {
        let mut out = Vec::new();
        let units = self.example.alignment.len();
        let mut prev = 0;
        for (i, s) in self.spans.iter().enumerate() {
            if s.start >= s.end || s.end > units {
                out.push(format!("span {i} has bad bounds {}..{}", s.start, s.end));
            } else if s.start < prev {
                out.push(format!("span {i} overlaps its predecessor"));
            }
            prev = prev.max(s.end);
            if let Some(kb) = kb {
                if kb.attribute_group(&s.attribute).is_empty() {
                    out.push(format!("span {i} has unknown attribute {}", s.attribute));
                }
            }
        }
        out
    }
}

fn parts_of(ex: &ParallelExample) -> Result<AlignedParts, AugmentError> {
    ex.parts().map_err(|source| AugmentError::Dataset {
        id: ex.id.clone(),
        source,
    })
}

fn region(parts: &AlignedParts, start: usize, end: usize) -> (String, String) {
    let mut b = String::new();
    let mut t = String::new();
    for u in start..end {
        if u > start {
            b.push_str(&parts.braille_gaps[u]);
            t.push_str(&parts.text_gaps[u]);
        }
        b.push_str(&parts.braille_units[u]);
        t.push_str(&parts.text_units[u]);
    }
    (b, t)
}

fn require_valid(ex: &ParallelExample) -> Result<(), AugmentError> {
    let issues = validate_example(ex);
    if issues.is_empty() {
        Ok(())
    } else {
        Err(AugmentError::InvalidExample {
            id: ex.id.clone(),
            issues,
        })
    }
}

/// Seed for example `index` of a corpus run.
pub fn example_seed(seed: u64, index: usize) -> u64 {
    rng::mix(&[seed, index as u64])
}

fn check_rate(rate: f64) -> Result<(), AugmentError> {
    if (0.0..=1.0).contains(&rate) {
        Ok(())
    } else {
        Err(AugmentError::InvalidRate(rate))
    }
}

fn selected_count(rate: f64, n: usize) -> usize {
    ((rate * n as f64).round() as usize).min(n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Spans replaced per example.
    pub k: usize,
    pub min_sim: f64,
    /// Restrict replacement to these attributes.
    pub attributes: Option<Vec<Attribute>>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            k: 1,
            min_sim: 0.0,
            attributes: None,
        }
    }
}

/// Replaces exactly `config.k` spans with same-attribute KB entries whose
/// similarity to the original is at least `config.min_sim`.
pub fn augment(
    ex: &AnnotatedExample,
    kb: &KnowledgeBase,
    config: &AugmentConfig,
    seed: u64,
) -> Result<AnnotatedExample, AugmentError> {
    if config.k == 0 {
        return Err(AugmentError::ZeroReplacements);
    }
    require_valid(&ex.example)?;
    let parts = parts_of(&ex.example)?;
    let mut options = Vec::new();
    let mut blocked = None;
    for (i, s) in ex.spans.iter().enumerate() {
        if let Some(allowed) = &config.attributes {
            if !allowed.contains(&s.attribute) {
                continue;
            }
        }
        let (braille, _) = region(&parts, s.start, s.end);
        let cells: String = braille.chars().filter(|&c| c != WORD_SEPARATOR).collect();
        let current = BrailleFragment::new(cells).ok();
        let candidates: Vec<(String, String)> = kb
            .attribute_group(&s.attribute)
            .into_iter()
            .filter(|a| a.fragment.as_str() != braille)
            .filter(|a| {
                current
                    .as_ref()
                    .is_none_or(|c| similarity(c, &a.fragment) >= config.min_sim)
            })
            .map(|a| (a.fragment.to_string(), a.text.clone()))
            .collect();
        if candidates.is_empty() {
            blocked.get_or_insert(i);
        } else {
            options.push((i, candidates));
        }
    }
    if options.len() < config.k {
        return Err(AugmentError::InsufficientCandidates {
            span: blocked,
            eligible: options.len(),
            needed: config.k,
        });
    }
    let mut rng = rng::stream(seed, &[SYNTAX_DOMAIN]);
    let mut picks: Vec<usize> = index::sample(&mut rng, options.len(), config.k).into_vec();
    picks.sort_unstable();
    let mut chosen = BTreeMap::new();
    for p in picks {
        let (span, cands) = &options[p];
        chosen.insert(*span, cands[rng.gen_range(0..cands.len())].clone());
    }
    Ok(rewrite(ex, &parts, &chosen))
}

/// Rebuilds `ex`, collapsing each replaced span into a single unit.
fn rewrite(
    ex: &AnnotatedExample,
    parts: &AlignedParts,
    chosen: &BTreeMap<usize, (String, String)>,
) -> AnnotatedExample {
    let n = parts.text_units.len();
    let mut span_at = vec![None; n];
    for (i, s) in ex.spans.iter().enumerate() {
        span_at[s.start] = Some(i);
    }
    let mut out = AlignedParts {
        text_units: Vec::new(),
        text_gaps: vec![parts.text_gaps[0].clone()],
        braille_units: Vec::new(),
        braille_gaps: vec![parts.braille_gaps[0].clone()],
    };
    let mut spans = Vec::new();
    let mut u = 0;
    while u < n {
        let span = span_at[u].map(|i| (i, &ex.spans[i]));
        let (end, braille, text) = match span {
            Some((i, s)) if chosen.contains_key(&i) => {
                let (b, t) = chosen[&i].clone();
                (s.end, b, t)
            }
            _ => (
                u + 1,
                parts.braille_units[u].clone(),
                parts.text_units[u].clone(),
            ),
        };
        if let Some((i, s)) = span {
            let new_start = out.text_units.len();
            let new_end = if chosen.contains_key(&i) {
                new_start + 1
            } else {
                new_start + (s.end - s.start)
            };
            let text = if chosen.contains_key(&i) {
                text.clone()
            } else {
                s.text.clone()
            };
            spans.push(LabeledSpan {
                start: new_start,
                end: new_end,
                attribute: s.attribute.clone(),
                text,
            });
        }
        out.braille_units.push(braille);
        out.text_units.push(text);
        out.braille_gaps.push(parts.braille_gaps[end].clone());
        out.text_gaps.push(parts.text_gaps[end].clone());
        u = end;
    }
    AnnotatedExample {
        example: ParallelExample::from_parts(&ex.example.id, ex.example.language, &out),
        spans,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseOp {
    Delete,
    Duplicate,
}

/// Exactly `round(rate * n)` distinct units, each deleted or duplicated with
/// equal probability. If every unit would be deleted the last one is
/// duplicated instead so the example keeps content.
pub fn noise_plan(n: usize, rate: f64, seed: u64) -> Result<Vec<(usize, NoiseOp)>, AugmentError> {
    check_rate(rate)?;
    let m = selected_count(rate, n);
    let mut rng = rng::stream(seed, &[NOISE_DOMAIN]);
    let mut picks = index::sample(&mut rng, n, m).into_vec();
    picks.sort_unstable();
    let mut plan: Vec<(usize, NoiseOp)> = picks
        .into_iter()
        .map(|i| {
            let op = if rng.gen_bool(0.5) {
                NoiseOp::Delete
            } else {
                NoiseOp::Duplicate
            };
            (i, op)
        })
        .collect();
    if n > 0 && plan.len() == n && plan.iter().all(|(_, op)| *op == NoiseOp::Delete) {
        plan[n - 1].1 = NoiseOp::Duplicate;
    }
    Ok(plan)
}

fn default_separator(language: Language) -> &'static str {
    match language {
        Language::Chinese => "",
        Language::English => " ",
    }
}

/// Applies a unit plan to an example. Separators are taken from the gap that
/// followed each surviving unit.
pub fn apply_noise(
    ex: &ParallelExample,
    plan: &[(usize, NoiseOp)],
) -> Result<ParallelExample, AugmentError> {
    let parts = parts_of(ex)?;
    let n = parts.text_units.len();
    let ops: BTreeMap<usize, NoiseOp> = plan.iter().copied().collect();
    let sep_after = |u: usize| -> (String, String) {
        if u + 1 < n {
            (
                parts.text_gaps[u + 1].clone(),
                parts.braille_gaps[u + 1].clone(),
            )
        } else if u > 0 {
            (parts.text_gaps[u].clone(), parts.braille_gaps[u].clone())
        } else {
            (
                default_separator(ex.language).to_string(),
                WORD_SEPARATOR.to_string(),
            )
        }
    };
    let mut kept: Vec<usize> = Vec::new();
    for u in 0..n {
        match ops.get(&u) {
            Some(NoiseOp::Delete) => {}
            Some(NoiseOp::Duplicate) => {
                kept.push(u);
                kept.push(u);
            }
            None => kept.push(u),
        }
    }
    let mut out = AlignedParts {
        text_units: Vec::new(),
        text_gaps: vec![parts.text_gaps[0].clone()],
        braille_units: Vec::new(),
        braille_gaps: vec![parts.braille_gaps[0].clone()],
    };
    for (k, &u) in kept.iter().enumerate() {
        if k > 0 {
            let (t, b) = sep_after(kept[k - 1]);
            out.text_gaps.push(t);
            out.braille_gaps.push(b);
        }
        out.text_units.push(parts.text_units[u].clone());
        out.braille_units.push(parts.braille_units[u].clone());
    }
    out.text_gaps.push(parts.text_gaps[n].clone());
    out.braille_gaps.push(parts.braille_gaps[n].clone());
    if kept.is_empty() {
        out.text_gaps.pop();
        out.braille_gaps.pop();
    }
    Ok(ParallelExample::from_parts(&ex.id, ex.language, &out))
}

pub fn noise_inject_example(
    ex: &ParallelExample,
    rate: f64,
    seed: u64,
) -> Result<ParallelExample, AugmentError> {
    let plan = noise_plan(ex.alignment.len(), rate, seed)?;
    apply_noise(ex, &plan)
}

/// Per-example noise with seeds derived from `(seed, index)`.
pub fn noise_inject(
    corpus: &[ParallelExample],
    rate: f64,
    seed: u64,
) -> Result<Vec<ParallelExample>, AugmentError> {
    check_rate(rate)?;
    corpus
        .iter()
        .enumerate()
        .map(|(i, ex)| noise_inject_example(ex, rate, example_seed(seed, i)))
        .collect()
}

/// Replaces `round(rate * n)` units with uniformly drawn KB entries.
pub fn fragment_replace_example(
    ex: &ParallelExample,
    kb: &KnowledgeBase,
    rate: f64,
    seed: u64,
) -> Result<ParallelExample, AugmentError> {
    check_rate(rate)?;
    let pool = kb.replacement_pool();
    let mut parts = parts_of(ex)?;
    let n = parts.text_units.len();
    let m = selected_count(rate, n);
    if m > 0 && pool.is_empty() {
        return Err(AugmentError::EmptyKnowledgeBase);
    }
    let mut rng = rng::stream(seed, &[REPLACE_DOMAIN]);
    let mut picks = index::sample(&mut rng, n, m).into_vec();
    picks.sort_unstable();
    for u in picks {
        let (f, t) = &pool[rng.gen_range(0..pool.len())];
        parts.braille_units[u] = f.to_string();
        parts.text_units[u] = t.clone();
    }
    Ok(ParallelExample::from_parts(&ex.id, ex.language, &parts))
}

pub fn fragment_replace(
    corpus: &[ParallelExample],
    kb: &KnowledgeBase,
    rate: f64,
    seed: u64,
) -> Result<Vec<ParallelExample>, AugmentError> {
    check_rate(rate)?;
    corpus
        .iter()
        .enumerate()
        .map(|(i, ex)| fragment_replace_example(ex, kb, rate, example_seed(seed, i)))
        .collect()
}

/// Labels every alignment unit whose Braille is an attribute-KB fragment.
pub fn tag(ex: &ParallelExample, kb: &KnowledgeBase) -> Result<AnnotatedExample, AugmentError> {
    let parts = parts_of(ex)?;
    let spans = parts
        .braille_units
        .iter()
        .enumerate()
        .filter_map(|(i, b)| {
            kb.attributes_of(b).first().map(|a| LabeledSpan {
                start: i,
                end: i + 1,
                attribute: a.attribute.clone(),
                text: parts.text_units[i].clone(),
            })
        })
        .collect();
    Ok(AnnotatedExample {
        example: ex.clone(),
        spans,
    })
}

/// A corpus-level augmentation strategy.
pub trait Augmenter: Send + Sync {
    fn name(&self) -> &'static str;
    /// Augments example `index` of a corpus run.
    fn augment_one(
        &self,
        ex: &AnnotatedExample,
        seed: u64,
        index: usize,
    ) -> Result<AnnotatedExample, AugmentError>;

    fn augment_corpus(
        &self,
        corpus: &[AnnotatedExample],
        seed: u64,
    ) -> Result<Vec<AnnotatedExample>, AugmentError> {
        corpus
            .iter()
            .enumerate()
            .map(|(i, ex)| self.augment_one(ex, seed, i))
            .collect()
    }
}

pub struct SyntaxTreeAugmenter {
    pub kb: KnowledgeBase,
    pub config: AugmentConfig,
}

impl Augmenter for SyntaxTreeAugmenter {
    fn name(&self) -> &'static str {
        "syntax-tree"
    }

    fn augment_one(
        &self,
        ex: &AnnotatedExample,
        seed: u64,
        index: usize,
    ) -> Result<AnnotatedExample, AugmentError> {
        augment(ex, &self.kb, &self.config, example_seed(seed, index))
    }
}

pub struct NoiseInjection {
    pub rate: f64,
}

impl Augmenter for NoiseInjection {
    fn name(&self) -> &'static str {
        "noise-injection"
    }

    /// Unit-level edits invalidate span annotations, so spans are dropped.
    fn augment_one(
        &self,
        ex: &AnnotatedExample,
        seed: u64,
        index: usize,
    ) -> Result<AnnotatedExample, AugmentError> {
        Ok(AnnotatedExample {
            example: noise_inject_example(&ex.example, self.rate, example_seed(seed, index))?,
            spans: Vec::new(),
        })
    }
}

pub struct FragmentReplacement {
    pub kb: KnowledgeBase,
    pub rate: f64,
}

impl Augmenter for FragmentReplacement {
    fn name(&self) -> &'static str {
        "fragment-replacement"
    }

    fn augment_one(
        &self,
        ex: &AnnotatedExample,
        seed: u64,
        index: usize,
    ) -> Result<AnnotatedExample, AugmentError> {
        Ok(AnnotatedExample {
            example: fragment_replace_example(
                &ex.example,
                &self.kb,
                self.rate,
                example_seed(seed, index),
            )?,
            spans: Vec::new(),
        })
    }
}

pub struct AugmenterRegistry {
    entries: BTreeMap<&'static str, Box<dyn Augmenter>>,
}

impl AugmenterRegistry {
    pub fn empty() -> Self {
        AugmenterRegistry {
            entries: BTreeMap::new(),
        }
    }

    /// The three shipped strategies sharing one KB; `rate` drives the baselines.
    pub fn standard(kb: &KnowledgeBase, config: AugmentConfig, rate: f64) -> Self {
        let mut r = AugmenterRegistry::empty();
        r.register(Box::new(SyntaxTreeAugmenter {
            kb: kb.clone(),
            config,
        }));
        r.register(Box::new(NoiseInjection { rate }));
        r.register(Box::new(FragmentReplacement {
            kb: kb.clone(),
            rate,
        }));
        r
    }

    pub fn register(&mut self, a: Box<dyn Augmenter>) {
        self.entries.insert(a.name(), a);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Augmenter, AugmentError> {
        self.entries
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| AugmentError::UnknownAugmenter(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    const FIG3: &str = "IW N%K*AD K5AH)1G$A T1QUAL5 Q72H<AD LI'L3";

    fn fig3() -> ParallelExample {
        let words: Vec<&str> = FIG3.split(' ').collect();
        let texts = ["一位", "年轻的", "科学家", "提出了", "重要的", "理论"];
        let parts = AlignedParts {
            text_units: texts.iter().map(|s| s.to_string()).collect(),
            text_gaps: vec![String::new(); 7],
            braille_units: words.iter().map(|s| s.to_string()).collect(),
            braille_gaps: std::iter::once(String::new())
                .chain(std::iter::repeat_n(" ".to_string(), 5))
                .chain(std::iter::once(String::new()))
                .collect(),
        };
        ParallelExample::from_parts("fig3", Language::Chinese, &parts)
    }

    #[test]
    fn fig3_quantifier_swap() {
        let kb = seed::zh_kb().unwrap();
        let ann = tag(&fig3(), &kb).unwrap();
        assert_eq!(ann.spans.len(), 6);
        let cfg = AugmentConfig {
            k: 1,
            min_sim: 0.0,
            attributes: Some(vec![Attribute::Quantifier]),
        };
        let hit = (0..64)
            .map(|s| augment(&ann, &kb, &cfg, s).unwrap())
            .find(|a| a.example.braille.starts_with("B9A"))
            .expect("quantifier entry sampled within 64 seeds");
        assert_eq!(
            hit.example.braille,
            "B9A:1SVASW N%K*AD K5AH)1G$A T1QUAL5 Q72H<AD LI'L3"
        );
        assert_eq!(hit.example.text, "八十三岁年轻的科学家提出了重要的理论");
        assert!(validate_example(&hit.example).is_empty());
    }

    #[test]
    fn single_candidate_is_deterministic() {
        let mut kb = KnowledgeBase::empty(Language::Chinese);
        kb.parse_attributes("IW\tQuantifier\t一位\nB9A:1SVASW\tQuantifier\t八十三岁\n")
            .unwrap();
        let ann = tag(&fig3(), &kb).unwrap();
        for s in 0..10 {
            let out = augment(&ann, &kb, &AugmentConfig::default(), s).unwrap();
            assert!(out.example.braille.starts_with("B9A:1SVASW N%K*AD"));
        }
        assert_eq!(
            augment(
                &ann,
                &kb,
                &AugmentConfig {
                    k: 0,
                    ..Default::default()
                },
                0
            ),
            Err(AugmentError::ZeroReplacements)
        );
        assert!(matches!(
            augment(
                &ann,
                &kb,
                &AugmentConfig {
                    k: 2,
                    ..Default::default()
                },
                0
            ),
            Err(AugmentError::InsufficientCandidates {
                eligible: 1,
                needed: 2,
                ..
            })
        ));
        assert!(matches!(
            augment(
                &ann,
                &kb,
                &AugmentConfig {
                    min_sim: 0.99,
                    ..Default::default()
                },
                0
            ),
            Err(AugmentError::InsufficientCandidates { span: Some(0), .. })
        ));
    }

    #[test]
    fn multi_unit_span_collapses() {
        let kb = seed::zh_kb().unwrap();
        let mut ann = tag(&fig3(), &kb).unwrap();
        ann.spans = vec![LabeledSpan {
            start: 1,
            end: 3,
            attribute: Attribute::Noun,
            text: "年轻的科学家".into(),
        }];
        let out = augment(&ann, &kb, &AugmentConfig::default(), 3).unwrap();
        assert_eq!(out.example.alignment.len(), 5);
        assert_eq!(out.spans[0].start, 1);
        assert_eq!(out.spans[0].end, 2);
        assert!(validate_example(&out.example).is_empty());
    }

    #[test]
    fn noise_counts_are_exact() {
        let plan = noise_plan(100, 0.15, 9).unwrap();
        assert_eq!(plan.len(), 15);
        assert!(noise_plan(10, 0.0, 1).unwrap().is_empty());
        assert_eq!(noise_plan(3, 1.5, 1), Err(AugmentError::InvalidRate(1.5)));
        assert!(noise_plan(3, f64::NAN, 1).is_err());
        let all = noise_plan(4, 1.0, 5).unwrap();
        assert!(all.iter().any(|(_, op)| *op == NoiseOp::Duplicate));
    }

    #[test]
    fn noise_keeps_alignment_valid() {
        let ex = fig3();
        for s in 0..50 {
            let out = noise_inject_example(&ex, 0.5, s).unwrap();
            assert!(validate_example(&out).is_empty(), "{out:?}");
        }
        let same = noise_inject(std::slice::from_ref(&ex), 0.0, 3).unwrap();
        assert_eq!(same[0], ex);
    }

    #[test]
    fn fragment_replace_uses_kb() {
        let mut kb = KnowledgeBase::empty(Language::Chinese);
        kb.parse_attributes("SVAF0/AR2\tQuantifier\t三分之二\n")
            .unwrap();
        let out = fragment_replace_example(&fig3(), &kb, 1.0, 4).unwrap();
        assert!(out.braille.split(' ').all(|w| w == "SVAF0/AR2"));
        assert!(validate_example(&out).is_empty());
        assert_eq!(
            fragment_replace_example(&fig3(), &kb, 0.0, 4).unwrap(),
            fig3()
        );
    }

    #[test]
    fn registry_lookup() {
        let kb = seed::zh_kb().unwrap();
        let reg = AugmenterRegistry::standard(&kb, AugmentConfig::default(), 0.15);
        assert_eq!(
            reg.names(),
            vec!["fragment-replacement", "noise-injection", "syntax-tree"]
        );
        assert!(reg.get("back-translation").is_err());
        let ann = tag(&fig3(), &kb).unwrap();
        let a = reg
            .get("syntax-tree")
            .unwrap()
            .augment_corpus(std::slice::from_ref(&ann), 1)
            .unwrap();
        let b = reg
            .get("syntax-tree")
            .unwrap()
            .augment_corpus(&[ann], 1)
            .unwrap();
        assert_eq!(a, b);
    }
}
