use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use braillekit::dataset::{RuleSet, Transcriber};
use braillekit::kb::{CharPinyin, KnowledgeBase, Language};
use braillekit::seed;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::UsageError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub resources: Resources,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub augment: AugmentSection,
    #[serde(default)]
    pub train: TrainSection,
}

/// Table overrides; anything left unset falls back to the shipped seed tables.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resources {
    pub zh_prior: Option<PathBuf>,
    pub zh_words: Option<PathBuf>,
    pub attributes: Option<PathBuf>,
    pub en_prior: Option<PathBuf>,
    pub char_pinyin: Option<PathBuf>,
    pub math_rules: Option<PathBuf>,
    pub text_rules: Option<PathBuf>,
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub metrics: Option<Vec<String>>,
    pub tokenize: Option<String>,
    pub max_n: Option<usize>,
    pub char_n: Option<usize>,
    pub word_n: Option<usize>,
    pub beta: Option<f64>,
    pub ter_shifts: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentSection {
    pub k: Option<usize>,
    pub min_sim: Option<f64>,
    pub rate: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub momentum: Option<f64>,
    pub max_seq_len: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub target: Option<f64>,
}

impl Config {
    /// Reads a TOML file; relative resource paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("config {}: {e}", path.display())))?;
        let mut cfg: Config = toml::from_str(&text)
            .map_err(|e| UsageError(format!("config {}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for p in cfg.resources.paths_mut() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
            if !p.exists() {
                return Err(UsageError(format!(
                    "config {}: {} does not exist",
                    path.display(),
                    p.display()
                ))
                .into());
            }
        }
        Ok(cfg)
    }
}

impl Resources {
    fn paths_mut(&mut self) -> impl Iterator<Item = &mut PathBuf> {
        [
            &mut self.zh_prior,
            &mut self.zh_words,
            &mut self.attributes,
            &mut self.en_prior,
            &mut self.char_pinyin,
            &mut self.math_rules,
            &mut self.text_rules,
            &mut self.templates,
        ]
        .into_iter()
        .flatten()
    }

    fn read(path: &Option<PathBuf>, shipped: &'static str) -> Result<String> {
        match path {
            Some(p) => {
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
            }
            None => Ok(shipped.to_string()),
        }
    }

    pub fn zh_kb(&self) -> Result<KnowledgeBase> {
        let mut kb = KnowledgeBase::parse(
            &Self::read(&self.zh_prior, seed::ZH_PRIOR_TSV)?,
            Language::Chinese,
        )?;
        kb.parse_words(&Self::read(&self.zh_words, seed::ZH_WORDS_TSV)?)?;
        kb.parse_attributes(&Self::read(&self.attributes, seed::ATTRIBUTES_TSV)?)?;
        Ok(kb)
    }

    pub fn en_kb(&self) -> Result<KnowledgeBase> {
        Ok(KnowledgeBase::parse(
            &Self::read(&self.en_prior, seed::EN_PRIOR_TSV)?,
            Language::English,
        )?)
    }

    pub fn kb(&self, language: Language) -> Result<KnowledgeBase> {
        match language {
            Language::Chinese => self.zh_kb(),
            Language::English => self.en_kb(),
        }
    }

    pub fn readings(&self) -> Result<CharPinyin> {
        Ok(CharPinyin::parse(&Self::read(
            &self.char_pinyin,
            seed::CHAR_PINYIN_TSV,
        )?)?)
    }

    pub fn transcriber(&self) -> Result<Transcriber> {
        let mut rules = RuleSet::parse(&Self::read(&self.math_rules, seed::MATH_RULES_TSV)?)?;
        rules.extend(RuleSet::parse(&Self::read(
            &self.text_rules,
            seed::TEXT_RULES_TSV,
        )?)?);
        Ok(Transcriber {
            rules,
            zh: self.zh_kb()?,
            en: self.en_kb()?,
            readings: self.readings()?,
        })
    }

    /// `(name, sha256)` of every table in effect.
    pub fn checksums(&self) -> Result<Vec<(String, String)>> {
        let tables: [(&str, &Option<PathBuf>, &str); 8] = [
            ("tables/braille_ascii.tsv", &None, seed::BRAILLE_ASCII_TSV),
            ("kb/zh_prior.tsv", &self.zh_prior, seed::ZH_PRIOR_TSV),
            ("kb/zh_words.tsv", &self.zh_words, seed::ZH_WORDS_TSV),
            ("kb/attributes.tsv", &self.attributes, seed::ATTRIBUTES_TSV),
            ("kb/en_prior.tsv", &self.en_prior, seed::EN_PRIOR_TSV),
            (
                "kb/char_pinyin.tsv",
                &self.char_pinyin,
                seed::CHAR_PINYIN_TSV,
            ),
            (
                "rules/math_braille.tsv",
                &self.math_rules,
                seed::MATH_RULES_TSV,
            ),
            (
                "rules/text_braille.tsv",
                &self.text_rules,
                seed::TEXT_RULES_TSV,
            ),
        ];
        tables
            .iter()
            .map(|(name, path, shipped)| {
                let text = Self::read(path, shipped)?;
                let label = path
                    .as_ref()
                    .map_or(name.to_string(), |p| p.display().to_string());
                Ok((label, hex::encode(Sha256::digest(text.as_bytes()))))
            })
            .collect()
    }
}
