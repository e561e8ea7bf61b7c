//! Seed tables shipped with the repository, embedded so that tests and the
//! CLI work without a data directory.

use crate::kb::{CharPinyin, KbError, KnowledgeBase, Language};

pub const BRAILLE_ASCII_TSV: &str = include_str!("../../../tables/braille_ascii.tsv");
pub const ZH_PRIOR_TSV: &str = include_str!("../../../kb/zh_prior.tsv");
pub const ZH_WORDS_TSV: &str = include_str!("../../../kb/zh_words.tsv");
pub const EN_PRIOR_TSV: &str = include_str!("../../../kb/en_prior.tsv");
pub const ATTRIBUTES_TSV: &str = include_str!("../../../kb/attributes.tsv");
pub const CHAR_PINYIN_TSV: &str = include_str!("../../../kb/char_pinyin.tsv");
pub const MATH_RULES_TSV: &str = include_str!("../../../rules/math_braille.tsv");
pub const TEXT_RULES_TSV: &str = include_str!("../../../rules/text_braille.tsv");
pub const TABLE2_JSONL: &str = include_str!("../../../corpus/table2.jsonl");

/// Chinese prior KB with the word inventory and attribute table attached.
pub fn zh_kb() -> Result<KnowledgeBase, KbError> {
    let mut kb = KnowledgeBase::parse(ZH_PRIOR_TSV, Language::Chinese)?;
    kb.parse_words(ZH_WORDS_TSV)?;
    kb.parse_attributes(ATTRIBUTES_TSV)?;
    Ok(kb)
}

pub fn en_kb() -> Result<KnowledgeBase, KbError> {
    KnowledgeBase::parse(EN_PRIOR_TSV, Language::English)
}

pub fn char_pinyin() -> Result<CharPinyin, KbError> {
    CharPinyin::parse(CHAR_PINYIN_TSV)
}
