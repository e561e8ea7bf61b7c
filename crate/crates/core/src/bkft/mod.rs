//! Braille vocabulary extension and knowledge-based embedding initialization.
//!
//! New Braille tokens start as zero rows. Chinese fragments take the mean of the
//! embeddings of every single-character token sharing their pinyin syllable;
//! English fragments take a copy of their word's embedding.

mod init;
mod table;

use std::collections::BTreeMap;

use rand_distr::{Distribution, Normal};
use thiserror::Error;

pub use init::{
    braille_fragment_of, chinese_vector, english_vector, extend_vocab, init_all, init_chinese,
    init_english, Ambiguity, InitReport, Skipped, SyllableTokenMap,
};
pub use table::{load_embeddings, save_embeddings, EmbeddingTable, VocabIndex};

use crate::kb::KnowledgeBase;
use crate::rng;

#[derive(Debug, Error)]
pub enum BkftError {
    #[error("token {0} is already in the vocabulary")]
    DuplicateToken(String),
    #[error("token {0} is not in the vocabulary")]
    TokenNotInVocab(String),
    #[error("fragment {0} has no knowledge-base entry")]
    UnknownFragment(String),
    #[error("no vocabulary character reads as {0}")]
    EmptySyllableSet(String),
    #[error("fragment {fragment} maps to several syllables: {candidates:?}")]
    AmbiguousSyllable {
        fragment: String,
        candidates: Vec<String>,
    },
    #[error("word {0} has no embedding and no sub-word decomposition")]
    WordNotInVocab(String),
    #[error("unknown initializer {0}")]
    UnknownStrategy(String),
    #[error("malformed embedding data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl BkftError {
    /// Variant name, used in reports.
    pub fn reason_code(&self) -> &'static str {
        match self {
            BkftError::DuplicateToken(_) => "DuplicateToken",
            BkftError::TokenNotInVocab(_) => "TokenNotInVocab",
            BkftError::UnknownFragment(_) => "UnknownFragment",
            BkftError::EmptySyllableSet(_) => "EmptySyllableSet",
            BkftError::AmbiguousSyllable { .. } => "AmbiguousSyllable",
            BkftError::WordNotInVocab(_) => "WordNotInVocab",
            BkftError::UnknownStrategy(_) => "UnknownStrategy",
            BkftError::Format(_) => "Format",
            BkftError::Io(_) => "Io",
            BkftError::Json(_) => "Json",
        }
    }
}

pub struct InitContext<'a> {
    pub table: &'a mut EmbeddingTable,
    pub vocab: &'a VocabIndex,
    pub kc: &'a KnowledgeBase,
    pub ke: &'a KnowledgeBase,
    pub syllables: &'a SyllableTokenMap,
    pub seed: u64,
}

/// A way of filling the rows of newly added Braille tokens.
pub trait EmbeddingInitializer: Send + Sync {
    fn name(&self) -> &'static str;
    fn initialize(&self, ctx: InitContext<'_>) -> InitReport;
}

pub struct BkftInitializer;

impl EmbeddingInitializer for BkftInitializer {
    fn name(&self) -> &'static str {
        "bkft"
    }

    fn initialize(&self, ctx: InitContext<'_>) -> InitReport {
        init_all(ctx.table, ctx.vocab, ctx.kc, ctx.ke, ctx.syllables)
    }
}

/// Gaussian rows whose spread matches the pre-existing (non-Braille) rows.
pub struct RandomInitializer;

fn base_std(table: &EmbeddingTable, vocab: &VocabIndex) -> f64 {
    let values: Vec<f64> = (0..table.rows())
        .filter(|&r| vocab.name(r).and_then(braille_fragment_of).is_none())
        .flat_map(|r| table.row(r).iter().copied())
        .collect();
    if values.len() < 2 {
        return 1.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if var > 0.0 {
        var.sqrt()
    } else {
        1.0
    }
}

fn fill_braille_rows(ctx: InitContext<'_>, mut value: impl FnMut(usize, &mut [f64])) -> InitReport {
    let mut report = InitReport::default();
    for row in 0..ctx.vocab.len() {
        let Some(fragment) = ctx.vocab.name(row).and_then(braille_fragment_of) else {
            continue;
        };
        value(row, ctx.table.row_mut(row));
        if ctx.kc.contains_fragment(fragment) {
            report.chinese_inited += 1;
        } else if ctx.ke.contains_fragment(fragment) {
            report.english_inited += 1;
        }
    }
    report
}

impl EmbeddingInitializer for RandomInitializer {
    fn name(&self) -> &'static str {
        "random"
    }

    fn initialize(&self, ctx: InitContext<'_>) -> InitReport {
        let sigma = base_std(ctx.table, ctx.vocab);
        let normal = Normal::new(0.0, sigma).expect("finite positive sigma");
        let seed = ctx.seed;
        fill_braille_rows(ctx, |row, out| {
            let mut r = rng::stream(seed, &[0x524e_4449, row as u64]);
            out.iter_mut().for_each(|x| *x = normal.sample(&mut r));
        })
    }
}

/// Leaves Braille rows at zero.
pub struct ZeroInitializer;

impl EmbeddingInitializer for ZeroInitializer {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn initialize(&self, ctx: InitContext<'_>) -> InitReport {
        fill_braille_rows(ctx, |_, out| out.fill(0.0))
    }
}

/// Initializers by name.
pub struct InitializerRegistry {
    entries: BTreeMap<&'static str, Box<dyn EmbeddingInitializer>>,
}

impl InitializerRegistry {
    pub fn empty() -> Self {
        InitializerRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, init: Box<dyn EmbeddingInitializer>) {
        self.entries.insert(init.name(), init);
    }

    pub fn get(&self, name: &str) -> Result<&dyn EmbeddingInitializer, BkftError> {
        self.entries
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| BkftError::UnknownStrategy(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

impl Default for InitializerRegistry {
    fn default() -> Self {
        let mut r = InitializerRegistry::empty();
        r.register(Box::new(BkftInitializer));
        r.register(Box::new(RandomInitializer));
        r.register(Box::new(ZeroInitializer));
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{CharPinyin, Language};

    #[test]
    fn registry_dispatch() {
        let reg = InitializerRegistry::default();
        assert_eq!(reg.names(), vec!["bkft", "random", "zero"]);
        assert!(matches!(
            reg.get("glove"),
            Err(BkftError::UnknownStrategy(_))
        ));

        let mut vocab = VocabIndex::from_names(["经", "京"]).unwrap();
        let mut table = EmbeddingTable::from_flat(2, vec![1.0, 3.0, 3.0, 1.0]).unwrap();
        extend_vocab(&mut vocab, &mut table, &["G*A"]).unwrap();
        let kc = KnowledgeBase::parse("G*A\tjing1\n", Language::Chinese).unwrap();
        let ke = KnowledgeBase::empty(Language::English);
        let stm = SyllableTokenMap::build(
            &vocab,
            &CharPinyin::parse("经\tjing1\n京\tjing1\n").unwrap(),
        );

        let run = |name: &str, table: &mut EmbeddingTable, seed| {
            reg.get(name).unwrap().initialize(InitContext {
                table,
                vocab: &vocab,
                kc: &kc,
                ke: &ke,
                syllables: &stm,
                seed,
            })
        };
        let mut t1 = table.clone();
        assert_eq!(run("bkft", &mut t1, 0).chinese_inited, 1);
        assert_eq!(t1.row(2), &[2.0, 2.0]);

        let (mut a, mut b, mut c) = (table.clone(), table.clone(), table.clone());
        run("random", &mut a, 7);
        run("random", &mut b, 7);
        run("random", &mut c, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.row(0), table.row(0));
        assert_ne!(a.row(2), &[0.0, 0.0]);
    }
}
