use std::collections::HashSet;

use braillekit::augment::{augment, fragment_replace_example, noise_inject, tag, AugmentConfig};
use braillekit::bkft::{extend_vocab, init_all, EmbeddingTable, SyllableTokenMap, VocabIndex};
use braillekit::braille::{
    ascii_to_unicode, dot_distance, perturb_dots, unicode_to_ascii, validate, BrailleFragment,
    BrailleSequence, BRAILLE_ASCII,
};
use braillekit::dataset::{
    dedup, normalize, render_instruction, validate_example, AlignedParts, Direction,
    ParallelExample, TaskType,
};
use braillekit::edit::levenshtein;
use braillekit::kb::{similarity, CharPinyin, KnowledgeBase, Language};
use braillekit::metrics::{Bleu, Cer, ChrF, Metric, Ter, Tokenize};
use braillekit::seed;
use braillekit::tokenizer::{segment, word_segment};
use braillekit::toy::{schedule_batches, schedule_labels, train_full_batch, Source, ToyModel};
use proptest::prelude::*;

fn braille_char() -> impl Strategy<Value = char> {
    proptest::sample::select(BRAILLE_ASCII.chars().collect::<Vec<_>>())
}

fn braille_word(max: usize) -> impl Strategy<Value = String> {
    proptest::collection::vec(
        braille_char().prop_filter("no space", |c| *c != ' '),
        1..=max,
    )
    .prop_map(|v| v.into_iter().collect())
}

fn braille_sequence() -> impl Strategy<Value = BrailleSequence> {
    proptest::collection::vec(braille_word(6), 0..6)
        .prop_map(|ws| BrailleSequence::parse(&ws.join(" ")).unwrap())
}

fn small_kb_word() -> impl Strategy<Value = String> {
    proptest::collection::vec(proptest::sample::select(vec!['A', 'B', 'C']), 1..=8)
        .prop_map(|v| v.into_iter().collect())
}

fn abc_kb() -> KnowledgeBase {
    KnowledgeBase::parse(
        "A\ta1\nAB\tab1\nBC\tbc1\nABC\tabc1\nCA\tca1\n",
        Language::Chinese,
    )
    .unwrap()
}

/// Maximum KB coverage over every way of cutting `word` into pieces.
fn brute_coverage(word: &[char], kb: &KnowledgeBase) -> usize {
    let n = word.len();
    (0u32..1 << (n - 1))
        .map(|cuts| {
            let mut covered = 0;
            let mut start = 0;
            for i in 1..=n {
                if i == n || cuts & (1 << (i - 1)) != 0 {
                    let piece: String = word[start..i].iter().collect();
                    if kb.contains_fragment(&piece) {
                        covered += i - start;
                    }
                    start = i;
                }
            }
            covered
        })
        .max()
        .unwrap()
}

fn example_from_units(units: &[(String, String)]) -> ParallelExample {
    let n = units.len();
    let parts = AlignedParts {
        text_units: units.iter().map(|u| u.0.clone()).collect(),
        text_gaps: vec![String::new(); n + 1],
        braille_units: units.iter().map(|u| u.1.clone()).collect(),
        braille_gaps: std::iter::once(String::new())
            .chain(std::iter::repeat_n(" ".to_string(), n.saturating_sub(1)))
            .chain(std::iter::once(String::new()))
            .collect(),
    };
    ParallelExample::from_parts("p", Language::Chinese, &parts)
}

fn units() -> impl Strategy<Value = Vec<(String, String)>> {
    proptest::collection::vec(("[一-龥]{1,3}", braille_word(4)), 1..12)
}

proptest! {
    #[test]
    fn codec_round_trip(s in proptest::collection::vec(braille_char(), 0..64)) {
        let s: String = s.into_iter().collect();
        let u = ascii_to_unicode(&s).unwrap();
        prop_assert_eq!(unicode_to_ascii(&u).unwrap(), s);
    }

    #[test]
    fn perturbation_is_reproducible_and_valid(seq in braille_sequence(), rate in 0.0f64..=1.0, seed in any::<u64>()) {
        let a = perturb_dots(&seq, rate, seed).unwrap();
        let b = perturb_dots(&seq, rate, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(validate(&a.to_string()).is_ok());
        prop_assert_eq!(BrailleSequence::parse(&a.to_string()).unwrap(), a.clone());
        prop_assert!(dot_distance(&seq, &a).unwrap() <= 6 * seq.cell_count() as u64);
        prop_assert_eq!(perturb_dots(&seq, 0.0, seed).unwrap(), seq);
    }

    #[test]
    fn similarity_is_symmetric_and_bounded(a in braille_word(5), b in braille_word(5)) {
        let (fa, fb) = (BrailleFragment::new(a.clone()).unwrap(), BrailleFragment::new(b.clone()).unwrap());
        let s = similarity(&fa, &fb);
        prop_assert_eq!(s, similarity(&fb, &fa));
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s == 1.0, a == b);
    }

    #[test]
    fn segmentation_is_lossless_and_optimal(words in proptest::collection::vec(small_kb_word(), 1..4)) {
        let kb = abc_kb();
        let input = words.join(" ");
        let seq = BrailleSequence::parse(&input).unwrap();
        let t = segment(&seq, &kb);
        prop_assert_eq!(t.reconstruct(), input.clone());
        let mut start = 0;
        for (w, &end) in words.iter().zip(t.word_boundaries.iter().chain([&t.tokens.len()])) {
            let covered: usize = t.tokens[start..end].iter().filter(|x| !x.is_oov()).map(|x| x.fragment.len()).sum();
            let chars: Vec<char> = w.chars().collect();
            prop_assert_eq!(covered, brute_coverage(&chars, &kb));
            start = end;
        }
        let joined: String = words.concat();
        let out = word_segment(&joined, &kb).unwrap().to_string();
        prop_assert_eq!(out.replace(' ', ""), joined);
    }

    #[test]
    fn init_all_keeps_base_rows_and_is_idempotent(vals in proptest::collection::vec(-10.0f64..10.0, 12)) {
        let kc = KnowledgeBase::parse("G*A\tjing1\nGI\tji4\n", Language::Chinese).unwrap();
        let ke = KnowledgeBase::parse("L1/\tleast\n", Language::English).unwrap();
        let mut readings = CharPinyin::default();
        readings.insert('经', "jing1");
        readings.insert('京', "jing1");
        readings.insert('济', "ji4");
        let mut vocab = VocabIndex::from_names(["经", "京", "济", "least"]).unwrap();
        let mut table = EmbeddingTable::from_flat(3, vals).unwrap();
        let base: Vec<u64> = table.as_flat().iter().map(|x| x.to_bits()).collect();
        extend_vocab(&mut vocab, &mut table, &["G*A", "GI", "L1/"]).unwrap();
        let stm = SyllableTokenMap::build(&vocab, &readings);
        init_all(&mut table, &vocab, &kc, &ke, &stm);
        let after: Vec<u64> = table.as_flat()[..12].iter().map(|x| x.to_bits()).collect();
        prop_assert_eq!(after, base);
        prop_assert_eq!(table.row(6), table.row(3));
        let once = table.clone();
        init_all(&mut table, &vocab, &kc, &ke, &stm);
        prop_assert_eq!(once.as_flat(), table.as_flat());
    }

    #[test]
    fn normalize_is_idempotent(s in "[a-z 经济\t\n\u{7}]{0,12}(\\$[a-z0-9+=]{1,5}\\$)?[a-z ]{0,6}") {
        let once = normalize(&s).unwrap();
        prop_assert_eq!(normalize(&once).unwrap(), once);
    }

    #[test]
    fn schedule_alternates(n_c in 0usize..20, n_e in 0usize..20, seed in any::<u64>()) {
        let labels = schedule_labels(n_c, n_e);
        let both = 2 * n_c.min(n_e);
        for (i, l) in labels[..both].iter().enumerate() {
            prop_assert_eq!(*l, if i % 2 == 0 { Source::C } else { Source::E });
        }
        let s = schedule_batches(n_c, n_e, seed);
        let mut c: Vec<usize> = s.iter().filter(|x| x.0 == Source::C).map(|x| x.1).collect();
        let mut e: Vec<usize> = s.iter().filter(|x| x.0 == Source::E).map(|x| x.1).collect();
        c.sort_unstable();
        e.sort_unstable();
        prop_assert_eq!(c, (0..n_c).collect::<Vec<_>>());
        prop_assert_eq!(e, (0..n_e).collect::<Vec<_>>());
        prop_assert_eq!(s.iter().map(|x| x.0).collect::<Vec<_>>(), labels);
    }

    #[test]
    fn edit_distance_is_a_metric(a in "[abc]{0,8}", b in "[abc]{0,8}", c in "[abc]{0,8}") {
        let v = |s: &str| s.chars().collect::<Vec<_>>();
        let (a, b, c) = (v(&a), v(&b), v(&c));
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
        prop_assert_eq!(levenshtein(&a, &a), 0);
        if !b.is_empty() {
            let s: String = b.iter().collect();
            let h: String = a.iter().collect();
            let cer = Cer.sentence_score(&h, &s).unwrap();
            prop_assert!((cer * b.len() as f64 - levenshtein(&a, &b) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn corpus_scores_ignore_pair_order(pairs in proptest::collection::vec(("[ab ]{1,8}", "[ab]{1,8}"), 1..8), rot in 0usize..8) {
        let metrics: Vec<Box<dyn Metric>> = vec![
            Box::new(Bleu { max_n: 4, tokenize: Tokenize::Char }),
            Box::new(ChrF { char_n: 6, word_n: 2, beta: 2.0 }),
            Box::new(Ter { tokenize: Tokenize::Char, shifts: true }),
            Box::new(Cer),
        ];
        let h: Vec<&str> = pairs.iter().map(|p| p.0.as_str()).collect();
        let r: Vec<&str> = pairs.iter().map(|p| p.1.as_str()).collect();
        let k = rot % pairs.len();
        let (mut h2, mut r2) = (h.clone(), r.clone());
        h2.rotate_left(k);
        r2.rotate_left(k);
        for m in &metrics {
            let a = m.corpus_score(&h, &r).unwrap();
            let b = m.corpus_score(&h2, &r2).unwrap();
            prop_assert!((a - b).abs() < 1e-9, "{}", m.name());
            let ideal = if matches!(m.name(), "bleu" | "chrf") { 100.0 } else { 0.0 };
            prop_assert!((m.corpus_score(&r, &r).unwrap() - ideal).abs() < 1e-9);
        }
    }

    #[test]
    fn rendered_instruction_contains_input_once(text in "[一-龥a-z]{1,10}", braille in braille_word(8)) {
        let ex = ParallelExample { id: "x".into(), language: Language::Chinese, text, braille, alignment: vec![] };
        let templates = [
            "Please translate the following Braille into plain text: {input}",
            "{task} ({language}): {input}",
            "Input:\n{input}\nAnswer:",
        ];
        for t in templates {
            for dir in [Direction::BrailleToText, Direction::TextToBraille] {
                if let Ok(r) = render_instruction("t", t, &ex, dir, TaskType::BrailleToText) {
                    prop_assert_eq!(r.instruction.matches(r.input.as_str()).count(), 1);
                }
            }
        }
    }

    #[test]
    fn dedup_keeps_first_of_each_text(texts in proptest::collection::vec("[ab]{1,3}", 0..20)) {
        let corpus: Vec<ParallelExample> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| ParallelExample { id: i.to_string(), language: Language::English, text: t.clone(), braille: "A".into(), alignment: vec![] })
            .collect();
        let kept: Vec<String> = dedup(corpus).into_iter().map(|e| e.id).collect();
        let mut seen = HashSet::new();
        let want: Vec<String> = texts.iter().enumerate().filter(|(_, t)| seen.insert(t.to_string())).map(|(i, _)| i.to_string()).collect();
        prop_assert_eq!(kept, want);
    }

    #[test]
    fn noise_keeps_alignment_valid(corpus in proptest::collection::vec(units(), 1..6), rate in 0.0f64..=1.0, seed in any::<u64>()) {
        let corpus: Vec<ParallelExample> = corpus.iter().map(|u| example_from_units(u)).collect();
        for ex in noise_inject(&corpus, rate, seed).unwrap() {
            prop_assert!(validate_example(&ex).is_empty(), "{:?}", ex);
            prop_assert!(!ex.alignment.is_empty());
        }
    }

    #[test]
    fn replacements_come_from_the_pool(u in units(), rate in 0.0f64..=1.0, seed in any::<u64>()) {
        let kb = seed::zh_kb().unwrap();
        let pool: HashSet<(String, String)> = kb.replacement_pool().into_iter().map(|(f, t)| (f.to_string(), t)).collect();
        let ex = example_from_units(&u);
        let out = fragment_replace_example(&ex, &kb, rate, seed).unwrap();
        prop_assert!(validate_example(&out).is_empty());
        let (a, b) = (ex.parts().unwrap(), out.parts().unwrap());
        prop_assert_eq!(a.text_units.len(), b.text_units.len());
        let mut changed = 0;
        for i in 0..a.text_units.len() {
            let before = (a.braille_units[i].clone(), a.text_units[i].clone());
            let after = (b.braille_units[i].clone(), b.text_units[i].clone());
            if before != after {
                changed += 1;
            }
            prop_assert!(before == after || pool.contains(&after));
        }
        prop_assert!(changed <= (rate * u.len() as f64).round() as usize);
    }
}

#[test]
fn distinct_augmentations_grow_with_seeds() {
    let kb = seed::zh_kb().unwrap();
    let words = ["IW", "N%K*AD", "K5AH)1G$A", "T1QUAL5", "Q72H<AD", "LI'L3"];
    let texts = ["一位", "年轻的", "科学家", "提出了", "重要的", "理论"];
    let u: Vec<(String, String)> = texts
        .iter()
        .zip(words)
        .map(|(t, w)| (t.to_string(), w.to_string()))
        .collect();
    let ann = tag(&example_from_units(&u), &kb).unwrap();
    let cfg = AugmentConfig::default();
    let mut seen = HashSet::new();
    let mut last = 0;
    for s in 0..64 {
        seen.insert(augment(&ann, &kb, &cfg, s).unwrap().example.braille);
        assert!(seen.len() >= last);
        last = seen.len();
    }
    assert!(last >= 2);
}

#[test]
fn full_batch_loss_is_monotone() {
    let table =
        EmbeddingTable::from_flat(2, vec![1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]).unwrap();
    let mut m = ToyModel::new(table, 4);
    let losses = train_full_batch(
        &mut m,
        &[0, 1, 2, 3, 0, 2],
        &[0, 1, 2, 3, 0, 2],
        0.1,
        200,
        true,
    )
    .unwrap();
    assert!(losses.last().unwrap() < &losses[0]);
}
