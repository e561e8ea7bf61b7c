use braillekit::augment::{augment, tag, AugmentConfig};
use braillekit::bkft::{extend_vocab, init_all, EmbeddingTable, SyllableTokenMap, VocabIndex};
use braillekit::braille::BrailleSequence;
use braillekit::dataset::{
    read_jsonl, transcribe_mixed, validate_example, AlignedParts, ParallelExample, Transcriber,
};
use braillekit::kb::{Attribute, Language};
use braillekit::seed;
use braillekit::tokenizer::{map_counterparts, segment, word_segment};

#[test]
fn table2_chinese_tokens() {
    let kb = seed::zh_kb().unwrap();
    let seq = BrailleSequence::parse("G*AGI D KYSU F9/V'").unwrap();
    let t = segment(&seq, &kb);
    assert_eq!(t.names(), "<|G*A|><|GI|><|D|><|KY|><|SU|><|F9|><|/V'|>");
    assert_eq!(
        map_counterparts(&t, &kb),
        ["jing1", "ji4", "de", "kuai4", "su4", "fa1", "zhan3"]
    );
    assert_eq!(t.reconstruct(), "G*AGI D KYSU F9/V'");
}

#[test]
fn table2_word_segmentation() {
    let kb = seed::zh_kb().unwrap();
    assert_eq!(
        word_segment("G*AGIDKYSU F9/V'", &kb).unwrap().to_string(),
        "G*AGI D KYSU F9/V'"
    );
}

#[test]
fn table2_transcriptions() {
    let t = Transcriber::seeded();
    let cases = [
        ("$\\frac{1}{4}x=15$", "#A4;X 7#AE"),
        ("故答案为：$y$", "GU D91V W- #Y"),
        ("经济的快速发展", "G*AGI D KYSU F9/V'"),
    ];
    for (text, want) in cases {
        let out = transcribe_mixed(text, Language::Chinese, None, &t).unwrap();
        assert_eq!(out.to_string(), want, "{text}");
    }
}

#[test]
fn table2_fixture_validates() {
    let rows: Vec<ParallelExample> = read_jsonl(seed::TABLE2_JSONL.as_bytes()).unwrap();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert!(validate_example(r).is_empty(), "{}", r.id);
    }
}

#[test]
fn english_clone_least() {
    let ke = seed::en_kb().unwrap();
    let kc = seed::zh_kb().unwrap();
    let mut vocab = VocabIndex::from_names(["the", "least", "most"]).unwrap();
    let mut table =
        EmbeddingTable::from_flat(3, vec![0.1, 0.2, 0.3, -1.5, 2.25, 0.125, 9.0, 8.0, 7.0])
            .unwrap();
    extend_vocab(&mut vocab, &mut table, &["L1/"]).unwrap();
    let stm = SyllableTokenMap::default();
    let report = init_all(&mut table, &vocab, &kc, &ke, &stm);
    assert_eq!(report.english_inited, 1);
    assert_eq!(
        table.row(vocab.get("<|L1/|>").unwrap()),
        &[-1.5, 2.25, 0.125]
    );
}

#[test]
fn figure3_quantifier_replacement() {
    let words = ["IW", "N%K*AD", "K5AH)1G$A", "T1QUAL5", "Q72H<AD", "LI'L3"];
    let texts = ["一位", "年轻的", "科学家", "提出了", "重要的", "理论"];
    let parts = AlignedParts {
        text_units: texts.iter().map(|s| s.to_string()).collect(),
        text_gaps: vec![String::new(); 7],
        braille_units: words.iter().map(|s| s.to_string()).collect(),
        braille_gaps: [""]
            .into_iter()
            .chain([" "; 5])
            .chain([""])
            .map(String::from)
            .collect(),
    };
    let ex = ParallelExample::from_parts("fig3", Language::Chinese, &parts);
    let kb = seed::zh_kb().unwrap();
    let ann = tag(&ex, &kb).unwrap();
    let cfg = AugmentConfig {
        k: 1,
        min_sim: 0.0,
        attributes: Some(vec![Attribute::Quantifier]),
    };
    let hit = (0..64)
        .map(|s| augment(&ann, &kb, &cfg, s).unwrap())
        .find(|a| a.example.text.starts_with("八十三岁"))
        .unwrap();
    assert_eq!(
        hit.example.braille,
        "B9A:1SVASW N%K*AD K5AH)1G$A T1QUAL5 Q72H<AD LI'L3"
    );
    assert_eq!(hit.example.text, "八十三岁年轻的科学家提出了重要的理论");
}
