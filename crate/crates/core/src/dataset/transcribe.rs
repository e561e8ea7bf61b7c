use std::path::Path;

use super::latex::{self, Node};
use super::{math_spans, DatasetError};
use crate::braille::{BrailleFragment, BrailleSequence};
use crate::kb::{CharPinyin, KnowledgeBase, Language};
use crate::seed;
use crate::tokenizer::word_segment;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Frac,
    Digits,
    Letter,
    Literal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Context {
    Any,
    /// First symbol of a formula.
    Start,
    /// Directly after a number or fraction.
    AfterNumber,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub domain: String,
    pub pattern: Pattern,
    pub context: Context,
    pub emission: String,
}

/// Ordered rewrite rules; the first rule matching domain, pattern and context wins.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

#[derive(Clone, Copy, Default)]
struct State {
    start: bool,
    after_number: bool,
}

impl RuleSet {
    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let mut rules = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: &str| DatasetError::Rule {
                line: i + 1,
                reason: reason.to_string(),
            };
            let f: Vec<&str> = line.split('\t').collect();
            let [domain, pattern, context, emission] = f[..] else {
                return Err(err("expected 4 tab-separated fields"));
            };
            let pattern = match pattern {
                "<frac>" => Pattern::Frac,
                "<digits>" => Pattern::Digits,
                "<letter>" => Pattern::Letter,
                "" => return Err(err("empty pattern")),
                lit => Pattern::Literal(lit.to_string()),
            };
            let context = match context {
                "*" => Context::Any,
                "start" => Context::Start,
                "after-number" => Context::AfterNumber,
                other => return Err(err(&format!("unknown context {other:?}"))),
            };
            rules.push(Rule {
                domain: domain.to_string(),
                pattern,
                context,
                emission: emission.replace("\\s", " "),
            });
        }
        Ok(RuleSet { rules })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The shipped math and punctuation rules.
    pub fn seeded() -> Self {
        let mut r = Self::parse(seed::MATH_RULES_TSV).expect("shipped math rules parse");
        r.extend(Self::parse(seed::TEXT_RULES_TSV).expect("shipped text rules parse"));
        r
    }

    pub fn extend(&mut self, other: RuleSet) {
        self.rules.extend(other.rules);
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    fn find(&self, domain: &str, pattern: &Pattern, state: State) -> Option<&Rule> {
        self.rules.iter().find(|r| {
            r.domain == domain
                && &r.pattern == pattern
                && match r.context {
                    Context::Any => true,
                    Context::Start => state.start,
                    Context::AfterNumber => state.after_number,
                }
        })
    }

    fn punctuation(&self, domains: &[&str], c: char) -> Option<&str> {
        let p = Pattern::Literal(c.to_string());
        domains
            .iter()
            .find_map(|d| self.find(d, &p, State::default()))
            .map(|r| r.emission.as_str())
    }
}

fn upper_digit(d: char) -> char {
    match d {
        '0' => 'J',
        d => (b'A' + (d as u8 - b'1')) as char,
    }
}

fn fill(emission: &str, slots: &[(&str, String)]) -> String {
    let mut out = emission.to_string();
    for (k, v) in slots {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

fn digit_slots(name: &str, digits: &str) -> [(String, String); 2] {
    [
        (
            format!("{name}:upper"),
            digits.chars().map(upper_digit).collect(),
        ),
        (format!("{name}:lower"), digits.to_string()),
    ]
}

fn untranscribable(position: usize, symbol: impl Into<String>) -> DatasetError {
    DatasetError::UntranscribableSymbol {
        position,
        symbol: symbol.into(),
    }
}

fn is_han(c: char) -> bool {
    !c.is_ascii() && c.is_alphabetic()
}

/// Rule- and KB-driven transcription of mixed prose and `$...$` math.
pub struct Transcriber {
    pub rules: RuleSet,
    pub zh: KnowledgeBase,
    pub en: KnowledgeBase,
    pub readings: CharPinyin,
}

struct Output {
    words: Vec<String>,
}

impl Output {
    fn push(&mut self, w: String) {
        if !w.is_empty() {
            self.words.push(w);
        }
    }

    fn attach(&mut self, s: &str) {
        match self.words.last_mut() {
            Some(last) => last.push_str(s),
            None => self.words.push(s.to_string()),
        }
    }
}

impl Transcriber {
    pub fn seeded() -> Self {
        Transcriber {
            rules: RuleSet::seeded(),
            zh: seed::zh_kb().expect("shipped Chinese KB parses"),
            en: seed::en_kb().expect("shipped English KB parses"),
            readings: seed::char_pinyin().expect("shipped readings parse"),
        }
    }

    /// `pinyin`, when given, supplies one syllable per Chinese character in order.
    pub fn transcribe(
        &self,
        text: &str,
        language: Language,
        pinyin: Option<&[String]>,
    ) -> Result<BrailleSequence, DatasetError> {
        let chars: Vec<char> = text.chars().collect();
        if let Some(p) = pinyin {
            let needed = chars.iter().filter(|c| is_han(**c)).count();
            if p.len() != needed {
                return Err(DatasetError::PinyinMismatch {
                    given: p.len(),
                    needed,
                });
            }
        }
        let mut out = Output { words: Vec::new() };
        let mut syllables = pinyin.map(|p| p.iter());
        let mut pos = 0;
        for span in math_spans(text)? {
            self.prose(&chars, pos, span.start, language, &mut syllables, &mut out)?;
            let math = self.math(&span.body, span.start)?;
            for w in math.split(' ') {
                out.push(w.to_string());
            }
            pos = span.end;
        }
        self.prose(&chars, pos, chars.len(), language, &mut syllables, &mut out)?;
        let words = out
            .words
            .into_iter()
            .map(|w| BrailleFragment::new(w.clone()).map_err(|_| untranscribable(0, w)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BrailleSequence::from_words(words))
    }

    fn math(&self, body: &str, offset: usize) -> Result<String, DatasetError> {
        let nodes = latex::canonicalize(latex::parse(body)?);
        let mut out = String::new();
        let mut state = State {
            start: true,
            after_number: false,
        };
        self.math_nodes(&nodes, offset, &mut state, &mut out)?;
        Ok(out)
    }

    fn math_nodes(
        &self,
        nodes: &[Node],
        offset: usize,
        state: &mut State,
        out: &mut String,
    ) -> Result<(), DatasetError> {
        let rule = |p: &Pattern, s: State, sym: &str| {
            self.rules
                .find("math", p, s)
                .ok_or_else(|| untranscribable(offset, sym))
        };
        let mut i = 0;
        while i < nodes.len() {
            match &nodes[i] {
                Node::Cmd(name) if name == "frac" => {
                    let arg = |k: usize| match nodes.get(i + k) {
                        Some(Node::Group(g)) => g
                            .iter()
                            .map(|n| match n {
                                Node::Char(c) if c.is_ascii_digit() => Some(*c),
                                _ => None,
                            })
                            .collect::<Option<String>>()
                            .filter(|s| !s.is_empty()),
                        _ => None,
                    };
                    let (Some(num), Some(den)) = (arg(1), arg(2)) else {
                        return Err(untranscribable(offset, "\\frac"));
                    };
                    let r = rule(&Pattern::Frac, *state, "\\frac")?;
                    let [a, b] = digit_slots("num", &num);
                    let [c, d] = digit_slots("den", &den);
                    let slots = [
                        (a.0.as_str(), a.1),
                        (b.0.as_str(), b.1),
                        (c.0.as_str(), c.1),
                        (d.0.as_str(), d.1),
                    ];
                    out.push_str(&fill(&r.emission, &slots));
                    *state = State {
                        start: false,
                        after_number: true,
                    };
                    i += 3;
                }
                Node::Char(c) if c.is_ascii_digit() => {
                    let mut digits = String::new();
                    while let Some(Node::Char(d)) = nodes.get(i) {
                        if !d.is_ascii_digit() {
                            break;
                        }
                        digits.push(*d);
                        i += 1;
                    }
                    let r = rule(&Pattern::Digits, *state, &digits)?;
                    let [a, b] = digit_slots("digits", &digits);
                    out.push_str(&fill(
                        &r.emission,
                        &[(a.0.as_str(), a.1), (b.0.as_str(), b.1)],
                    ));
                    *state = State {
                        start: false,
                        after_number: true,
                    };
                }
                Node::Char(c) if c.is_ascii_alphabetic() => {
                    let r = rule(&Pattern::Letter, *state, &c.to_string())?;
                    out.push_str(&fill(
                        &r.emission,
                        &[("letter", c.to_ascii_uppercase().to_string())],
                    ));
                    *state = State::default();
                    i += 1;
                }
                Node::Char(c) => {
                    let r = rule(&Pattern::Literal(c.to_string()), *state, &c.to_string())?;
                    out.push_str(&r.emission);
                    *state = State::default();
                    i += 1;
                }
                Node::Group(g) => {
                    self.math_nodes(g, offset, state, out)?;
                    i += 1;
                }
                Node::Space => i += 1,
                Node::Cmd(name) => return Err(untranscribable(offset, format!("\\{name}"))),
            }
        }
        Ok(())
    }

    fn prose(
        &self,
        chars: &[char],
        from: usize,
        to: usize,
        language: Language,
        syllables: &mut Option<std::slice::Iter<'_, String>>,
        out: &mut Output,
    ) -> Result<(), DatasetError> {
        match language {
            Language::Chinese => self.chinese(chars, from, to, syllables, out),
            Language::English => self.english(chars, from, to, out),
        }
    }

    fn flush_han(&self, run: &mut String, out: &mut Output) -> Result<(), DatasetError> {
        if !run.is_empty() {
            let seq = word_segment(run, &self.zh).map_err(|_| untranscribable(0, run.clone()))?;
            for w in seq.words() {
                out.push(w.to_string());
            }
            run.clear();
        }
        Ok(())
    }

    fn chinese(
        &self,
        chars: &[char],
        from: usize,
        to: usize,
        syllables: &mut Option<std::slice::Iter<'_, String>>,
        out: &mut Output,
    ) -> Result<(), DatasetError> {
        let mut run = String::new();
        let mut i = from;
        while i < to {
            let c = chars[i];
            if is_han(c) {
                let syllable = match syllables {
                    Some(it) => it.next().map(String::as_str),
                    None => self.readings.default_reading(c),
                }
                .ok_or_else(|| untranscribable(i, c.to_string()))?;
                let frag = self
                    .zh
                    .inverse_lookup(syllable)
                    .first()
                    .map(|f| f.as_str().to_string())
                    .ok_or_else(|| untranscribable(i, c.to_string()))?;
                run.push_str(&frag);
                i += 1;
            } else if c.is_whitespace() {
                self.flush_han(&mut run, out)?;
                i += 1;
            } else if c.is_ascii_alphanumeric() {
                self.flush_han(&mut run, out)?;
                let end = (i..to)
                    .find(|&j| !chars[j].is_ascii_alphanumeric())
                    .unwrap_or(to);
                self.english(chars, i, end, out)?;
                i = end;
            } else {
                self.flush_han(&mut run, out)?;
                let p = self
                    .rules
                    .punctuation(&["pinyin-zh", "text-en"], c)
                    .ok_or_else(|| untranscribable(i, c.to_string()))?;
                out.attach(p);
                i += 1;
            }
        }
        self.flush_han(&mut run, out)
    }

    fn english(
        &self,
        chars: &[char],
        from: usize,
        to: usize,
        out: &mut Output,
    ) -> Result<(), DatasetError> {
        struct Tok {
            start: usize,
            lead: Vec<(usize, char)>,
            core: String,
            trail: Vec<(usize, char)>,
        }
        let mut toks = Vec::new();
        let mut i = from;
        while i < to {
            if chars[i].is_whitespace() {
                i += 1;
                continue;
            }
            let end = (i..to).find(|&j| chars[j].is_whitespace()).unwrap_or(to);
            let is_p = |c: char| !c.is_alphanumeric();
            let mut a = i;
            while a < end && is_p(chars[a]) {
                a += 1;
            }
            let mut b = end;
            while b > a && is_p(chars[b - 1]) {
                b -= 1;
            }
            toks.push(Tok {
                start: a,
                lead: (i..a).map(|k| (k, chars[k])).collect(),
                core: chars[a..b].iter().collect(),
                trail: (b..end).map(|k| (k, chars[k])).collect(),
            });
            i = end;
        }
        let punct = |(pos, c): (usize, char)| {
            self.rules
                .punctuation(&["text-en"], c)
                .ok_or_else(|| untranscribable(pos, c.to_string()))
        };
        let mut k = 0;
        while k < toks.len() {
            for &p in &toks[k].lead {
                out.push(punct(p)?.to_string());
            }
            let mut taken = 1;
            let mut emitted = None;
            for j in (k + 1..=(k + 4).min(toks.len())).rev() {
                let joinable = (k..j - 1).all(|m| toks[m].trail.is_empty())
                    && (k + 1..j).all(|m| toks[m].lead.is_empty())
                    && toks[k..j].iter().all(|t| !t.core.is_empty());
                if !joinable {
                    continue;
                }
                let phrase = toks[k..j]
                    .iter()
                    .map(|t| t.core.to_lowercase())
                    .collect::<Vec<_>>()
                    .join(" ");
                if let Some(f) = self.en.inverse_lookup(&phrase).first() {
                    emitted = Some(format!("{}{}", capital_prefix(&toks[k].core), f.as_str()));
                    taken = j - k;
                    break;
                }
            }
            let word = match emitted {
                Some(w) => w,
                None => self.spell(&toks[k].core, toks[k].start)?,
            };
            out.push(word);
            for &p in &toks[k + taken - 1].trail {
                out.attach(punct(p)?);
            }
            k += taken;
        }
        Ok(())
    }

    /// Letter-by-letter fallback with number and letter signs.
    fn spell(&self, core: &str, start: usize) -> Result<String, DatasetError> {
        let mut w = capital_prefix(core).to_string();
        let mut in_number = false;
        for (k, c) in core.chars().enumerate() {
            if c.is_ascii_digit() {
                if !in_number {
                    w.push('#');
                }
                w.push(upper_digit(c));
                in_number = true;
            } else if c.is_ascii_alphabetic() {
                if in_number {
                    w.push(';');
                }
                w.push(c.to_ascii_uppercase());
                in_number = false;
            } else {
                let p = self
                    .rules
                    .punctuation(&["text-en"], c)
                    .ok_or_else(|| untranscribable(start + k, c.to_string()))?;
                w.push_str(p);
                in_number = false;
            }
        }
        Ok(w)
    }
}

fn capital_prefix(word: &str) -> &'static str {
    let letters: Vec<char> = word.chars().filter(|c| c.is_alphabetic()).collect();
    match letters.first() {
        Some(c) if c.is_uppercase() => {
            if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
                ",,"
            } else {
                ","
            }
        }
        _ => "",
    }
}

pub fn transcribe_mixed(
    text: &str,
    language: Language,
    pinyin: Option<&[String]>,
    transcriber: &Transcriber,
) -> Result<BrailleSequence, DatasetError> {
    transcriber.transcribe(text, language, pinyin)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t() -> Transcriber {
        Transcriber::seeded()
    }

    fn pinyin(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn formula_golden() {
        let out = transcribe_mixed("$\\frac{1}{4}x=15$", Language::Chinese, None, &t()).unwrap();
        assert_eq!(out.to_string(), "#A4;X 7#AE");
    }

    #[test]
    fn mixed_chinese_golden() {
        let p = pinyin("gu4 da2 an4 wei2");
        let out = transcribe_mixed("故答案为：$y$", Language::Chinese, Some(&p), &t()).unwrap();
        assert_eq!(out.to_string(), "GU D91V W- #Y");
        let out = transcribe_mixed("故答案为：$y$", Language::Chinese, None, &t()).unwrap();
        assert_eq!(out.to_string(), "GU D91V W- #Y");
    }

    #[test]
    fn chinese_prose_with_readings_table() {
        let out = transcribe_mixed("经济的快速发展", Language::Chinese, None, &t()).unwrap();
        assert_eq!(out.to_string(), "G*AGI D KYSU F9/V'");
    }

    #[test]
    fn english_prose() {
        let out =
            transcribe_mixed("Suppose that, the child.", Language::English, None, &t()).unwrap();
        assert_eq!(out.to_string(), ",SUPPOSE T1 ! *4");
        let out = transcribe_mixed("NASA 3d", Language::English, None, &t()).unwrap();
        assert_eq!(out.to_string(), ",,NASA #C;D");
    }

    #[test]
    fn empty_and_errors() {
        assert!(transcribe_mixed("", Language::Chinese, None, &t())
            .unwrap()
            .is_empty());
        assert!(matches!(
            transcribe_mixed("$\\sqrt{2}$", Language::Chinese, None, &t()),
            Err(DatasetError::UntranscribableSymbol { .. })
        ));
        assert!(matches!(
            transcribe_mixed("故答", Language::Chinese, Some(&pinyin("gu4")), &t()),
            Err(DatasetError::PinyinMismatch {
                given: 1,
                needed: 2
            })
        ));
        assert!(matches!(
            transcribe_mixed("龘", Language::Chinese, None, &t()),
            Err(DatasetError::UntranscribableSymbol { position: 0, .. })
        ));
    }

    #[test]
    fn rules_parse_errors() {
        assert!(matches!(
            RuleSet::parse("math\t<x>\tsoon\t1\n"),
            Err(DatasetError::Rule { line: 1, .. })
        ));
        assert!(matches!(
            RuleSet::parse("math\tonly-two\n"),
            Err(DatasetError::Rule { .. })
        ));
    }
}
