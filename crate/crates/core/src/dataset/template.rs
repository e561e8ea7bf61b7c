use serde::{Deserialize, Serialize};

use super::{DatasetError, ParallelExample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskType {
    ChineseToBraille,
    PinyinToBraille,
    FormulaToBraille,
    WordSegmentation,
    MixedChineseToBraille,
    MixedEnglishToBraille,
    BrailleToText,
}

impl TaskType {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskType::ChineseToBraille => "chinese-to-braille",
            TaskType::PinyinToBraille => "pinyin-to-braille",
            TaskType::FormulaToBraille => "formula-to-braille",
            TaskType::WordSegmentation => "word-segmentation",
            TaskType::MixedChineseToBraille => "mixed-chinese-to-braille",
            TaskType::MixedEnglishToBraille => "mixed-english-to-braille",
            TaskType::BrailleToText => "braille-to-text",
        }
    }
}

impl std::str::FromStr for TaskType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            TaskType::ChineseToBraille,
            TaskType::PinyinToBraille,
            TaskType::FormulaToBraille,
            TaskType::WordSegmentation,
            TaskType::MixedChineseToBraille,
            TaskType::MixedEnglishToBraille,
            TaskType::BrailleToText,
        ]
        .into_iter()
        .find(|t| t.as_str() == s)
        .ok_or_else(|| format!("unknown task {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    BrailleToText,
    TextToBraille,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub template_id: String,
    pub instruction: String,
    pub input: String,
    pub output: String,
    pub task: TaskType,
}

enum Piece<'a> {
    Lit(&'a str),
    Slot(&'a str),
}

fn pieces(template: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        match rest[open..].find('}') {
            Some(len)
                if rest[open + 1..open + len]
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_')
                    && len > 1 =>
            {
                out.push(Piece::Lit(&rest[..open]));
                out.push(Piece::Slot(&rest[open + 1..open + len]));
                rest = &rest[open + len + 1..];
            }
            _ => {
                out.push(Piece::Lit(&rest[..open + 1]));
                rest = &rest[open + 1..];
            }
        }
    }
    out.push(Piece::Lit(rest));
    out
}

/// Fills `{input}`, `{language}` and `{task}`; the expected output is the
/// side of `ex` opposite to the input.
pub fn render_instruction(
    template_id: &str,
    template: &str,
    ex: &ParallelExample,
    direction: Direction,
    task: TaskType,
) -> Result<InstructionRecord, DatasetError> {
    let (input, output) = match direction {
        Direction::BrailleToText => (&ex.braille, &ex.text),
        Direction::TextToBraille => (&ex.text, &ex.braille),
    };
    let parts = pieces(template);
    let mut inputs = 0;
    let mut instruction = String::new();
    for p in &parts {
        match p {
            Piece::Lit(s) => instruction.push_str(s),
            Piece::Slot("input") => {
                inputs += 1;
                instruction.push_str(input);
            }
            Piece::Slot("language") => instruction.push_str(&ex.language.to_string()),
            Piece::Slot("task") => instruction.push_str(task.as_str()),
            Piece::Slot(other) => return Err(DatasetError::UnknownPlaceholder(other.to_string())),
        }
    }
    if inputs != 1 {
        return Err(DatasetError::InputPlaceholder);
    }
    if instruction.matches(input.as_str()).count() != 1 {
        return Err(DatasetError::AmbiguousInput);
    }
    Ok(InstructionRecord {
        template_id: template_id.to_string(),
        instruction,
        input: input.clone(),
        output: output.clone(),
        task,
    })
}
