use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Tokenize {
    /// Every non-whitespace character is a token.
    Char,
    Whitespace,
    /// Punctuation and symbols split off, except punctuation between digits.
    #[default]
    Intl,
}

impl std::str::FromStr for Tokenize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "char" => Ok(Tokenize::Char),
            "whitespace" => Ok(Tokenize::Whitespace),
            "intl" => Ok(Tokenize::Intl),
            other => Err(format!("unknown tokenization {other:?}")),
        }
    }
}

fn intl_rules() -> &'static [(Regex, &'static str); 3] {
    static RULES: OnceLock<[(Regex, &'static str); 3]> = OnceLock::new();
    RULES.get_or_init(|| {
        [
            (Regex::new(r"(\P{N})(\p{P})").unwrap(), "$1 $2 "),
            (Regex::new(r"(\p{P})(\P{N})").unwrap(), " $1 $2"),
            (Regex::new(r"(\p{S})").unwrap(), " $1 "),
        ]
    })
}

pub fn tokenize(s: &str, mode: Tokenize) -> Vec<String> {
    match mode {
        Tokenize::Char => s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect(),
        Tokenize::Whitespace => s.split_whitespace().map(String::from).collect(),
        Tokenize::Intl => {
            let mut text = s.to_string();
            for (re, rep) in intl_rules() {
                text = re.replace_all(&text, *rep).into_owned();
            }
            text.split_whitespace().map(String::from).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes() {
        assert_eq!(tokenize("经济 的", Tokenize::Char), ["经", "济", "的"]);
        assert_eq!(tokenize(" a  b ", Tokenize::Whitespace), ["a", "b"]);
        assert_eq!(
            tokenize("Hello, world! 3.14 $5", Tokenize::Intl),
            ["Hello", ",", "world", "!", "3.14", "$", "5"]
        );
    }
}
