use std::borrow::Cow;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Casing {
    Cased,
    Uncased,
}

impl std::str::FromStr for Casing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cased" => Ok(Casing::Cased),
            "uncased" => Ok(Casing::Uncased),
            other => Err(format!("unknown casing {other:?}")),
        }
    }
}

impl std::fmt::Display for Casing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Casing::Cased => "cased",
            Casing::Uncased => "uncased",
        })
    }
}

/// Whitespace tokenizer with edge punctuation stripping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TokenizerConfig {
    pub casing: Casing,
    /// Maximum number of tokens kept, at least 1.
    pub max_len: usize,
}

impl TokenizerConfig {
    pub fn new(casing: Casing, max_len: usize) -> Self {
        assert!(max_len >= 1, "max_len must be at least 1");
        Self { casing, max_len }
    }

    pub fn untruncated(casing: Casing) -> Self {
        Self::new(casing, usize::MAX)
    }

    /// Splits on Unicode whitespace, strips punctuation from both ends of each
    /// token, drops tokens left empty, applies casing and keeps at most
    /// `max_len` tokens. Inner punctuation survives ("s.302", "ex-parte").
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let text = match self.casing {
            Casing::Cased => Cow::Borrowed(text),
            Casing::Uncased => Cow::Owned(text.to_lowercase()),
        };
        text.split_whitespace()
            .map(|t| t.trim_matches(is_punctuation))
            .filter(|t| !t.is_empty())
            .take(self.max_len)
            .map(str::to_string)
            .collect()
    }
}

/// ASCII punctuation plus the typographic quotes, dashes and brackets common
/// in judgment text.
fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2010}'
                ..='\u{2027}'
                    | '\u{00A1}'
                    | '\u{00A7}'
                    | '\u{00AB}'
                    | '\u{00B6}'
                    | '\u{00B7}'
                    | '\u{00BB}'
                    | '\u{00BF}'
                    | '\u{2039}'
                    | '\u{203A}'
                    | '\u{3001}'
                    | '\u{3002}'
        )
}
