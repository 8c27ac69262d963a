//! Labeled corpus model, the TSV corpus format, class statistics, splits and
//! token-length percentiles.
//!
//! TSV format: a line `#doc<TAB><doc_id>` opens a document, every following
//! non-blank line is `<sentence text><TAB><canonical label>`. Blank lines are
//! ignored.

mod label;
mod split;

use std::collections::HashSet;
use std::io::{self, BufRead, Write};
use std::ops::Index;

pub use label::{RhetoricalLabel, UnknownLabel, NUM_LABELS};
pub use split::{split, SplitMode, SplitSpec};

use crate::embedding::TokenizerConfig;

const DOC_HEADER: &str = "#doc";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Label { line: usize, source: UnknownLabel },
    #[error("corpus has {0} sentences; at least 2 are needed to split")]
    TooSmallToSplit(usize),
    #[error("split leaves an empty {0} side")]
    EmptySplitSide(&'static str),
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("percentile must lie in (0, 1], got {0}")]
    BadPercentile(f64),
    #[error("corpus is empty")]
    Empty,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One sentence of a judgment with its rhetorical role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSentence {
    pub text: String,
    pub label: RhetoricalLabel,
    pub doc_id: String,
    /// 0-based position within the document.
    pub position: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    sentences: Vec<LabeledSentence>,
    documents: Vec<String>,
}

impl Corpus {
    pub fn sentences(&self) -> &[LabeledSentence] {
        &self.sentences
    }

    /// Document ids in ingestion order.
    pub fn documents(&self) -> &[String] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Parses the TSV corpus format.
    pub fn parse<R: BufRead>(input: R) -> Result<Self, CorpusError> {
        let mut corpus = Corpus::default();
        let mut seen = HashSet::new();
        let mut current: Option<(String, usize)> = None;

        for (i, line) in input.lines().enumerate() {
            let lineno = i + 1;
            let line = line?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| CorpusError::Parse {
                line: lineno,
                message,
            };

            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 {
                return Err(parse_err(format!(
                    "expected 2 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            if fields[0] == DOC_HEADER {
                let id = fields[1];
                if id.is_empty() {
                    return Err(parse_err("empty document id".into()));
                }
                if !seen.insert(id.to_string()) {
                    return Err(parse_err(format!("duplicate document id {id:?}")));
                }
                corpus.documents.push(id.to_string());
                current = Some((id.to_string(), 0));
                continue;
            }

            let Some((doc_id, next)) = current.as_mut() else {
                return Err(parse_err("sentence before the first #doc header".into()));
            };
            let text = fields[0];
            if text.trim().is_empty() {
                return Err(parse_err("empty sentence text".into()));
            }
            let label = fields[1].parse().map_err(|source| CorpusError::Label {
                line: lineno,
                source,
            })?;
            corpus.sentences.push(LabeledSentence {
                text: text.to_string(),
                label,
                doc_id: doc_id.clone(),
                position: *next,
            });
            *next += 1;
        }
        Ok(corpus)
    }

    /// Appends a document. Ids must be unique; ids and texts must be
    /// non-empty and free of tabs and line breaks.
    pub fn push_document<I, S>(&mut self, doc_id: &str, sentences: I) -> Result<(), CorpusError>
    where
        I: IntoIterator<Item = (S, RhetoricalLabel)>,
        S: Into<String>,
    {
        let bad = |message: String| CorpusError::Parse { line: 0, message };
        let clean = |s: &str| !s.contains(['\t', '\n', '\r']);
        if doc_id.is_empty() || !clean(doc_id) || doc_id == DOC_HEADER {
            return Err(bad(format!("invalid document id {doc_id:?}")));
        }
        if self.documents.iter().any(|d| d == doc_id) {
            return Err(bad(format!("duplicate document id {doc_id:?}")));
        }
        let mut pending = Vec::new();
        for (position, (text, label)) in sentences.into_iter().enumerate() {
            let text = text.into();
            if text.trim().is_empty() || !clean(&text) {
                return Err(bad(format!("invalid sentence text {text:?}")));
            }
            pending.push(LabeledSentence {
                text,
                label,
                doc_id: doc_id.to_string(),
                position,
            });
        }
        self.documents.push(doc_id.to_string());
        self.sentences.extend(pending);
        Ok(())
    }

    pub fn parse_str(s: &str) -> Result<Self, CorpusError> {
        Self::parse(s.as_bytes())
    }

    /// Writes the corpus in TSV form with `\n` line endings.
    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut rest = self.sentences.as_slice();
        for doc in &self.documents {
            writeln!(out, "{DOC_HEADER}\t{doc}")?;
            let n = rest.iter().take_while(|s| &s.doc_id == doc).count();
            for s in &rest[..n] {
                writeln!(out, "{}\t{}", s.text, s.label)?;
            }
            rest = &rest[n..];
        }
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("corpus text is UTF-8")
    }

    pub fn class_distribution(&self) -> LabelCounts {
        LabelCounts::of(&self.sentences)
    }
}

/// Per-label sentence counts in canonical label order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelCounts([usize; NUM_LABELS]);

impl LabelCounts {
    pub fn of(sentences: &[LabeledSentence]) -> Self {
        let mut counts = [0; NUM_LABELS];
        for s in sentences {
            counts[s.label.index()] += 1;
        }
        Self(counts)
    }

    pub fn from_array(counts: [usize; NUM_LABELS]) -> Self {
        Self(counts)
    }

    pub fn get(&self, label: RhetoricalLabel) -> usize {
        self.0[label.index()]
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = (RhetoricalLabel, usize)> + '_ {
        RhetoricalLabel::ALL.iter().map(|&l| (l, self.get(l)))
    }
}

impl Index<RhetoricalLabel> for LabelCounts {
    type Output = usize;

    fn index(&self, label: RhetoricalLabel) -> &usize {
        &self.0[label.index()]
    }
}

/// Nearest-rank `q`-th percentile of per-sentence token counts: the value at
/// 1-based position `ceil(q * N)` of the sorted counts.
///
/// Tokens are counted with `tokenizer`, truncation included; pass an
/// untruncated config to measure raw lengths.
pub fn length_percentile(
    sentences: &[LabeledSentence],
    tokenizer: &TokenizerConfig,
    q: f64,
) -> Result<usize, CorpusError> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(CorpusError::BadPercentile(q));
    }
    if sentences.is_empty() {
        return Err(CorpusError::Empty);
    }
    let mut lengths: Vec<usize> = sentences
        .iter()
        .map(|s| tokenizer.tokenize(&s.text).len())
        .collect();
    Ok(nearest_rank(&mut lengths, q))
}

pub(crate) fn nearest_rank(values: &mut [usize], q: f64) -> usize {
    values.sort_unstable();
    let n = values.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    values[rank - 1]
}
