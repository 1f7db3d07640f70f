//! Entity spans: the `label [type] | label [type]` grammar produced by
//! sequence-to-sequence span models, and a dictionary-based detector.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::index::LabelIndex;
use crate::kg::EntityType;
use crate::text::normalize;

/// A detected entity mention: label text and a canonical type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpanPrediction {
    pub label_text: String,
    pub etype: EntityType,
}

/// Name of a configured span detector, e.g. `lexicon` or `t5-small-remote`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpanModelId(pub String);

impl SpanModelId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SpanModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("span output malformed at byte {position}: {reason}")]
pub struct SpanParseError {
    pub position: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DetectError {
    #[error("span detector {endpoint} unavailable: {cause}")]
    RemoteUnavailable { endpoint: String, cause: String },
    #[error("{error} (raw output {raw:?})")]
    Parse { error: SpanParseError, raw: String },
}

pub trait SpanDetector {
    fn detect(&self, question: &str) -> Result<Vec<SpanPrediction>, DetectError>;
}

pub const SPAN_SEPARATOR: &str = " | ";

/// Parse `label [type] | label [type] ...`. Types are `person` or
/// `publication` in any case; empty input yields no spans.
pub fn parse_model_output(text: &str) -> Result<Vec<SpanPrediction>, SpanParseError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut spans = Vec::new();
    let mut offset = 0;
    for segment in text.split('|') {
        let position = offset + (segment.len() - segment.trim_start().len());
        offset += segment.len() + 1;
        let err = |reason: &str| SpanParseError { position, reason: reason.to_string() };
        let segment = segment.trim();
        let body = segment.strip_suffix(']').ok_or_else(|| err("missing bracketed type"))?;
        let (label, etype) = body.rsplit_once('[').ok_or_else(|| err("missing bracketed type"))?;
        let label = label.trim();
        if label.is_empty() {
            return Err(err("empty label"));
        }
        let etype = match EntityType::from_name(etype.trim()) {
            EntityType::Other(_) => return Err(err("unknown type")),
            t => t,
        };
        spans.push(SpanPrediction { label_text: label.to_string(), etype });
    }
    Ok(spans)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SerializeError {
    #[error("label {0:?} contains '|' or '['")]
    ReservedCharacter(String),
    #[error("label {0:?} is empty or has surrounding whitespace")]
    BadLabel(String),
    #[error("span type {0} cannot be serialized")]
    NonCanonicalType(EntityType),
}

/// Inverse of [`parse_model_output`].
pub fn serialize_spans(spans: &[SpanPrediction]) -> Result<String, SerializeError> {
    let mut parts = Vec::with_capacity(spans.len());
    for s in spans {
        if s.label_text.contains(['|', '[']) {
            return Err(SerializeError::ReservedCharacter(s.label_text.clone()));
        }
        if s.label_text.is_empty() || s.label_text.trim() != s.label_text {
            return Err(SerializeError::BadLabel(s.label_text.clone()));
        }
        if !s.etype.is_canonical() {
            return Err(SerializeError::NonCanonicalType(s.etype.clone()));
        }
        parts.push(alloc::format!("{} [{}]", s.label_text, s.etype));
    }
    Ok(parts.join(SPAN_SEPARATOR))
}

const MAX_NGRAM: usize = 6;
const MIN_NGRAM: usize = 2;

/// Dictionary detector over the labels of a [`LabelIndex`].
///
/// Quoted segments become publication spans. In the unquoted text, token
/// n-grams (longest first, 6 down to 2) matching a person or publication
/// label become spans of that entity's type, scanning left to right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconDetector {
    labels: BTreeMap<Vec<String>, (String, EntityType)>,
}

impl LexiconDetector {
    pub fn new(index: &LabelIndex) -> Self {
        let mut labels = BTreeMap::new();
        for l in index.labels().iter().filter(|l| l.etype.is_canonical()) {
            let tokens = tokens(&l.normalized);
            if (MIN_NGRAM..=MAX_NGRAM).contains(&tokens.len()) {
                labels.entry(tokens).or_insert_with(|| (l.normalized.clone(), l.etype.clone()));
            }
        }
        Self { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn detect_spans(&self, question: &str) -> Vec<SpanPrediction> {
        let mut spans = Vec::new();
        for segment in split_quoted(question) {
            match segment {
                Segment::Quoted(text) => spans.push(SpanPrediction {
                    label_text: text.to_string(),
                    etype: EntityType::Publication,
                }),
                Segment::Plain(text) => self.match_ngrams(text, &mut spans),
            }
        }
        spans
    }

    fn match_ngrams(&self, text: &str, spans: &mut Vec<SpanPrediction>) {
        let toks = tokens(&normalize(text));
        let mut i = 0;
        while i < toks.len() {
            let longest = MAX_NGRAM.min(toks.len() - i);
            let hit = (MIN_NGRAM..=longest).rev().find_map(|n| Some((n, self.labels.get(&toks[i..i + n])?)));
            match hit {
                Some((n, (label, etype))) => {
                    spans.push(SpanPrediction { label_text: label.clone(), etype: etype.clone() });
                    i += n;
                }
                None => i += 1,
            }
        }
    }
}

impl SpanDetector for LexiconDetector {
    fn detect(&self, question: &str) -> Result<Vec<SpanPrediction>, DetectError> {
        Ok(self.detect_spans(question))
    }
}

/// One-shot lexicon detection; prefer building a [`LexiconDetector`] once.
pub fn detect_lexicon(index: &LabelIndex, question: &str) -> Vec<SpanPrediction> {
    LexiconDetector::new(index).detect_spans(question)
}

/// Whitespace tokens with surrounding punctuation stripped; empty tokens dropped.
fn tokens(normalized: &str) -> Vec<String> {
    normalized
        .split(' ')
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

#[derive(Debug, PartialEq, Eq)]
enum Segment<'a> {
    Plain(&'a str),
    Quoted(&'a str),
}

fn closing_quote(open: char) -> Option<char> {
    match open {
        '"' => Some('"'),
        '\'' => Some('\''),
        '\u{201c}' => Some('\u{201d}'),
        '\u{2018}' => Some('\u{2019}'),
        _ => None,
    }
}

/// Split into plain and quoted segments. A quote opens at the start or after
/// whitespace or an opening bracket, and closes at the matching quote
/// followed by the end, whitespace or punctuation. Unclosed quotes stay plain.
fn split_quoted(text: &str) -> Vec<Segment<'_>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut plain_start = 0;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        let opens = closing_quote(c).filter(|_| i == 0 || matches!(chars[i - 1].1, ' ' | '\t' | '\n' | '(' | '[' | '{'));
        let Some(close) = opens else {
            i += 1;
            continue;
        };
        let end = (i + 1..chars.len()).find(|&j| {
            chars[j].1 == close
                && chars.get(j + 1).is_none_or(|&(_, n)| n.is_whitespace() || ".,;:!?)]}".contains(n))
        });
        let Some(j) = end else {
            i += 1;
            continue;
        };
        let inner = text[pos + c.len_utf8()..chars[j].0].trim();
        if inner.is_empty() {
            i = j + 1;
            continue;
        }
        if plain_start < pos {
            out.push(Segment::Plain(&text[plain_start..pos]));
        }
        out.push(Segment::Quoted(inner));
        plain_start = chars[j].0 + close.len_utf8();
        i = j + 1;
    }
    if plain_start < text.len() {
        out.push(Segment::Plain(&text[plain_start..]));
    }
    out
}
