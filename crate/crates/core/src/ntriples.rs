//! Line-oriented N-Triples grammar.
//!
//! One statement per line: `<s> <p> <o> .` where the object may also be a
//! literal (`"lexical"`, `"lexical"@lang` or `"lexical"^^<datatype>`). Blank
//! nodes are rejected since entity records are keyed by absolute IRIs.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::kg::{Literal, Object, Triple};

/// A malformed line. `line` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

/// What to do when a line fails to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMode {
    /// Stop at the first malformed line.
    #[default]
    Abort,
    /// Drop malformed lines and keep their errors for reporting.
    Skip,
}

/// Triples in input order plus the lines dropped under [`ErrorMode::Skip`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedDocument {
    pub triples: Vec<Triple>,
    pub skipped: Vec<ParseError>,
}

/// Parse a whole document held in memory.
pub fn parse_document(text: &str, mode: ErrorMode) -> Result<ParsedDocument, ParseError> {
    let mut doc = ParsedDocument::default();
    for (i, line) in text.lines().enumerate() {
        match parse_line(line, i + 1) {
            Ok(Some(t)) => doc.triples.push(t),
            Ok(None) => {}
            Err(e) if mode == ErrorMode::Skip => doc.skipped.push(e),
            Err(e) => return Err(e),
        }
    }
    Ok(doc)
}

/// Parse one line. Blank lines and comment lines yield `Ok(None)`.
pub fn parse_line(line: &str, line_number: usize) -> Result<Option<Triple>, ParseError> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let mut cur = Cursor { chars: trimmed.char_indices().peekable(), src: trimmed };
    let err = |reason: Reason| ParseError { line: line_number, reason: reason.to_string() };

    let subject = cur.iri_term("subject").map_err(err)?;
    cur.require_space("subject").map_err(err)?;
    let predicate = cur.iri_term("predicate").map_err(err)?;
    cur.require_space("predicate").map_err(err)?;
    let object = match cur.peek() {
        Some('"') => Object::Literal(cur.literal().map_err(err)?),
        Some(_) => Object::Iri(cur.iri_term("object").map_err(err)?),
        None => return Err(err(Reason::Missing("object"))),
    };
    cur.skip_space();
    match cur.next() {
        Some('.') => {}
        Some(c) => return Err(err(Reason::Unexpected(c, "'.'"))),
        None => return Err(err(Reason::Missing("terminating '.'"))),
    }
    cur.skip_space();
    match cur.next() {
        None | Some('#') => {}
        Some(c) => return Err(err(Reason::Unexpected(c, "end of line"))),
    }
    Ok(Some(Triple { subject, predicate, object }))
}

enum Reason {
    Missing(&'static str),
    Unexpected(char, &'static str),
    BlankNode(&'static str),
    Unterminated(&'static str),
    BadEscape,
    NotAbsolute(String),
    BadIriChar(char),
    BadLanguage,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reason::Missing(what) => write!(f, "missing {what}"),
            Reason::Unexpected(c, want) => write!(f, "unexpected {c:?}, expected {want}"),
            Reason::BlankNode(pos) => write!(f, "blank node in {pos} position is not supported"),
            Reason::Unterminated(what) => write!(f, "unterminated {what}"),
            Reason::BadEscape => f.write_str("invalid escape sequence"),
            Reason::NotAbsolute(iri) => write!(f, "IRI <{iri}> is not absolute"),
            Reason::BadIriChar(c) => write!(f, "character {c:?} not allowed in IRI"),
            Reason::BadLanguage => f.write_str("malformed language tag"),
        }
    }
}

struct Cursor<'a> {
    chars: core::iter::Peekable<core::str::CharIndices<'a>>,
    src: &'a str,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn next(&mut self) -> Option<char> {
        self.chars.next().map(|(_, c)| c)
    }

    fn skip_space(&mut self) -> usize {
        let mut n = 0;
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.next();
            n += 1;
        }
        n
    }

    fn require_space(&mut self, after: &'static str) -> Result<(), Reason> {
        if self.skip_space() == 0 {
            return match self.peek() {
                None => Err(Reason::Missing(match after {
                    "subject" => "predicate",
                    _ => "object",
                })),
                Some(c) => Err(Reason::Unexpected(c, "whitespace")),
            };
        }
        Ok(())
    }

    fn iri_term(&mut self, position: &'static str) -> Result<String, Reason> {
        match self.next() {
            Some('<') => {}
            Some('_') => return Err(Reason::BlankNode(position)),
            Some(c) => return Err(Reason::Unexpected(c, "'<'")),
            None => return Err(Reason::Missing(position)),
        }
        let iri = self.iri_body()?;
        if !is_absolute(&iri) {
            return Err(Reason::NotAbsolute(iri));
        }
        Ok(iri)
    }

    fn iri_body(&mut self) -> Result<String, Reason> {
        let mut out = String::new();
        loop {
            match self.next() {
                None => return Err(Reason::Unterminated("IRI")),
                Some('>') => return Ok(out),
                Some('\\') => match self.next() {
                    Some('u') => out.push(self.hex_escape(4)?),
                    Some('U') => out.push(self.hex_escape(8)?),
                    _ => return Err(Reason::BadEscape),
                },
                Some(c @ (' ' | '<' | '"' | '{' | '}' | '|' | '^' | '`')) => {
                    return Err(Reason::BadIriChar(c))
                }
                Some(c) if (c as u32) <= 0x20 => return Err(Reason::BadIriChar(c)),
                Some(c) => out.push(c),
            }
        }
    }

    fn hex_escape(&mut self, digits: usize) -> Result<char, Reason> {
        let mut value = 0u32;
        for _ in 0..digits {
            let d = self.next().and_then(|c| c.to_digit(16)).ok_or(Reason::BadEscape)?;
            value = value * 16 + d;
        }
        char::from_u32(value).ok_or(Reason::BadEscape)
    }

    fn literal(&mut self) -> Result<Literal, Reason> {
        self.next(); // opening quote
        let mut value = String::new();
        loop {
            match self.next() {
                None => return Err(Reason::Unterminated("literal")),
                Some('"') => break,
                Some('\\') => value.push(match self.next() {
                    Some('t') => '\t',
                    Some('b') => '\u{8}',
                    Some('n') => '\n',
                    Some('r') => '\r',
                    Some('f') => '\u{c}',
                    Some('"') => '"',
                    Some('\'') => '\'',
                    Some('\\') => '\\',
                    Some('u') => self.hex_escape(4)?,
                    Some('U') => self.hex_escape(8)?,
                    _ => return Err(Reason::BadEscape),
                }),
                Some(c) => value.push(c),
            }
        }
        let mut lit = Literal { value, language: None, datatype: None };
        match self.peek() {
            Some('@') => {
                self.next();
                let start = self.chars.peek().map(|&(i, _)| i).unwrap_or(self.src.len());
                let mut end = start;
                while let Some(&(i, c)) = self.chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '-' {
                        end = i + c.len_utf8();
                        self.next();
                    } else {
                        break;
                    }
                }
                let tag = &self.src[start..end];
                if tag.is_empty() || tag.starts_with('-') || !tag.as_bytes()[0].is_ascii_alphabetic() {
                    return Err(Reason::BadLanguage);
                }
                lit.language = Some(tag.to_string());
            }
            Some('^') => {
                self.next();
                if self.next() != Some('^') {
                    return Err(Reason::Missing("second '^' of datatype marker"));
                }
                lit.datatype = Some(self.iri_term("datatype")?);
            }
            _ => {}
        }
        Ok(lit)
    }
}

/// `scheme ":" ...` with an RFC 3986 scheme.
/// Serialize one triple as an N-Triples statement (without newline).
/// Output re-parses to the same triple.
pub fn format_triple(t: &Triple) -> String {
    let mut out = String::new();
    push_iri(&mut out, &t.subject);
    out.push(' ');
    push_iri(&mut out, &t.predicate);
    out.push(' ');
    match &t.object {
        Object::Iri(iri) => push_iri(&mut out, iri),
        Object::Literal(lit) => {
            out.push('"');
            for c in lit.value.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\r' => out.push_str("\\r"),
                    '\t' => out.push_str("\\t"),
                    c if c.is_control() => push_unicode_escape(&mut out, c),
                    c => out.push(c),
                }
            }
            out.push('"');
            if let Some(lang) = &lit.language {
                out.push('@');
                out.push_str(lang);
            } else if let Some(dt) = &lit.datatype {
                out.push_str("^^");
                push_iri(&mut out, dt);
            }
        }
    }
    out.push_str(" .");
    out
}

fn push_iri(out: &mut String, iri: &str) {
    out.push('<');
    for c in iri.chars() {
        if c <= ' ' || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\') {
            push_unicode_escape(out, c);
        } else {
            out.push(c);
        }
    }
    out.push('>');
}

fn push_unicode_escape(out: &mut String, c: char) {
    use core::fmt::Write;
    let _ = write!(out, "\\u{:04X}", c as u32);
}

pub fn is_absolute(iri: &str) -> bool {
    let Some((scheme, _)) = iri.split_once(':') else {
        return false;
    };
    let mut chars = scheme.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn iri(s: &str) -> Object {
        Object::Iri(s.to_string())
    }

    #[test]
    fn single_statement() {
        let t = parse_line(r#"<http://a> <http://p> "x" ."#, 1).unwrap().unwrap();
        assert_eq!(t.subject, "http://a");
        assert_eq!(t.predicate, "http://p");
        assert_eq!(t.object, Object::Literal(Literal::plain("x")));
    }

    #[test]
    fn missing_object_is_error_at_line_one() {
        let e = parse_line("<http://a> <http://p>", 1).unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse_document("<http://a> <http://p>\n", ErrorMode::Abort).unwrap_err();
        assert_eq!(e.line, 1);
    }

    #[test]
    fn escapes_decoded() {
        let t = parse_line(r#"<http://a> <http://p> "a\nb\t\"c\" \u00e9\U0001F600" ."#, 1)
            .unwrap()
            .unwrap();
        let Object::Literal(l) = t.object else { panic!() };
        assert_eq!(l.value, "a\nb\t\"c\" \u{e9}\u{1F600}");
    }

    #[test]
    fn language_and_datatype() {
        let t = parse_line(r#"<http://a> <http://p> "chat"@fr-CA ."#, 1).unwrap().unwrap();
        let Object::Literal(l) = t.object else { panic!() };
        assert_eq!(l.language.as_deref(), Some("fr-CA"));
        let t = parse_line(
            r#"<http://a> <http://p> "2017"^^<http://www.w3.org/2001/XMLSchema#gYear> ."#,
            1,
        )
        .unwrap()
        .unwrap();
        let Object::Literal(l) = t.object else { panic!() };
        assert_eq!(l.datatype.as_deref(), Some("http://www.w3.org/2001/XMLSchema#gYear"));
    }

    #[test]
    fn iri_object_and_trailing_comment() {
        let t = parse_line("<http://a>\t<http://p>  <http://b> . # note", 3).unwrap().unwrap();
        assert_eq!(t.object, iri("http://b"));
    }

    #[test]
    fn rejects_malformed() {
        for line in [
            "<http://a> <http://p> <http://b>",
            "<http://a> <http://p> <http://b> . extra",
            "_:b0 <http://p> <http://b> .",
            "<relative> <http://p> <http://b> .",
            "<http://a> <http://p> \"open .",
            "<http://a><http://p> <http://b> .",
            "<http://a> <http://p> \"x\"@ .",
            "<http://a> <http://p> \"\\q\" .",
            "<http://a b> <http://p> <http://b> .",
        ] {
            assert!(parse_line(line, 7).is_err(), "{line}");
        }
    }

    #[test]
    fn blank_and_comment_lines_ignored() {
        assert_eq!(parse_line("   ", 1).unwrap(), None);
        assert_eq!(parse_line("# comment", 1).unwrap(), None);
    }

    #[test]
    fn fixture_preserves_order_and_count() {
        let doc = "\
<https://dblp.org/pid/1> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <https://dblp.org/rdf/schema#Person> .
<https://dblp.org/pid/1> <https://dblp.org/rdf/schema#primaryCreatorName> \"Ashish Vaswani\" .
<https://dblp.org/pid/2> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <https://dblp.org/rdf/schema#Person> .
<https://dblp.org/pid/2> <https://dblp.org/rdf/schema#primaryCreatorName> \"Noam Shazeer\" .
<https://dblp.org/rec/conf/nips/VaswaniSPUJGKP17> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <https://dblp.org/rdf/schema#Publication> .
<https://dblp.org/rec/conf/nips/VaswaniSPUJGKP17> <https://dblp.org/rdf/schema#title> \"Attention is All you Need.\" .
";
        let parsed = parse_document(doc, ErrorMode::Abort).unwrap();
        assert_eq!(parsed.triples.len(), 6);
        assert_eq!(parsed.triples[1].subject, "https://dblp.org/pid/1");
        assert_eq!(parsed.triples[5].subject, "https://dblp.org/rec/conf/nips/VaswaniSPUJGKP17");
        assert!(parsed.skipped.is_empty());
    }

    #[test]
    fn skip_mode_counts_bad_lines() {
        let doc = "<http://a> <http://p> \"x\" .\nbroken\n<http://b> <http://p> \"y\" .\n";
        let parsed = parse_document(doc, ErrorMode::Skip).unwrap();
        assert_eq!(parsed.triples.len(), 2);
        assert_eq!(parsed.skipped.len(), 1);
        assert_eq!(parsed.skipped[0].line, 2);
    }
}
