//! Question-set loading, evaluation report output and training TSV files.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use dblplink_core::eval::{validate_dataset, DatasetError, EvalRow};
use dblplink_core::rerank::TrainingExample;
use dblplink_core::{EvalReport, GoldQuestion};
use serde_json::Value;

use crate::config::DatasetFields;
use crate::io::FileError;
use crate::wire::format_distance;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    File(#[from] FileError),
    #[error("{path}: not JSON: {message}")]
    Json { path: String, message: String },
    #[error("schema error at {pointer:?}: {expected}")]
    Schema { pointer: String, expected: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

fn escape(segment: &str) -> String {
    segment.replace('~', "~0").replace('/', "~1")
}

fn schema(pointer: &str, expected: impl Into<String>) -> LoadError {
    LoadError::Schema { pointer: if pointer.is_empty() { "/".into() } else { pointer.into() }, expected: expected.into() }
}

/// Follow a dotted path, extending `pointer` as it goes.
fn walk<'a>(mut value: &'a Value, path: &str, pointer: &mut String) -> Result<&'a Value, LoadError> {
    for part in path.split('.') {
        let obj = value.as_object().ok_or_else(|| schema(pointer, "an object"))?;
        pointer.push('/');
        pointer.push_str(&escape(part));
        value = obj.get(part).ok_or_else(|| schema(pointer, format!("a {part:?} field")))?;
    }
    Ok(value)
}

/// `<iri>` and `iri` both denote `iri`.
fn strip_angles(s: &str) -> &str {
    let s = s.trim();
    s.strip_prefix('<').and_then(|r| r.strip_suffix('>')).unwrap_or(s)
}

/// Parse a question set. The root is either the question array or an object
/// holding it under `fields.questions`.
pub fn parse_dataset(text: &str, fields: &DatasetFields, source: &str) -> Result<Vec<GoldQuestion>, LoadError> {
    let root: Value = serde_json::from_str(text).map_err(|e| LoadError::Json { path: source.into(), message: e.to_string() })?;
    let mut pointer = String::new();
    let items = match &root {
        Value::Array(_) => &root,
        _ => walk(&root, &fields.questions, &mut pointer)?,
    };
    let items = items.as_array().ok_or_else(|| schema(&pointer, "an array of questions"))?;
    if items.is_empty() {
        return Err(schema(&pointer, "at least one question"));
    }
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let base = format!("{pointer}/{i}");
        let mut p = base.clone();
        let id = match walk(item, &fields.id, &mut p)? {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            _ => return Err(schema(&p, "a string or number id")),
        };
        let mut p = base.clone();
        let question = match walk(item, &fields.question, &mut p)? {
            Value::String(s) => s.clone(),
            Value::Object(o) => match o.get("string") {
                Some(Value::String(s)) => s.clone(),
                _ => return Err(schema(&format!("{p}/string"), "the question string")),
            },
            _ => return Err(schema(&p, "a question string")),
        };
        let mut p = base;
        let gold = walk(item, &fields.gold, &mut p)?.as_array().ok_or_else(|| schema(&p, "an array of entity IRIs"))?;
        let mut gold_entities = BTreeSet::new();
        for (j, g) in gold.iter().enumerate() {
            let iri = g.as_str().ok_or_else(|| schema(&format!("{p}/{j}"), "an IRI string"))?;
            gold_entities.insert(strip_angles(iri).to_string());
        }
        out.push(GoldQuestion { id, question, gold_entities });
    }
    validate_dataset(&out)?;
    Ok(out)
}

pub fn load_dataset(path: &Path, fields: &DatasetFields) -> Result<Vec<GoldQuestion>, LoadError> {
    parse_dataset(&crate::io::read_text(path)?, fields, &path.display().to_string())
}

/// Serialize in the default field layout (`questions`, `id`,
/// `question.string`, `entities` with angle brackets).
pub fn dataset_json(questions: &[GoldQuestion]) -> String {
    let items: Vec<Value> = questions
        .iter()
        .map(|q| {
            serde_json::json!({
                "id": q.id,
                "question": { "string": q.question },
                "entities": q.gold_entities.iter().map(|g| format!("<{g}>")).collect::<Vec<_>>(),
            })
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&serde_json::json!({ "questions": items })).expect("dataset serializes");
    s.push('\n');
    s
}

const COLUMNS: [&str; 10] =
    ["detector", "embedding", "mode", "precision", "recall", "f1", "micro_precision", "micro_recall", "micro_f1", "errors"];

fn row_cells(row: &EvalRow) -> [String; 10] {
    [
        row.detector.to_string(),
        row.embedding.map_or_else(|| "-".to_string(), |k| k.as_str().to_string()),
        row.mode.as_str().to_string(),
        format_distance(row.macro_avg.precision),
        format_distance(row.macro_avg.recall),
        format_distance(row.macro_avg.f1),
        format_distance(row.micro_avg.precision),
        format_distance(row.micro_avg.recall),
        format_distance(row.micro_avg.f1),
        row.errors.to_string(),
    ]
}

/// Aligned text table headed by a note on averaging.
pub fn report_table(report: &EvalReport) -> String {
    let rows: Vec<[String; 10]> = report.rows.iter().map(row_cells).collect();
    let widths: Vec<usize> =
        (0..COLUMNS.len()).map(|c| rows.iter().map(|r| r[c].len()).chain([COLUMNS[c].len()]).max().unwrap_or(0)).collect();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {} questions ({} with empty gold). precision/recall/f1 are macro-averaged: per question, then the mean. micro_* pool counts over all questions.",
        report.dataset_size, report.empty_gold
    );
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i < 3 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let _ = writeln!(out, "{}", line(&mut COLUMNS.iter().copied()));
    for r in &rows {
        let _ = writeln!(out, "{}", line(&mut r.iter().map(String::as_str)));
    }
    out
}

pub fn report_csv(report: &EvalReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS).expect("in-memory write");
    for row in &report.rows {
        w.write_record(row_cells(row)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

#[derive(Debug, thiserror::Error)]
pub enum TsvError {
    #[error(transparent)]
    File(#[from] FileError),
    #[error("line {line}: {reason}")]
    Line { line: u64, reason: String },
    #[error("field contains a tab or newline: {0:?}")]
    Unrepresentable(String),
}

fn tsv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .flexible(true)
        .quoting(false)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

/// `question<TAB>positive-uri[<TAB>negative-uri]`, `#` comments allowed.
pub fn parse_training_tsv(text: &str) -> Result<Vec<TrainingExample>, TsvError> {
    let mut out = Vec::new();
    for rec in tsv_reader(text).records() {
        let rec = rec.map_err(|e| TsvError::Line { line: e.position().map_or(0, |p| p.line()), reason: e.to_string() })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).map(str::trim).filter(|s| !s.is_empty());
        if rec.len() == 1 && field(0).is_none() {
            continue;
        }
        if !(2..=3).contains(&rec.len()) {
            return Err(TsvError::Line { line, reason: format!("expected 2 or 3 fields, found {}", rec.len()) });
        }
        let question = field(0).ok_or_else(|| TsvError::Line { line, reason: "empty question".into() })?;
        let positive = field(1).ok_or_else(|| TsvError::Line { line, reason: "empty positive".into() })?;
        out.push(TrainingExample {
            question: question.to_string(),
            positive: strip_angles(positive).to_string(),
            negative: field(2).map(|n| strip_angles(n).to_string()),
        });
    }
    Ok(out)
}

pub fn load_training_tsv(path: &Path) -> Result<Vec<TrainingExample>, TsvError> {
    parse_training_tsv(&crate::io::read_text(path)?)
}

pub fn training_tsv(examples: &[TrainingExample]) -> Result<String, TsvError> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .quote_style(csv::QuoteStyle::Never)
        .flexible(true)
        .from_writer(Vec::new());
    for e in examples {
        let mut fields = vec![e.question.as_str(), e.positive.as_str()];
        fields.extend(e.negative.as_deref());
        if let Some(bad) = fields.iter().find(|f| f.contains(['\t', '\n', '\r'])) {
            return Err(TsvError::Unrepresentable(bad.to_string()));
        }
        w.write_record(&fields).expect("in-memory write");
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = r#"{"questions": [
        {"id": "q1", "question": {"string": "Who wrote 'Attention is all you need'?"}, "entities": ["<https://dblp.org/rec/conf/nips/VaswaniSPUJGKP17>"]},
        {"id": "q2", "question": {"string": "Which papers did Ashish Vaswani publish?"}, "entities": ["<https://dblp.org/pid/v/AshishVaswani>"]},
        {"id": "q3", "question": {"string": "Where was it published?"}, "entities": []}
    ]}"#;

    #[test]
    fn loads_fixture_verbatim() {
        let qs = parse_dataset(FIXTURE, &DatasetFields::default(), "fixture").unwrap();
        assert_eq!(qs.len(), 3);
        assert_eq!(qs[0].id, "q1");
        assert_eq!(qs[0].question, "Who wrote 'Attention is all you need'?");
        assert_eq!(qs[1].gold_entities, BTreeSet::from(["https://dblp.org/pid/v/AshishVaswani".to_string()]));
        assert!(qs[2].gold_entities.is_empty());
        assert_eq!(parse_dataset(&dataset_json(&qs), &DatasetFields::default(), "x").unwrap(), qs);
    }

    #[test]
    fn schema_errors_point_at_the_element() {
        let text = r#"{"questions": [{"id": "a", "question": "x", "entities": []}, {"id": "b", "question": "y"}]}"#;
        match parse_dataset(text, &DatasetFields::default(), "f") {
            Err(LoadError::Schema { pointer, .. }) => assert_eq!(pointer, "/questions/1/entities"),
            other => panic!("{other:?}"),
        }
        let dup = r#"[{"id": "q1", "question": "x", "entities": []}, {"id": "q1", "question": "y", "entities": []}]"#;
        assert!(matches!(parse_dataset(dup, &DatasetFields::default(), "f"), Err(LoadError::Dataset(DatasetError::DuplicateId(id))) if id == "q1"));
        assert!(matches!(parse_dataset(r#"{"questions": []}"#, &DatasetFields::default(), "f"), Err(LoadError::Schema { .. })));
        assert!(matches!(parse_dataset("[1,", &DatasetFields::default(), "f"), Err(LoadError::Json { .. })));
    }

    #[test]
    fn custom_field_mapping() {
        let fields = DatasetFields { questions: "data.items".into(), id: "qid".into(), question: "text".into(), gold: "gold".into() };
        let text = r#"{"data": {"items": [{"qid": 7, "text": "q", "gold": ["e"]}]}}"#;
        let qs = parse_dataset(text, &fields, "f").unwrap();
        assert_eq!(qs[0].id, "7");
    }

    #[test]
    fn training_tsv_round_trip() {
        let examples = vec![
            TrainingExample { question: "Who wrote \"X\"?".into(), positive: "u1".into(), negative: None },
            TrainingExample { question: "Q two".into(), positive: "u2".into(), negative: Some("u3".into()) },
        ];
        let text = training_tsv(&examples).unwrap();
        assert_eq!(parse_training_tsv(&format!("# comment\n{text}\n")).unwrap(), examples);
        assert!(parse_training_tsv("only one field\n").is_err());
        assert!(training_tsv(&[TrainingExample { question: "a\tb".into(), positive: "u".into(), negative: None }]).is_err());
    }
}
