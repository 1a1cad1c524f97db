//! Document collections and time windows.
//!
//! Two on-disk formats are accepted:
//!
//! - JSONL: one object per line with `id`, `date` (`YYYY-MM-DD`), `text`
//!   and `tags` (array of strings).
//! - CSV: header `id,date,text,tags`, tags separated by `;`, RFC-4180
//!   quoting.
//!
//! Dates carrying a time component (`2020-02-01T10:00:00Z`) are truncated to
//! the day. Tags are case-folded, trimmed, have internal whitespace collapsed
//! and are deduplicated keeping first occurrence order.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: field `{field}`: {message}")]
    Malformed {
        line: u64,
        field: String,
        message: String,
    },
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("unknown corpus format `{0}` (expected jsonl or csv)")]
    UnknownFormat(String),
}

/// One dated article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(with = "iso_date")]
    pub date: NaiveDate,
    pub text: String,
    pub tags: Vec<String>,
}

impl Document {
    /// Builds a document, normalizing its tags.
    pub fn new(
        id: impl Into<String>,
        date: NaiveDate,
        text: impl Into<String>,
        tags: impl IntoIterator<Item = impl AsRef<str>>,
    ) -> Self {
        Document {
            id: id.into(),
            date,
            text: text.into(),
            tags: normalize_tags(tags),
        }
    }
}

/// Half-open date interval `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeWindow {
    #[serde(with = "iso_date")]
    pub start: NaiveDate,
    #[serde(with = "iso_date")]
    pub end: NaiveDate,
    #[serde(default)]
    pub label: String,
}

impl TimeWindow {
    pub fn new(start: NaiveDate, end: NaiveDate, label: impl Into<String>) -> Result<Self, CorpusError> {
        let w = TimeWindow {
            start,
            end,
            label: label.into(),
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.start >= self.end {
            return Err(CorpusError::InvalidWindow(format!(
                "start {} is not before end {}",
                self.start, self.end
            )));
        }
        Ok(())
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date < self.end
    }

    /// Label if set, `START:END` otherwise.
    pub fn name(&self) -> String {
        if self.label.is_empty() {
            format!("{}:{}", self.start, self.end)
        } else {
            self.label.clone()
        }
    }
}

impl fmt::Display for TimeWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.label.is_empty() {
            write!(f, "[{}, {})", self.start, self.end)
        } else {
            write!(f, "{} [{}, {})", self.label, self.start, self.end)
        }
    }
}

/// Parses `START:END` or `START:END:LABEL`.
impl FromStr for TimeWindow {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.splitn(3, ':');
        let (Some(a), Some(b)) = (parts.next(), parts.next()) else {
            return Err(CorpusError::InvalidWindow(format!("`{s}` is not START:END")));
        };
        let parse = |v: &str| {
            parse_date(v).ok_or_else(|| CorpusError::InvalidWindow(format!("`{v}` is not a YYYY-MM-DD date")))
        };
        let label = parts.next().unwrap_or("");
        TimeWindow::new(parse(a)?, parse(b)?, label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guesses from the file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    documents: Vec<Document>,
    source_label: String,
}

impl Corpus {
    pub fn new(documents: Vec<Document>, source_label: impl Into<String>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(documents.len());
        for d in &documents {
            if !seen.insert(d.id.as_str()) {
                return Err(CorpusError::DuplicateId(d.id.clone()));
            }
        }
        Ok(Corpus {
            documents,
            source_label: source_label.into(),
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Serializes as JSONL, one document per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for d in &self.documents {
            serde_json::to_writer(&mut w, d)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Read {
        path: path.display().to_string(),
        source,
    })?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    match format {
        CorpusFormat::Jsonl => read_jsonl(BufReader::new(file), label),
        CorpusFormat::Csv => read_csv(file, label),
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    date: Option<String>,
    text: Option<String>,
    tags: Option<Vec<String>>,
}

#[derive(Deserialize)]
struct RawCsvRecord {
    id: Option<String>,
    date: Option<String>,
    text: Option<String>,
    tags: Option<String>,
}

pub fn read_jsonl<R: BufRead>(reader: R, source_label: impl Into<String>) -> Result<Corpus, CorpusError> {
    let mut docs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line.map_err(|e| CorpusError::Malformed {
            line: line_no,
            field: "record".into(),
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: line_no,
            field: json_error_field(&e),
            message: e.to_string(),
        })?;
        docs.push(finish_record(line_no, raw.id, raw.date, raw.text, raw.tags)?);
    }
    Corpus::new(docs, source_label)
}

pub fn read_csv<R: Read>(reader: R, source_label: impl Into<String>) -> Result<Corpus, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CorpusError::Malformed {
            line: 1,
            field: "header".into(),
            message: e.to_string(),
        })?
        .clone();
    let mut docs = Vec::new();
    for result in rdr.records() {
        let record = result.map_err(|e| CorpusError::Malformed {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            field: "record".into(),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let raw: RawCsvRecord = record.deserialize(Some(&headers)).map_err(|e| {
            let field = match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err.field(),
                _ => None,
            }
            .and_then(|i| headers.get(i as usize))
                .unwrap_or("record")
                .to_string();
            CorpusError::Malformed {
                line,
                field,
                message: e.to_string(),
            }
        })?;
        let tags = raw.tags.map(|t| t.split(';').map(str::to_string).collect::<Vec<_>>());
        docs.push(finish_record(line, raw.id, raw.date, raw.text, tags)?);
    }
    Corpus::new(docs, source_label)
}

fn json_error_field(e: &serde_json::Error) -> String {
    // serde_json reports type errors as "invalid type: ..., expected ..." with
    // no field path; fall back to naming the whole record.
    let msg = e.to_string();
    for f in ["id", "date", "text", "tags"] {
        if msg.contains(&format!("`{f}`")) {
            return f.to_string();
        }
    }
    "record".into()
}

fn finish_record(
    line: u64,
    id: Option<String>,
    date: Option<String>,
    text: Option<String>,
    tags: Option<Vec<String>>,
) -> Result<Document, CorpusError> {
    let malformed = |field: &str, message: &str| CorpusError::Malformed {
        line,
        field: field.into(),
        message: message.into(),
    };
    let id = id.filter(|s| !s.trim().is_empty()).ok_or_else(|| malformed("id", "missing or empty"))?;
    let date_raw = date.ok_or_else(|| malformed("date", "missing"))?;
    let date = parse_date(&date_raw)
        .ok_or_else(|| malformed("date", &format!("`{date_raw}` is not an ISO-8601 calendar date")))?;
    if text.is_none() && tags.is_none() {
        return Err(malformed("text/tags", "record has neither text nor tags"));
    }
    Ok(Document::new(id, date, text.unwrap_or_default(), tags.unwrap_or_default()))
}

/// Parses `YYYY-MM-DD`, ignoring a trailing `T...` or ` ...` time component.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    let day = match s.find(['T', 't', ' ']) {
        Some(i) => &s[..i],
        None => s,
    };
    NaiveDate::parse_from_str(day, "%Y-%m-%d").ok()
}

/// Case-folds, trims and collapses internal whitespace.
pub fn normalize_tag(tag: &str) -> String {
    tag.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

fn normalize_tags(tags: impl IntoIterator<Item = impl AsRef<str>>) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for t in tags {
        let n = normalize_tag(t.as_ref());
        if !n.is_empty() && seen.insert(n.clone()) {
            out.push(n);
        }
    }
    out
}

/// Documents with `window.start <= date < window.end`, in original order.
pub fn window_filter(corpus: &Corpus, window: &TimeWindow) -> Corpus {
    Corpus {
        documents: corpus
            .documents
            .iter()
            .filter(|d| window.contains(d.date))
            .cloned()
            .collect(),
        source_label: corpus.source_label.clone(),
    }
}

mod iso_date {
    use chrono::NaiveDate;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &NaiveDate, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&d.format("%Y-%m-%d"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDate, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_date(&s).ok_or_else(|| serde::de::Error::custom(format!("`{s}` is not a YYYY-MM-DD date")))
    }
}
