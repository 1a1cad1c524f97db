//! Technology term lexicon.
//!
//! A lexicon file is a JSON array of `{"canonical": ..., "patterns": [...]}`
//! entries. Patterns use the `regex` crate dialect limited to features shared
//! by mainstream engines: character classes, groups, alternation, optional
//! and repetition operators. Backreferences and lookaround are not available.
//!
//! Each pattern is compiled case-insensitively and anchored so that it only
//! matches whole words: the match must be preceded by the start of text or a
//! non-word character, and followed by a non-word character or the end of
//! text. `ai` therefore does not fire on `maintain`, while `c\+\+` still
//! matches in `c++ code`.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use regex::{Regex, RegexSet, RegexSetBuilder};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{normalize_tag, Document};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {message}")]
    Read { path: String, message: String },
    #[error("entry `{canonical}`: pattern `{pattern}` does not compile: {message}")]
    BadPattern {
        canonical: String,
        pattern: String,
        message: String,
    },
    #[error("entry `{canonical}`: pattern `{pattern}` does not match its own canonical form")]
    SelfTest { canonical: String, pattern: String },
    #[error("entry #{index}: {message}")]
    InvalidEntry { index: usize, message: String },
    #[error("duplicate canonical term `{0}`")]
    DuplicateCanonical(String),
    #[error("unknown term `{0}`")]
    UnknownTerm(String),
}

/// One lexicon entry as it appears in the lexicon file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermPattern {
    pub canonical: String,
    pub patterns: Vec<String>,
}

impl TermPattern {
    pub fn new(canonical: impl Into<String>, patterns: impl IntoIterator<Item = impl Into<String>>) -> Self {
        TermPattern {
            canonical: canonical.into(),
            patterns: patterns.into_iter().map(Into::into).collect(),
        }
    }

    /// An entry whose only pattern is the escaped canonical form.
    pub fn literal(canonical: &str) -> Self {
        TermPattern::new(canonical, [regex::escape(canonical)])
    }
}

/// Compiled, immutable lexicon.
#[derive(Debug, Clone)]
pub struct TermLexicon {
    entries: Vec<TermPattern>,
    matchers: Vec<Vec<Regex>>,
    set: RegexSet,
    /// Entry index for each pattern in `set`.
    owner: Vec<usize>,
    index: HashMap<String, usize>,
}

impl Default for TermLexicon {
    fn default() -> Self {
        TermLexicon::empty()
    }
}

fn anchored(pattern: &str) -> String {
    format!(r"(?i)(?:^|\W)(?:{pattern})(?:\W|$)")
}

impl TermLexicon {
    pub fn empty() -> Self {
        TermLexicon {
            entries: Vec::new(),
            matchers: Vec::new(),
            set: RegexSet::empty(),
            owner: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn compile(entries: Vec<TermPattern>) -> Result<Self, LexiconError> {
        let mut index_of = HashMap::new();
        let mut normalized = Vec::with_capacity(entries.len());
        let mut matchers = Vec::with_capacity(entries.len());
        let mut sources = Vec::new();
        let mut owner = Vec::new();
        for (index, entry) in entries.into_iter().enumerate() {
            let canonical = normalize_tag(&entry.canonical);
            if canonical.is_empty() {
                return Err(LexiconError::InvalidEntry {
                    index,
                    message: "empty canonical term".into(),
                });
            }
            if entry.patterns.is_empty() {
                return Err(LexiconError::InvalidEntry {
                    index,
                    message: format!("`{canonical}` has no patterns"),
                });
            }
            if index_of.insert(canonical.clone(), normalized.len()).is_some() {
                return Err(LexiconError::DuplicateCanonical(canonical));
            }
            let mut compiled = Vec::with_capacity(entry.patterns.len());
            for pattern in &entry.patterns {
                let src = anchored(pattern);
                let re = Regex::new(&src).map_err(|e| LexiconError::BadPattern {
                    canonical: canonical.clone(),
                    pattern: pattern.clone(),
                    message: e.to_string(),
                })?;
                if !re.is_match(&canonical) {
                    return Err(LexiconError::SelfTest {
                        canonical: canonical.clone(),
                        pattern: pattern.clone(),
                    });
                }
                compiled.push(re);
                sources.push(src);
                owner.push(normalized.len());
            }
            matchers.push(compiled);
            normalized.push(TermPattern {
                canonical,
                patterns: entry.patterns,
            });
        }
        let set = RegexSetBuilder::new(&sources)
            .size_limit(1 << 26)
            .build()
            .map_err(|e| LexiconError::BadPattern {
                canonical: "<lexicon>".into(),
                pattern: "<combined set>".into(),
                message: e.to_string(),
            })?;
        Ok(TermLexicon {
            entries: normalized,
            matchers,
            set,
            owner,
            index: index_of,
        })
    }

    pub fn from_json(json: &str) -> Result<Self, LexiconError> {
        let entries: Vec<TermPattern> = serde_json::from_str(json).map_err(|e| LexiconError::Read {
            path: "<json>".into(),
            message: e.to_string(),
        })?;
        TermLexicon::compile(entries)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("lexicon entries serialize")
    }

    pub fn entries(&self) -> &[TermPattern] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, canonical: &str) -> bool {
        self.position(canonical).is_some()
    }

    fn position(&self, canonical: &str) -> Option<usize> {
        self.index.get(canonical).copied()
    }

    /// Canonical terms with at least one pattern matching `text`.
    pub fn terms_in(&self, text: &str) -> BTreeSet<String> {
        if text.is_empty() || self.entries.is_empty() {
            return BTreeSet::new();
        }
        let lowered = text.to_lowercase();
        self.set
            .matches(&lowered)
            .into_iter()
            .map(|i| self.entries[self.owner[i]].canonical.clone())
            .collect()
    }

    /// Whether `canonical` matches somewhere in `text`.
    pub fn term_matches(&self, canonical: &str, text: &str) -> Result<bool, LexiconError> {
        let idx = self
            .position(canonical)
            .ok_or_else(|| LexiconError::UnknownTerm(canonical.to_string()))?;
        let lowered = text.to_lowercase();
        Ok(self.matchers[idx].iter().any(|re| re.is_match(&lowered)))
    }
}

pub fn compile_lexicon(path: &Path) -> Result<TermLexicon, LexiconError> {
    let json = std::fs::read_to_string(path).map_err(|e| LexiconError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let entries: Vec<TermPattern> = serde_json::from_str(&json).map_err(|e| LexiconError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    TermLexicon::compile(entries)
}

/// Set of canonical terms found in the document's text.
pub fn extract_terms(doc: &Document, lexicon: &TermLexicon) -> BTreeSet<String> {
    lexicon.terms_in(&doc.text)
}
