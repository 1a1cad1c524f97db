//! Per-period document counts of one lexicon term across several sources.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::BreakError;
use crate::cograph::{document_items, ItemField};
use crate::corpus::Corpus;
use crate::lexicon::TermLexicon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Period {
    #[default]
    Year,
    Quarter,
}

impl FromStr for Period {
    type Err = BreakError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "year" => Ok(Period::Year),
            "quarter" => Ok(Period::Quarter),
            other => Err(BreakError::UnknownOption {
                what: "period",
                value: other.into(),
            }),
        }
    }
}

impl Period {
    /// Ordinal of the period containing `date`; consecutive periods differ by one.
    fn ordinal(self, date: NaiveDate) -> i64 {
        match self {
            Period::Year => date.year() as i64,
            Period::Quarter => date.year() as i64 * 4 + (date.month0() / 3) as i64,
        }
    }

    fn label(self, ordinal: i64) -> String {
        match self {
            Period::Year => ordinal.to_string(),
            Period::Quarter => format!("{}-Q{}", ordinal.div_euclid(4), ordinal.rem_euclid(4) + 1),
        }
    }
}

/// `counts[s][p]` is the number of documents of source `s` in period `p`
/// mentioning the term. Periods run contiguously from the earliest to the
/// latest document date over all sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendTable {
    pub term: String,
    pub periods: Vec<String>,
    pub sources: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl TrendTable {
    pub fn series(&self, source: usize) -> Vec<f64> {
        self.counts[source].iter().map(|&c| c as f64).collect()
    }

    /// Rows `period,source,count`, without header.
    pub fn write_rows(&self, out: &mut String) {
        for (p, period) in self.periods.iter().enumerate() {
            for (s, source) in self.sources.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{}", self.term, period, source, self.counts[s][p]);
            }
        }
    }
}

pub fn term_trend(
    corpora: &[(String, Corpus)],
    lexicon: &TermLexicon,
    term: &str,
    period: Period,
    field: ItemField,
) -> Result<TrendTable, BreakError> {
    if !lexicon.contains(term) {
        return Err(BreakError::UnknownTerm(term.to_string()));
    }
    let dates = corpora.iter().flat_map(|(_, c)| c.documents().iter().map(|d| d.date));
    let (lo, hi) = match (dates.clone().min(), dates.max()) {
        (Some(lo), Some(hi)) => (period.ordinal(lo), period.ordinal(hi)),
        _ => {
            return Ok(TrendTable {
                term: term.into(),
                periods: vec![],
                sources: corpora.iter().map(|(l, _)| l.clone()).collect(),
                counts: vec![vec![]; corpora.len()],
            })
        }
    };
    let width = (hi - lo + 1) as usize;
    let mut counts = Vec::with_capacity(corpora.len());
    for (_, corpus) in corpora {
        let mut row = vec![0u64; width];
        for doc in corpus.documents() {
            if document_items(doc, lexicon, field).contains_key(term) {
                row[(period.ordinal(doc.date) - lo) as usize] += 1;
            }
        }
        counts.push(row);
    }
    Ok(TrendTable {
        term: term.into(),
        periods: (lo..=hi).map(|o| period.label(o)).collect(),
        sources: corpora.iter().map(|(l, _)| l.clone()).collect(),
        counts,
    })
}

/// Pearson r for every source pair `(a, b)` with `a < b`.
pub fn pairwise_correlations(table: &TrendTable) -> BTreeMap<(usize, usize), Result<f64, BreakError>> {
    let mut out = BTreeMap::new();
    for a in 0..table.sources.len() {
        for b in a + 1..table.sources.len() {
            out.insert((a, b), super::pearson(&table.series(a), &table.series(b)));
        }
    }
    out
}
