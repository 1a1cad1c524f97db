//! Index time series, the Chow structural-break test, and term trends with
//! their cross-source correlation.

mod series;
pub mod special;
mod stats;
mod trend;

use thiserror::Error;

pub use series::{index_series, IndexSeries, IndexWeighting, SeriesPoint};
pub use stats::{chow_test, format_p_value, ols_fit, pearson, BreakTestResult, OlsFit, CHOW_K};
pub use trend::{pairwise_correlations, term_trend, Period, TrendTable};

#[derive(Debug, Error, PartialEq)]
pub enum BreakError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("series lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("x values are all equal")]
    DegenerateX,
    #[error("segment {segment} has {got} points, at least {required} required")]
    SegmentTooShort { segment: u8, got: usize, required: usize },
    #[error("correlation undefined")]
    CorrelationUndefined,
    #[error("term `{0}` is not in the lexicon")]
    UnknownTerm(String),
    #[error("need at least 3 windows, got {0}")]
    TooFewWindows(usize),
    #[error("windows out of order: {later} does not start after {earlier}")]
    WindowOrder { earlier: String, later: String },
    #[error("unknown {what} `{value}`")]
    UnknownOption { what: &'static str, value: String },
}
