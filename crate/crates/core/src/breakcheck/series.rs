//! Mean CI/NI time series over consecutive windows.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::BreakError;
use crate::corpus::{window_filter, Corpus, TimeWindow};
use crate::lexicon::TermLexicon;
use crate::pipeline::{analyze_window, PipelineConfig, WindowAnalysis};
use crate::transition::transition_report;

/// How per-cluster indices are aggregated into one point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexWeighting {
    #[default]
    Mean,
    /// Weighted by `t+1` cluster size.
    SizeWeighted,
}

impl FromStr for IndexWeighting {
    type Err = BreakError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(IndexWeighting::Mean),
            "size_weighted" | "size-weighted" => Ok(IndexWeighting::SizeWeighted),
            other => Err(BreakError::UnknownOption {
                what: "weighting",
                value: other.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub window: TimeWindow,
    pub mean_ci: f64,
    pub mean_ni: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSeries {
    pub points: Vec<SeriesPoint>,
    pub description: String,
}

impl IndexSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ci(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean_ci).collect()
    }

    pub fn ni(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean_ni).collect()
    }

    /// Time index `0, 1, ...` used as the regressor.
    pub fn time_index(&self) -> Vec<f64> {
        (0..self.points.len()).map(|i| i as f64).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("window_start,window_end,mean_ci,mean_ni\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{:.6},{:.6}", p.window.start, p.window.end, p.mean_ci, p.mean_ni);
        }
        out
    }
}

/// One point per consecutive window pair, labelled with the later window.
pub fn index_series(
    corpus: &Corpus,
    lexicon: &TermLexicon,
    windows: &[TimeWindow],
    config: &PipelineConfig,
) -> crate::Result<IndexSeries> {
    if windows.len() < 3 {
        return Err(BreakError::TooFewWindows(windows.len()).into());
    }
    for w in windows {
        w.validate()?;
    }
    for pair in windows.windows(2) {
        if pair[1].start <= pair[0].start {
            return Err(BreakError::WindowOrder {
                earlier: pair[0].name(),
                later: pair[1].name(),
            }
            .into());
        }
    }
    let analyses: Vec<WindowAnalysis> = windows
        .iter()
        .map(|w| analyze_window(&window_filter(corpus, w), lexicon, w, config))
        .collect::<Result<_, _>>()?;
    let mut points = Vec::with_capacity(windows.len() - 1);
    for pair in analyses.windows(2) {
        let report = transition_report(&pair[0].partition, &pair[1].partition, config.measure, config.tau)?;
        let (mean_ci, mean_ni) = match config.weighting {
            IndexWeighting::Mean => (report.mean_ci(), report.mean_ni()),
            IndexWeighting::SizeWeighted => report.weighted_means(),
        };
        points.push(SeriesPoint {
            window: pair[1].window.clone(),
            mean_ci,
            mean_ni,
        });
    }
    Ok(IndexSeries {
        points,
        description: format!(
            "{} windows, top_n {}, {} of {} indices",
            windows.len(),
            config.top_n,
            match config.weighting {
                IndexWeighting::Mean => "mean",
                IndexWeighting::SizeWeighted => "size-weighted mean",
            },
            corpus.source_label()
        ),
    })
}
