//! Comparison of two clusterings taken at consecutive windows `t` and `t+1`.
//!
//! Rows of the similarity matrix are the clusters at `t`, columns the
//! clusters at `t+1`. With the default overlap-target measure
//! `S[i][j] = |V_i ∩ V_j| / |V_j|`, so a column sum is the fraction of the
//! later cluster's nodes already present at `t`. That column sum is the
//! Convergence Index of the later cluster; the Novelty Index is its
//! complement.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::community::{ClusterLabel, Partition};

/// Guard for the floating-point sum of fractions in a column.
const ROUNDING_GUARD: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum TransitionError {
    #[error("cluster {cluster} at {side} is empty")]
    EmptyCluster { side: &'static str, cluster: usize },
    #[error("indices defined only for overlap_target")]
    IndicesNeedOverlapTarget,
    #[error("threshold tau = {0} is outside (0, 1)")]
    BadThreshold(f64),
    #[error("label list for {side} has {got} entries, expected {expected}")]
    LabelCount {
        side: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("unknown similarity measure `{0}` (expected overlap_target or jaccard)")]
    UnknownMeasure(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityMeasure {
    /// `|∩| / |V_j^{t+1}|`
    #[default]
    OverlapTarget,
    /// `|∩| / |∪|`
    Jaccard,
}

impl FromStr for SimilarityMeasure {
    type Err = TransitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "overlap_target" | "overlap-target" => Ok(SimilarityMeasure::OverlapTarget),
            "jaccard" => Ok(SimilarityMeasure::Jaccard),
            other => Err(TransitionError::UnknownMeasure(other.into())),
        }
    }
}

impl std::fmt::Display for SimilarityMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SimilarityMeasure::OverlapTarget => "overlap_target",
            SimilarityMeasure::Jaccard => "jaccard",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub measure: SimilarityMeasure,
    /// Cluster ids at `t`, in row order.
    pub rows: Vec<usize>,
    /// Cluster ids at `t+1`, in column order.
    pub cols: Vec<usize>,
    pub values: Vec<Vec<f64>>,
    /// `|V_i ∩ V_j|` for every row/column pair.
    pub overlap: Vec<Vec<usize>>,
    pub row_sizes: Vec<usize>,
    pub col_sizes: Vec<usize>,
}

impl SimilarityMatrix {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn col_count(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(move |r| r[j])
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        self.column(j).sum()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.values[i].iter().sum()
    }
}

pub fn similarity_matrix(
    t: &Partition,
    t1: &Partition,
    measure: SimilarityMeasure,
) -> Result<SimilarityMatrix, TransitionError> {
    similarity_from_clusters(&t.clusters(), &t1.clusters(), measure)
}

/// Similarity between explicit cluster member sets. Row/column ids are the
/// slice positions.
pub fn similarity_from_clusters(
    t: &[BTreeSet<String>],
    t1: &[BTreeSet<String>],
    measure: SimilarityMeasure,
) -> Result<SimilarityMatrix, TransitionError> {
    if let Some(i) = t.iter().position(BTreeSet::is_empty) {
        return Err(TransitionError::EmptyCluster { side: "t", cluster: i });
    }
    if let Some(j) = t1.iter().position(BTreeSet::is_empty) {
        return Err(TransitionError::EmptyCluster { side: "t+1", cluster: j });
    }
    let overlap: Vec<Vec<usize>> = t
        .iter()
        .map(|a| t1.iter().map(|b| a.intersection(b).count()).collect())
        .collect();
    let values = overlap
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &inter)| match measure {
                    SimilarityMeasure::OverlapTarget => inter as f64 / t1[j].len() as f64,
                    SimilarityMeasure::Jaccard => inter as f64 / (t[i].len() + t1[j].len() - inter) as f64,
                })
                .collect()
        })
        .collect();
    Ok(SimilarityMatrix {
        measure,
        rows: (0..t.len()).collect(),
        cols: (0..t1.len()).collect(),
        values,
        overlap,
        row_sizes: t.iter().map(BTreeSet::len).collect(),
        col_sizes: t1.iter().map(BTreeSet::len).collect(),
    })
}

/// Block matrix `[[0, S], [Sᵀ, 0]]` of the bipartite cluster network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiAdjacency {
    pub size_t: usize,
    pub size_t1: usize,
    pub matrix: Vec<Vec<f64>>,
}

pub fn biadjacency(s: &SimilarityMatrix) -> BiAdjacency {
    let (m, k) = (s.row_count(), s.col_count());
    let mut matrix = vec![vec![0.0; m + k]; m + k];
    for (i, row) in s.values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            matrix[i][m + j] = v;
            matrix[m + j][i] = v;
        }
    }
    BiAdjacency {
        size_t: m,
        size_t1: k,
        matrix,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterIndices {
    /// Convergence Index per `t+1` cluster.
    pub ci: Vec<f64>,
    /// Novelty Index per `t+1` cluster.
    pub ni: Vec<f64>,
}

pub fn indices(s: &SimilarityMatrix) -> Result<ClusterIndices, TransitionError> {
    if s.measure != SimilarityMeasure::OverlapTarget {
        return Err(TransitionError::IndicesNeedOverlapTarget);
    }
    let ci: Vec<f64> = (0..s.col_count())
        .map(|j| {
            let sum = s.column_sum(j);
            if sum > 1.0 && sum <= 1.0 + ROUNDING_GUARD {
                1.0
            } else {
                sum.clamp(0.0, 1.0)
            }
        })
        .collect();
    let ni = ci.iter().map(|c| 1.0 - c).collect();
    Ok(ClusterIndices { ci, ni })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Birth,
    Death,
    Merge,
    Split,
    Persist,
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EventKind::Birth => "birth",
            EventKind::Death => "death",
            EventKind::Merge => "merge",
            EventKind::Split => "split",
            EventKind::Persist => "persist",
        })
    }
}

/// One evolution event. `sources` are `t` clusters, `targets` are `t+1`
/// clusters, and `similarities` lists the supporting `S` entries in the order
/// of the varying side (sources for a merge, targets for a split).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub sources: Vec<usize>,
    pub targets: Vec<usize>,
    pub similarities: Vec<f64>,
}

/// Reads events off `S`: zero row → death, zero column → birth, two or more
/// entries `>= tau` in a column → merge, in a row → split, and a single
/// `>= tau` link whose row and column are not involved in a split or merge →
/// persist. Output order: deaths, births, merges, splits, persists.
pub fn classify_events(s: &SimilarityMatrix, tau: f64) -> Result<Vec<Event>, TransitionError> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(TransitionError::BadThreshold(tau));
    }
    let (m, k) = (s.row_count(), s.col_count());
    let mut events = Vec::new();
    for i in 0..m {
        if s.values[i].iter().all(|&v| v == 0.0) {
            events.push(Event {
                kind: EventKind::Death,
                sources: vec![i],
                targets: vec![],
                similarities: vec![],
            });
        }
    }
    for j in 0..k {
        if s.column(j).all(|v| v == 0.0) {
            events.push(Event {
                kind: EventKind::Birth,
                sources: vec![],
                targets: vec![j],
                similarities: vec![],
            });
        }
    }
    let mut merged = vec![false; k];
    for (j, flag) in merged.iter_mut().enumerate() {
        let strong: Vec<usize> = (0..m).filter(|&i| s.values[i][j] >= tau).collect();
        if strong.len() >= 2 {
            *flag = true;
            events.push(Event {
                kind: EventKind::Merge,
                similarities: strong.iter().map(|&i| s.values[i][j]).collect(),
                sources: strong,
                targets: vec![j],
            });
        }
    }
    let mut split = vec![false; m];
    for (i, flag) in split.iter_mut().enumerate() {
        let strong: Vec<usize> = (0..k).filter(|&j| s.values[i][j] >= tau).collect();
        if strong.len() >= 2 {
            *flag = true;
            events.push(Event {
                kind: EventKind::Split,
                similarities: strong.iter().map(|&j| s.values[i][j]).collect(),
                sources: vec![i],
                targets: strong,
            });
        }
    }
    for (i, row) in s.values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v >= tau && !split[i] && !merged[j] {
                events.push(Event {
                    kind: EventKind::Persist,
                    sources: vec![i],
                    targets: vec![j],
                    similarities: vec![v],
                });
            }
        }
    }
    Ok(events)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub tau: f64,
    pub similarity: SimilarityMatrix,
    /// CI per `t+1` cluster, always computed from the overlap-target matrix.
    pub ci: Vec<f64>,
    pub ni: Vec<f64>,
    pub events: Vec<Event>,
}

impl TransitionReport {
    pub fn mean_ci(&self) -> f64 {
        mean(&self.ci)
    }

    pub fn mean_ni(&self) -> f64 {
        mean(&self.ni)
    }

    /// Means weighted by `t+1` cluster size.
    pub fn weighted_means(&self) -> (f64, f64) {
        let sizes = &self.similarity.col_sizes;
        let total: usize = sizes.iter().sum();
        if total == 0 {
            return (f64::NAN, f64::NAN);
        }
        let w = |v: &[f64]| v.iter().zip(sizes).map(|(x, &s)| x * s as f64).sum::<f64>() / total as f64;
        (w(&self.ci), w(&self.ni))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Builds the full report. Events use `measure`; CI/NI always use the
/// overlap-target matrix.
pub fn transition_report(
    t: &Partition,
    t1: &Partition,
    measure: SimilarityMeasure,
    tau: f64,
) -> Result<TransitionReport, TransitionError> {
    let ct = t.clusters();
    let ct1 = t1.clusters();
    report_from_clusters(&ct, &ct1, measure, tau)
}

pub fn report_from_clusters(
    t: &[BTreeSet<String>],
    t1: &[BTreeSet<String>],
    measure: SimilarityMeasure,
    tau: f64,
) -> Result<TransitionReport, TransitionError> {
    let overlap_target = similarity_from_clusters(t, t1, SimilarityMeasure::OverlapTarget)?;
    let ClusterIndices { ci, ni } = indices(&overlap_target)?;
    let similarity = match measure {
        SimilarityMeasure::OverlapTarget => overlap_target,
        SimilarityMeasure::Jaccard => similarity_from_clusters(t, t1, measure)?,
    };
    let events = classify_events(&similarity, tau)?;
    Ok(TransitionReport {
        tau,
        similarity,
        ci,
        ni,
        events,
    })
}

fn label_of(labels: &[ClusterLabel], id: usize) -> &str {
    labels
        .iter()
        .find(|l| l.cluster == id)
        .map(|l| l.suggested_label.as_str())
        .unwrap_or("")
}

fn check_labels(labels: &[ClusterLabel], expected: usize, side: &'static str) -> Result<(), TransitionError> {
    if labels.len() != expected {
        return Err(TransitionError::LabelCount {
            side,
            got: labels.len(),
            expected,
        });
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Similarity matrix as CSV: header holds the `t+1` labels, the first
/// column the `t` labels, cells with six decimals.
pub fn similarity_csv(
    s: &SimilarityMatrix,
    labels_t: &[ClusterLabel],
    labels_t1: &[ClusterLabel],
) -> Result<String, TransitionError> {
    check_labels(labels_t, s.row_count(), "t")?;
    check_labels(labels_t1, s.col_count(), "t+1")?;
    let mut out = String::from("cluster");
    for &j in &s.cols {
        out.push(',');
        out.push_str(&csv_field(label_of(labels_t1, j)));
    }
    out.push('\n');
    for (i, row) in s.values.iter().enumerate() {
        out.push_str(&csv_field(label_of(labels_t, s.rows[i])));
        for v in row {
            let _ = write!(out, ",{v:.6}");
        }
        out.push('\n');
    }
    Ok(out)
}

/// Flow rows `(source, target, |V_i ∩ V_j|)` for every overlapping pair,
/// sorted by source cluster size, then flow (both descending).
pub fn alluvial_rows(report: &TransitionReport) -> Vec<(usize, usize, usize)> {
    let s = &report.similarity;
    let mut rows = Vec::new();
    for (i, row) in s.overlap.iter().enumerate() {
        for (j, &flow) in row.iter().enumerate() {
            if flow > 0 {
                rows.push((i, j, flow));
            }
        }
    }
    rows.sort_by(|a, b| {
        s.row_sizes[b.0]
            .cmp(&s.row_sizes[a.0])
            .then(b.2.cmp(&a.2))
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    rows
}

pub fn alluvial_csv(
    report: &TransitionReport,
    labels_t: &[ClusterLabel],
    labels_t1: &[ClusterLabel],
) -> Result<String, TransitionError> {
    let s = &report.similarity;
    check_labels(labels_t, s.row_count(), "t")?;
    check_labels(labels_t1, s.col_count(), "t+1")?;
    let mut out = String::from("source_cluster,target_cluster,flow_weight,source_label,target_label\n");
    for (i, j, flow) in alluvial_rows(report) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.rows[i],
            s.cols[j],
            flow,
            csv_field(label_of(labels_t, s.rows[i])),
            csv_field(label_of(labels_t1, s.cols[j]))
        );
    }
    Ok(out)
}

pub fn alluvial_export(
    report: &TransitionReport,
    labels_t: &[ClusterLabel],
    labels_t1: &[ClusterLabel],
    path: &Path,
) -> Result<(), TransitionError> {
    let csv = alluvial_csv(report, labels_t, labels_t1)?;
    crate::fsutil::write_atomic(path, csv.as_bytes()).map_err(|e| TransitionError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
