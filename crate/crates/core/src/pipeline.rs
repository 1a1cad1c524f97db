//! Configuration and the end-to-end commands behind the CLI.
//!
//! Each `run_*` function loads its inputs, writes its outputs atomically
//! under the configured output directory and returns what it computed, so
//! the commands compose as library calls as well.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::breakcheck::{
    chow_test, index_series, pairwise_correlations, term_trend, BreakTestResult, IndexSeries,
    IndexWeighting, Period, TrendTable,
};
use crate::cograph::{self, build_cooccurrence, top_n_filter, CoGraph, ItemField, PairMode};
use crate::community::{louvain_with, suggest_labels, ClusterLabel, LouvainConfig, Partition};
use crate::corpus::{load_corpus, window_filter, Corpus, CorpusFormat, TimeWindow};
use crate::lexicon::{compile_lexicon, TermLexicon, TermPattern};
use crate::synth::{generate, PlantSpec};
use crate::transition::{alluvial_csv, similarity_csv, transition_report, EventKind, SimilarityMeasure, TransitionReport};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub lexicon: Option<PathBuf>,
    pub field: ItemField,
    pub pairs: PairMode,
    pub top_n: usize,
    pub measure: SimilarityMeasure,
    pub tau: f64,
    pub resolution: f64,
    pub weighting: IndexWeighting,
    pub out: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            lexicon: None,
            field: ItemField::Both,
            pairs: PairMode::All,
            top_n: 100,
            measure: SimilarityMeasure::OverlapTarget,
            tau: 0.1,
            resolution: 1.0,
            weighting: IndexWeighting::Mean,
            out: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_n == 0 {
            return Err(Error::Config("top_n must be at least 1".into()));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Config(format!("tau = {} is outside (0, 1)", self.tau)));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::Config(format!("resolution = {} must be positive", self.resolution)));
        }
        Ok(())
    }

    /// Defaults overridden by the keys present in `file`.
    pub fn from_file(file: &ConfigFile) -> Self {
        let d = PipelineConfig::default();
        PipelineConfig {
            lexicon: file.lexicon.clone().or(d.lexicon),
            field: file.field.unwrap_or(d.field),
            pairs: file.pairs.unwrap_or(d.pairs),
            top_n: file.top_n.unwrap_or(d.top_n),
            measure: file.measure.unwrap_or(d.measure),
            tau: file.tau.unwrap_or(d.tau),
            resolution: file.resolution.unwrap_or(d.resolution),
            weighting: file.weighting.unwrap_or(d.weighting),
            out: file.out.clone().unwrap_or(d.out),
        }
    }

    pub fn load_lexicon(&self) -> Result<TermLexicon> {
        match &self.lexicon {
            Some(path) => Ok(compile_lexicon(path)?),
            None => Ok(TermLexicon::empty()),
        }
    }
}

/// Flat key-value configuration file, JSON or TOML by extension. Every key
/// is optional and every key has a matching CLI flag.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub corpus: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub window_t: Option<String>,
    pub window_t1: Option<String>,
    pub windows: Option<PathBuf>,
    pub breakpoint: Option<usize>,
    pub seed: Option<u64>,
    pub spec: Option<PathBuf>,
    pub field: Option<ItemField>,
    pub pairs: Option<PairMode>,
    pub top_n: Option<usize>,
    pub measure: Option<SimilarityMeasure>,
    pub tau: Option<f64>,
    pub resolution: Option<f64>,
    pub weighting: Option<IndexWeighting>,
    pub period: Option<Period>,
    pub terms: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl ConfigFile {
    pub fn parse(text: &str, toml_format: bool) -> Result<Self> {
        if toml_format {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
        } else {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        Self::parse(&text, is_toml).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// Everything computed for one window.
#[derive(Debug, Clone)]
pub struct WindowAnalysis {
    pub window: TimeWindow,
    /// The filtered graph that was clustered.
    pub graph: CoGraph,
    pub partition: Partition,
    pub labels: Vec<ClusterLabel>,
}

/// Build, filter and cluster the documents of one window.
pub fn analyze_window(
    corpus: &Corpus,
    lexicon: &TermLexicon,
    window: &TimeWindow,
    config: &PipelineConfig,
) -> Result<WindowAnalysis> {
    if corpus.is_empty() {
        return Err(Error::Window {
            window: window.name(),
            reason: "no documents".into(),
        });
    }
    let graph = top_n_filter(&build_cooccurrence(corpus, lexicon, config.field, config.pairs), config.top_n);
    if graph.edge_count() == 0 {
        return Err(Error::Window {
            window: window.name(),
            reason: "co-occurrence graph has no edges".into(),
        });
    }
    let partition = louvain_with(
        &graph,
        &LouvainConfig {
            resolution: config.resolution,
            ..LouvainConfig::default()
        },
    )?;
    let labels = suggest_labels(&graph, &partition);
    Ok(WindowAnalysis {
        window: window.clone(),
        graph,
        partition,
        labels,
    })
}

fn load(path: &Path) -> Result<Corpus> {
    Ok(load_corpus(path, CorpusFormat::from_path(path))?)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    crate::fsutil::write_atomic(&path, contents.as_bytes()).map_err(|source| Error::Io { path, source })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_window(dir: &Path, suffix: &str, a: &WindowAnalysis) -> Result<()> {
    write(
        dir,
        &format!("graph_{suffix}.graphml"),
        &cograph::to_graphml(&a.graph, Some(a.partition.assignment())),
    )?;
    write(dir, &format!("graph_{suffix}.json"), &cograph::to_graph_json(&a.graph))?;
    write(dir, &format!("partition_{suffix}.json"), &a.partition.to_json())
}

#[derive(Debug, Clone, Serialize)]
struct CompareDocument<'a> {
    window_t: &'a TimeWindow,
    window_t1: &'a TimeWindow,
    labels_t: &'a [ClusterLabel],
    labels_t1: &'a [ClusterLabel],
    modularity_t: f64,
    modularity_t1: f64,
    #[serde(flatten)]
    report: &'a TransitionReport,
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub t: WindowAnalysis,
    pub t1: WindowAnalysis,
    pub report: TransitionReport,
    /// Event summary table, as printed by the CLI.
    pub summary: String,
}

/// Compares two windows of one corpus and writes graphs (GraphML and JSON),
/// partitions, the similarity matrix, the report and the alluvial flows.
pub fn run_compare(corpus_path: &Path, window_t: &TimeWindow, window_t1: &TimeWindow, config: &PipelineConfig) -> Result<CompareOutcome> {
    config.validate()?;
    window_t.validate()?;
    window_t1.validate()?;
    let corpus = load(corpus_path)?;
    let lexicon = config.load_lexicon()?;
    compare_corpus(&corpus, &lexicon, window_t, window_t1, config)
}

pub fn compare_corpus(
    corpus: &Corpus,
    lexicon: &TermLexicon,
    window_t: &TimeWindow,
    window_t1: &TimeWindow,
    config: &PipelineConfig,
) -> Result<CompareOutcome> {
    let t = analyze_window(&window_filter(corpus, window_t), lexicon, window_t, config)?;
    let t1 = analyze_window(&window_filter(corpus, window_t1), lexicon, window_t1, config)?;
    let report = transition_report(&t.partition, &t1.partition, config.measure, config.tau)?;

    let dir = &config.out;
    ensure_dir(dir)?;
    write_window(dir, "t", &t)?;
    write_window(dir, "t1", &t1)?;
    write(dir, "similarity.csv", &similarity_csv(&report.similarity, &t.labels, &t1.labels)?)?;
    write(dir, "alluvial.csv", &alluvial_csv(&report, &t.labels, &t1.labels)?)?;
    let doc = CompareDocument {
        window_t,
        window_t1,
        labels_t: &t.labels,
        labels_t1: &t1.labels,
        modularity_t: t.partition.modularity(),
        modularity_t1: t1.partition.modularity(),
        report: &report,
    };
    let mut json = serde_json::to_string_pretty(&doc).expect("report serializes");
    json.push('\n');
    write(dir, "report.json", &json)?;

    let summary = event_summary(&report, &t.labels, &t1.labels);
    Ok(CompareOutcome { t, t1, report, summary })
}

fn names(ids: &[usize], labels: &[ClusterLabel]) -> String {
    if ids.is_empty() {
        return "-".into();
    }
    ids.iter()
        .map(|&i| format!("{i}:{}", labels.get(i).map_or("", |l| l.suggested_label.as_str())))
        .collect::<Vec<_>>()
        .join(" + ")
}

/// One line per event plus CI/NI per `t+1` cluster.
pub fn event_summary(report: &TransitionReport, labels_t: &[ClusterLabel], labels_t1: &[ClusterLabel]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<8}  {:<30}  {:<30}  similarity", "event", "from (t)", "to (t+1)");
    for e in &report.events {
        let sims = e.similarities.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(
            out,
            "{:<8}  {:<30}  {:<30}  {}",
            e.kind.to_string(),
            names(&e.sources, labels_t),
            names(&e.targets, labels_t1),
            if sims.is_empty() { "-".into() } else { sims }
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<38}  {:>6}  {:>6}", "cluster (t+1)", "CI", "NI");
    for (j, (ci, ni)) in report.ci.iter().zip(&report.ni).enumerate() {
        let _ = writeln!(out, "{:<38}  {ci:>6.3}  {ni:>6.3}", names(&[j], labels_t1));
    }
    let mut counts: BTreeMap<EventKind, usize> = BTreeMap::new();
    for e in &report.events {
        *counts.entry(e.kind).or_default() += 1;
    }
    let tally = counts.iter().map(|(k, n)| format!("{n} {k}")).collect::<Vec<_>>().join(", ");
    let _ = writeln!(out, "\nevents: {}", if tally.is_empty() { "none".into() } else { tally });
    out
}

/// A window in a window-list file: an object or a `START:END[:LABEL]` string.
#[derive(Deserialize)]
#[serde(untagged)]
enum WindowEntry {
    Full(TimeWindow),
    Text(String),
}

pub fn parse_window_list(json: &str) -> Result<Vec<TimeWindow>> {
    let entries: Vec<WindowEntry> = serde_json::from_str(json).map_err(|e| Error::Usage(format!("window list: {e}")))?;
    entries
        .into_iter()
        .map(|e| match e {
            WindowEntry::Full(w) => w.validate().map(|_| w).map_err(Error::from),
            WindowEntry::Text(s) => s.parse::<TimeWindow>().map_err(Error::from),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChowReport {
    pub ci: BreakTestResult,
    pub ni: BreakTestResult,
}

#[derive(Debug, Clone)]
pub struct SeriesOutcome {
    pub series: IndexSeries,
    pub chow: ChowReport,
    pub summary: String,
}

/// Index series over the listed windows and the Chow test of both index
/// series at `breakpoint` (a point index; point `k` belongs to window `k+1`).
pub fn run_series(corpus_path: &Path, windows_path: &Path, breakpoint: usize, config: &PipelineConfig) -> Result<SeriesOutcome> {
    config.validate()?;
    let text = std::fs::read_to_string(windows_path).map_err(|e| Error::Usage(format!("{}: {e}", windows_path.display())))?;
    let windows = parse_window_list(&text)?;
    let corpus = load(corpus_path)?;
    let lexicon = config.load_lexicon()?;
    series_corpus(&corpus, &lexicon, &windows, breakpoint, config)
}

pub fn series_corpus(
    corpus: &Corpus,
    lexicon: &TermLexicon,
    windows: &[TimeWindow],
    breakpoint: usize,
    config: &PipelineConfig,
) -> Result<SeriesOutcome> {
    let points = windows.len().saturating_sub(1);
    if breakpoint == 0 || breakpoint >= points {
        return Err(Error::Usage(format!(
            "breakpoint {breakpoint} must lie strictly inside the series of {points} points"
        )));
    }
    let series = index_series(corpus, lexicon, windows, config)?;
    let x = series.time_index();
    let chow = ChowReport {
        ci: chow_test(&x, &series.ci(), breakpoint)?,
        ni: chow_test(&x, &series.ni(), breakpoint)?,
    };
    let dir = &config.out;
    ensure_dir(dir)?;
    write(dir, "series.csv", &series.to_csv())?;
    let mut json = serde_json::to_string_pretty(&chow).expect("chow report serializes");
    json.push('\n');
    write(dir, "chow.json", &json)?;
    let mut summary = String::new();
    for (name, r) in [("CI", &chow.ci), ("NI", &chow.ni)] {
        let _ = writeln!(
            summary,
            "{name}: F = {:.4}, p = {} (n1 = {}, n2 = {})",
            r.f_statistic,
            r.p_display(),
            r.n1,
            r.n2
        );
    }
    Ok(SeriesOutcome { series, chow, summary })
}

/// Terms from a JSON array of strings or one term per line (`#` comments).
pub fn parse_terms(text: &str) -> Vec<String> {
    if let Ok(list) = serde_json::from_str::<Vec<String>>(text) {
        return list.iter().map(|t| crate::corpus::normalize_tag(t)).collect();
    }
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(crate::corpus::normalize_tag)
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrendOutcome {
    pub tables: Vec<TrendTable>,
    /// `(term, source_a, source_b, r or error message)`.
    pub correlations: Vec<(String, String, String, std::result::Result<f64, String>)>,
}

/// Per-term document counts per period and source, and Pearson r for every
/// source pair. A failing correlation is reported in its row and does not
/// stop the other terms. Without a configured lexicon each term matches
/// itself literally.
pub fn run_trend(sources: &[(String, PathBuf)], terms: &[String], period: Period, config: &PipelineConfig) -> Result<TrendOutcome> {
    config.validate()?;
    if sources.len() < 2 {
        return Err(Error::Usage(format!("trend needs at least 2 sources, got {}", sources.len())));
    }
    let corpora = sources
        .iter()
        .map(|(label, path)| load(path).map(|c| (label.clone(), c)))
        .collect::<Result<Vec<_>>>()?;
    let lexicon = match &config.lexicon {
        Some(_) => config.load_lexicon()?,
        None => TermLexicon::compile(terms.iter().map(|t| TermPattern::literal(t)).collect())?,
    };
    trend_corpora(&corpora, &lexicon, terms, period, config)
}

pub fn trend_corpora(
    corpora: &[(String, Corpus)],
    lexicon: &TermLexicon,
    terms: &[String],
    period: Period,
    config: &PipelineConfig,
) -> Result<TrendOutcome> {
    let mut tables = Vec::new();
    let mut correlations = Vec::new();
    let mut trend = String::from("term,period,source,count\n");
    let mut corr = String::from("term,source_a,source_b,r,error\n");
    for term in terms {
        let table = term_trend(corpora, lexicon, term, period, config.field)?;
        table.write_rows(&mut trend);
        for ((a, b), r) in pairwise_correlations(&table) {
            let (sa, sb) = (table.sources[a].clone(), table.sources[b].clone());
            match &r {
                Ok(v) => {
                    let _ = writeln!(corr, "{term},{sa},{sb},{v:.6},");
                }
                Err(e) => {
                    let _ = writeln!(corr, "{term},{sa},{sb},,{e}");
                }
            }
            correlations.push((term.clone(), sa, sb, r.map_err(|e| e.to_string())));
        }
        tables.push(table);
    }
    let dir = &config.out;
    ensure_dir(dir)?;
    write(dir, "trend.csv", &trend)?;
    write(dir, "correlation.csv", &corr)?;
    Ok(TrendOutcome { tables, correlations })
}

/// Builds and clusters a single window; writes `graph.graphml`,
/// `graph.json`, `partition.json` and `labels.json`.
pub fn run_cluster(corpus_path: &Path, window: &TimeWindow, config: &PipelineConfig) -> Result<WindowAnalysis> {
    config.validate()?;
    window.validate()?;
    let corpus = load(corpus_path)?;
    let lexicon = config.load_lexicon()?;
    let a = analyze_window(&window_filter(&corpus, window), &lexicon, window, config)?;
    let dir = &config.out;
    ensure_dir(dir)?;
    write(dir, "graph.graphml", &cograph::to_graphml(&a.graph, Some(a.partition.assignment())))?;
    write(dir, "graph.json", &cograph::to_graph_json(&a.graph))?;
    write(dir, "partition.json", &a.partition.to_json())?;
    let mut labels = serde_json::to_string_pretty(&a.labels).expect("labels serialize");
    labels.push('\n');
    write(dir, "labels.json", &labels)?;
    Ok(a)
}

/// Generates a corpus from a plant spec; writes `corpus.jsonl`, `truth.json`
/// and, for text corpora, `lexicon.json`. `seed` overrides the spec's seed.
pub fn run_synth(spec_path: &Path, seed: Option<u64>, out: &Path) -> Result<PathBuf> {
    let text = std::fs::read_to_string(spec_path).map_err(|e| Error::Usage(format!("{}: {e}", spec_path.display())))?;
    let mut spec = PlantSpec::from_json(&text)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let generated = generate(&spec)?;
    ensure_dir(out)?;
    write(out, "corpus.jsonl", &generated.corpus.to_jsonl())?;
    write(out, "truth.json", &generated.truth.to_json())?;
    if let Some(lex) = &generated.lexicon {
        write(out, "lexicon.json", &lex.to_json())?;
    }
    Ok(out.join("corpus.jsonl"))
}
