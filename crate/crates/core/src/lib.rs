//! Detection of fast technological convergence from dated, tagged document
//! collections.
//!
//! The pipeline builds a weighted co-occurrence network of technology terms
//! and document tags for each time window, clusters it with a deterministic
//! Louvain implementation, and compares the clusterings of consecutive
//! windows. The comparison yields a cluster similarity matrix, the
//! Convergence Index (share of a new cluster inherited from the previous
//! window) and Novelty Index (the remainder), and a list of birth, death,
//! merge, split and persist events. Index time series over many windows can
//! be tested for a structural break with the Chow test.
//!
//! Modules, in pipeline order:
//!
//! - [`corpus`]: document loading and time windows
//! - [`lexicon`]: regular-expression term lexicon and extraction
//! - [`cograph`]: co-occurrence network construction, filtering and I/O
//! - [`community`]: modularity and Louvain clustering
//! - [`transition`]: cluster comparison between two windows
//! - [`breakcheck`]: index series, OLS, Chow test, trends and correlation
//! - [`synth`]: synthetic corpora with planted evolution events
//! - [`pipeline`]: configuration and the end-to-end commands

pub mod breakcheck;
pub mod cograph;
pub mod community;
pub mod corpus;
pub mod lexicon;
pub mod pipeline;
pub mod synth;
pub mod transition;

mod fsutil;

use std::path::PathBuf;

use thiserror::Error;

pub use breakcheck::{BreakError, BreakTestResult, IndexSeries};
pub use cograph::{CoGraph, GraphError, ItemField, NodeKind, PairMode};
pub use community::{ClusterLabel, CommunityError, Partition};
pub use corpus::{Corpus, CorpusError, Document, TimeWindow};
pub use lexicon::{LexiconError, TermLexicon, TermPattern};
pub use pipeline::PipelineConfig;
pub use synth::{GroundTruth, PlantSpec, SynthError};
pub use transition::{SimilarityMatrix, TransitionError, TransitionReport};

/// Crate-level error. Each variant is qualified by the module it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("lexicon: {0}")]
    Lexicon(#[from] LexiconError),
    #[error("cograph: {0}")]
    Graph(#[from] GraphError),
    #[error("community: {0}")]
    Community(#[from] CommunityError),
    #[error("transition: {0}")]
    Transition(#[from] TransitionError),
    #[error("breakcheck: {0}")]
    Break(#[from] BreakError),
    #[error("synth: {0}")]
    Synth(#[from] SynthError),
    #[error("window {window}: {reason}")]
    Window { window: String, reason: String },
    #[error("config: {0}")]
    Config(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for this error: 1 for internal (output I/O)
    /// failures, 2 for everything caused by bad input or usage.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 1,
            Error::Graph(GraphError::Io { .. }) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
