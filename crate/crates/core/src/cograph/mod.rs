//! Weighted undirected co-occurrence network for one time window.
//!
//! Nodes are technology terms found by the lexicon and author-assigned tags.
//! An edge joins two items that appear together in at least one document;
//! its weight is the number of such documents. A tag that equals a lexicon
//! canonical term is the same node as that term and has kind `technology`.

mod io;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::lexicon::TermLexicon;

pub use io::{
    export_graph_json, export_graphml, from_graph_json, from_graphml, import_graph_json, import_graphml,
    to_graph_json, to_graphml,
};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("graphml: {0}")]
    GraphMl(String),
    #[error("graph json: {0}")]
    Json(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("unknown {what} `{value}`")]
    UnknownOption { what: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Technology,
    Tag,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Technology => "technology",
            NodeKind::Tag => "tag",
        }
    }
}

impl FromStr for NodeKind {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "technology" => Ok(NodeKind::Technology),
            "tag" => Ok(NodeKind::Tag),
            other => Err(GraphError::UnknownOption {
                what: "node kind",
                value: other.into(),
            }),
        }
    }
}

/// Which parts of a document contribute items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemField {
    /// Lexicon hits in the text only.
    Text,
    /// Tags only.
    Tags,
    /// Lexicon hits and tags.
    #[default]
    Both,
}

impl FromStr for ItemField {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ItemField::Text),
            "tags" => Ok(ItemField::Tags),
            "both" => Ok(ItemField::Both),
            other => Err(GraphError::UnknownOption {
                what: "field",
                value: other.into(),
            }),
        }
    }
}

impl fmt::Display for ItemField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ItemField::Text => "text",
            ItemField::Tags => "tags",
            ItemField::Both => "both",
        })
    }
}

/// Which item pairs within a document are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairMode {
    #[default]
    All,
    /// Only pairs joining a technology and a tag.
    TechTag,
}

impl FromStr for PairMode {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(PairMode::All),
            "tech-tag" => Ok(PairMode::TechTag),
            other => Err(GraphError::UnknownOption {
                what: "pair mode",
                value: other.into(),
            }),
        }
    }
}

impl fmt::Display for PairMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairMode::All => "all",
            PairMode::TechTag => "tech-tag",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    pub doc_frequency: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub u: String,
    pub v: String,
    pub weight: u64,
}

/// Co-occurrence graph. Nodes are kept sorted by name; each edge stores its
/// endpoints with `u < v` and edges are sorted by `(u, v)`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CoGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl<'de> Deserialize<'de> for CoGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            nodes: Vec<Node>,
            edges: Vec<Edge>,
        }
        let raw = Raw::deserialize(d)?;
        CoGraph::from_parts(raw.nodes, raw.edges).map_err(serde::de::Error::custom)
    }
}

impl CoGraph {
    /// Validates and canonicalizes a node and edge list.
    pub fn from_parts(mut nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        nodes.sort_by(|a, b| a.name.cmp(&b.name));
        for w in nodes.windows(2) {
            if w[0].name == w[1].name {
                return Err(GraphError::Invalid(format!("duplicate node `{}`", w[0].name)));
            }
        }
        let index: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.name.as_str(), i)).collect();
        let mut max_incident = vec![0u64; nodes.len()];
        let mut canon: BTreeMap<(String, String), u64> = BTreeMap::new();
        for e in edges {
            if e.u == e.v {
                return Err(GraphError::Invalid(format!("self-loop on `{}`", e.u)));
            }
            if e.weight == 0 {
                return Err(GraphError::Invalid(format!("edge {}-{} has weight 0", e.u, e.v)));
            }
            let (Some(&iu), Some(&iv)) = (index.get(e.u.as_str()), index.get(e.v.as_str())) else {
                return Err(GraphError::Invalid(format!("edge {}-{} has an unknown endpoint", e.u, e.v)));
            };
            max_incident[iu] = max_incident[iu].max(e.weight);
            max_incident[iv] = max_incident[iv].max(e.weight);
            let key = if e.u < e.v { (e.u, e.v) } else { (e.v, e.u) };
            if canon.insert(key.clone(), e.weight).is_some() {
                return Err(GraphError::Invalid(format!("duplicate edge {}-{}", key.0, key.1)));
            }
        }
        for (n, &m) in nodes.iter().zip(&max_incident) {
            if n.doc_frequency < m {
                return Err(GraphError::Invalid(format!(
                    "node `{}` has doc_frequency {} below incident edge weight {}",
                    n.name, n.doc_frequency, m
                )));
            }
        }
        let edges = canon.into_iter().map(|((u, v), weight)| Edge { u, v, weight }).collect();
        Ok(CoGraph { nodes, edges })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sum of edge weights, `m` in the modularity formula.
    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn node(&self, name: &str) -> Option<&Node> {
        self.nodes
            .binary_search_by(|n| n.name.as_str().cmp(name))
            .ok()
            .map(|i| &self.nodes[i])
    }

    /// Position of `name` in the sorted node list.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.name.as_str().cmp(name)).ok()
    }

    pub fn weight(&self, a: &str, b: &str) -> u64 {
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by(|e| (e.u.as_str(), e.v.as_str()).cmp(&(u, v)))
            .map(|i| self.edges[i].weight)
            .unwrap_or(0)
    }

    /// Edges as `(index_u, index_v, weight)` over the sorted node list.
    pub fn indexed_edges(&self) -> Vec<(usize, usize, u64)> {
        self.edges
            .iter()
            .map(|e| {
                (
                    self.index_of(&e.u).expect("edge endpoint exists"),
                    self.index_of(&e.v).expect("edge endpoint exists"),
                    e.weight,
                )
            })
            .collect()
    }
}

/// The item set a document contributes under `field`.
pub fn document_items(
    doc: &crate::corpus::Document,
    lexicon: &TermLexicon,
    field: ItemField,
) -> BTreeMap<String, NodeKind> {
    let mut items = BTreeMap::new();
    if matches!(field, ItemField::Text | ItemField::Both) {
        for t in lexicon.terms_in(&doc.text) {
            items.insert(t, NodeKind::Technology);
        }
    }
    if matches!(field, ItemField::Tags | ItemField::Both) {
        for t in &doc.tags {
            let kind = if lexicon.contains(t) {
                NodeKind::Technology
            } else {
                NodeKind::Tag
            };
            items.entry(t.clone()).or_insert(kind);
        }
    }
    items
}

pub fn build_cooccurrence(corpus: &Corpus, lexicon: &TermLexicon, field: ItemField, pairs: PairMode) -> CoGraph {
    let mut freq: BTreeMap<String, (NodeKind, u64)> = BTreeMap::new();
    let mut weights: BTreeMap<(String, String), u64> = BTreeMap::new();
    for doc in corpus.documents() {
        let items: Vec<(String, NodeKind)> = document_items(doc, lexicon, field).into_iter().collect();
        for (name, kind) in &items {
            freq.entry(name.clone()).or_insert((*kind, 0)).1 += 1;
        }
        // items are sorted, so (a, b) with a < b is already canonical
        for (i, (a, ka)) in items.iter().enumerate() {
            for (b, kb) in &items[i + 1..] {
                if pairs == PairMode::TechTag && ka == kb {
                    continue;
                }
                *weights.entry((a.clone(), b.clone())).or_insert(0) += 1;
            }
        }
    }
    CoGraph {
        nodes: freq
            .into_iter()
            .map(|(name, (kind, doc_frequency))| Node {
                name,
                kind,
                doc_frequency,
            })
            .collect(),
        edges: weights.into_iter().map(|((u, v), weight)| Edge { u, v, weight }).collect(),
    }
}

/// Keeps the `n` most frequent nodes (ties: lexicographically smaller name
/// wins) and the edges among them.
pub fn top_n_filter(graph: &CoGraph, n: usize) -> CoGraph {
    assert!(n >= 1, "top_n_filter requires n >= 1");
    if graph.nodes.len() <= n {
        return graph.clone();
    }
    let mut ranked: Vec<&Node> = graph.nodes.iter().collect();
    ranked.sort_by(|a, b| b.doc_frequency.cmp(&a.doc_frequency).then_with(|| a.name.cmp(&b.name)));
    let keep: BTreeSet<&str> = ranked[..n].iter().map(|n| n.name.as_str()).collect();
    CoGraph {
        nodes: graph.nodes.iter().filter(|n| keep.contains(n.name.as_str())).cloned().collect(),
        edges: graph
            .edges
            .iter()
            .filter(|e| keep.contains(e.u.as_str()) && keep.contains(e.v.as_str()))
            .cloned()
            .collect(),
    }
}
