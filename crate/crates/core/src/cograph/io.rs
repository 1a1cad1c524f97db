//! GraphML and JSON serialization of [`CoGraph`].
//!
//! GraphML output declares four keys: `kind` (string) and `doc_frequency`
//! (int) on nodes, `cluster` (int) on nodes when a partition is attached, and
//! `weight` (int) on edges. The reader resolves `<data>` elements through the
//! `<key>` declarations' `attr.name`, so files using other key ids load too.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{CoGraph, Edge, GraphError, Node, NodeKind};

const GRAPHML_NS: &str = "http://graphml.graphdrawing.org/xmlns";

/// Renders GraphML. `clusters` maps node names to cluster ids; nodes missing
/// from it get no `cluster` data element.
pub fn to_graphml(graph: &CoGraph, clusters: Option<&BTreeMap<String, usize>>) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<graphml xmlns=\"{GRAPHML_NS}\" xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
         xsi:schemaLocation=\"{GRAPHML_NS} {GRAPHML_NS}/1.0/graphml.xsd\">"
    );
    out.push_str("  <key id=\"kind\" for=\"node\" attr.name=\"kind\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"doc_frequency\" for=\"node\" attr.name=\"doc_frequency\" attr.type=\"int\"/>\n");
    if clusters.is_some() {
        out.push_str("  <key id=\"cluster\" for=\"node\" attr.name=\"cluster\" attr.type=\"int\"/>\n");
    }
    out.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"int\"/>\n");
    out.push_str("  <graph id=\"G\" edgedefault=\"undirected\">\n");
    for n in graph.nodes() {
        let _ = writeln!(out, "    <node id=\"{}\">", escape(n.name.as_str()));
        let _ = writeln!(out, "      <data key=\"kind\">{}</data>", n.kind.as_str());
        let _ = writeln!(out, "      <data key=\"doc_frequency\">{}</data>", n.doc_frequency);
        if let Some(c) = clusters.and_then(|m| m.get(&n.name)) {
            let _ = writeln!(out, "      <data key=\"cluster\">{c}</data>");
        }
        out.push_str("    </node>\n");
    }
    for (i, e) in graph.edges().iter().enumerate() {
        let _ = writeln!(
            out,
            "    <edge id=\"e{i}\" source=\"{}\" target=\"{}\">",
            escape(e.u.as_str()),
            escape(e.v.as_str())
        );
        let _ = writeln!(out, "      <data key=\"weight\">{}</data>", e.weight);
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

#[derive(Default)]
struct PendingNode {
    id: String,
    kind: Option<String>,
    doc_frequency: Option<String>,
    cluster: Option<String>,
}

#[derive(Default)]
struct PendingEdge {
    source: String,
    target: String,
    weight: Option<String>,
}

enum Owner {
    None,
    Node(PendingNode),
    Edge(PendingEdge),
}

fn attr(e: &BytesStart<'_>, name: &str) -> Result<Option<String>, GraphError> {
    match e.try_get_attribute(name) {
        Ok(Some(a)) => a
            .unescape_value()
            .map(|v| Some(v.into_owned()))
            .map_err(|err| GraphError::GraphMl(err.to_string())),
        Ok(None) => Ok(None),
        Err(err) => Err(GraphError::GraphMl(err.to_string())),
    }
}

fn required(e: &BytesStart<'_>, name: &str) -> Result<String, GraphError> {
    attr(e, name)?.ok_or_else(|| {
        GraphError::GraphMl(format!(
            "<{}> is missing attribute `{name}`",
            String::from_utf8_lossy(e.name().as_ref())
        ))
    })
}

fn parse_int<T: std::str::FromStr>(what: &str, owner: &str, v: Option<String>) -> Result<T, GraphError> {
    let v = v.ok_or_else(|| GraphError::GraphMl(format!("{owner}: missing `{what}`")))?;
    v.trim()
        .parse()
        .map_err(|_| GraphError::GraphMl(format!("{owner}: `{what}` value `{v}` is not an integer")))
}

/// Parses GraphML written by [`to_graphml`] (or any file with the same
/// attribute names). Returns the graph and the `cluster` attribute, if any
/// node carried one.
pub fn from_graphml(xml: &str) -> Result<(CoGraph, Option<BTreeMap<String, usize>>), GraphError> {
    let mut reader = Reader::from_str(xml);
    reader.config_mut().trim_text(true);

    let mut key_names: BTreeMap<String, String> = BTreeMap::new();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut clusters = BTreeMap::new();
    let mut owner = Owner::None;
    let mut data_key: Option<String> = None;
    let mut text = String::new();

    loop {
        let ev = reader
            .read_event()
            .map_err(|e| GraphError::GraphMl(format!("at byte {}: {e}", reader.buffer_position())))?;
        match ev {
            Event::Eof => break,
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(ev, Event::Empty(_));
                match e.local_name().as_ref() {
                    b"key" => {
                        let id = required(e, "id")?;
                        let name = attr(e, "attr.name")?.unwrap_or_else(|| id.clone());
                        key_names.insert(id, name);
                    }
                    b"node" => {
                        let p = PendingNode {
                            id: required(e, "id")?,
                            ..Default::default()
                        };
                        if empty {
                            finish_node(p, &mut nodes, &mut clusters)?;
                        } else {
                            owner = Owner::Node(p);
                        }
                    }
                    b"edge" => {
                        let p = PendingEdge {
                            source: required(e, "source")?,
                            target: required(e, "target")?,
                            weight: None,
                        };
                        if empty {
                            edges.push(finish_edge(p)?);
                        } else {
                            owner = Owner::Edge(p);
                        }
                    }
                    b"data" if !empty => {
                        data_key = Some(required(e, "key")?);
                        text.clear();
                    }
                    _ => {}
                }
            }
            Event::Text(t) => {
                if data_key.is_some() {
                    text.push_str(&t.unescape().map_err(|e| GraphError::GraphMl(e.to_string()))?);
                }
            }
            Event::CData(t) => {
                if data_key.is_some() {
                    text.push_str(&String::from_utf8_lossy(&t));
                }
            }
            Event::End(ref e) => match e.local_name().as_ref() {
                b"data" => {
                    if let Some(key) = data_key.take() {
                        let name = key_names.get(&key).cloned().unwrap_or(key);
                        let value = std::mem::take(&mut text);
                        match &mut owner {
                            Owner::Node(n) => match name.as_str() {
                                "kind" => n.kind = Some(value),
                                "doc_frequency" => n.doc_frequency = Some(value),
                                "cluster" => n.cluster = Some(value),
                                _ => {}
                            },
                            Owner::Edge(ed) => {
                                if name == "weight" {
                                    ed.weight = Some(value);
                                }
                            }
                            Owner::None => {}
                        }
                    }
                }
                b"node" => {
                    if let Owner::Node(p) = std::mem::replace(&mut owner, Owner::None) {
                        finish_node(p, &mut nodes, &mut clusters)?;
                    }
                }
                b"edge" => {
                    if let Owner::Edge(p) = std::mem::replace(&mut owner, Owner::None) {
                        edges.push(finish_edge(p)?);
                    }
                }
                _ => {}
            },
            _ => {}
        }
    }
    let graph = CoGraph::from_parts(nodes, edges)?;
    Ok((graph, if clusters.is_empty() { None } else { Some(clusters) }))
}

fn finish_node(p: PendingNode, nodes: &mut Vec<Node>, clusters: &mut BTreeMap<String, usize>) -> Result<(), GraphError> {
    let owner = format!("node `{}`", p.id);
    let kind: NodeKind = p
        .kind
        .as_deref()
        .ok_or_else(|| GraphError::GraphMl(format!("{owner}: missing `kind`")))?
        .trim()
        .parse()?;
    let doc_frequency = parse_int("doc_frequency", &owner, p.doc_frequency)?;
    if p.cluster.is_some() {
        clusters.insert(p.id.clone(), parse_int("cluster", &owner, p.cluster)?);
    }
    nodes.push(Node {
        name: p.id,
        kind,
        doc_frequency,
    });
    Ok(())
}

fn finish_edge(p: PendingEdge) -> Result<Edge, GraphError> {
    let owner = format!("edge {}-{}", p.source, p.target);
    Ok(Edge {
        weight: parse_int("weight", &owner, p.weight)?,
        u: p.source,
        v: p.target,
    })
}

pub fn to_graph_json(graph: &CoGraph) -> String {
    let mut s = serde_json::to_string_pretty(graph).expect("graph serializes");
    s.push('\n');
    s
}

pub fn from_graph_json(json: &str) -> Result<CoGraph, GraphError> {
    serde_json::from_str(json).map_err(|e| GraphError::Json(e.to_string()))
}

fn io_err(path: &Path, e: std::io::Error) -> GraphError {
    GraphError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn export_graphml(graph: &CoGraph, clusters: Option<&BTreeMap<String, usize>>, path: &Path) -> Result<(), GraphError> {
    crate::fsutil::write_atomic(path, to_graphml(graph, clusters).as_bytes()).map_err(|e| io_err(path, e))
}

pub fn import_graphml(path: &Path) -> Result<(CoGraph, Option<BTreeMap<String, usize>>), GraphError> {
    let xml = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    from_graphml(&xml)
}

pub fn export_graph_json(graph: &CoGraph, path: &Path) -> Result<(), GraphError> {
    crate::fsutil::write_atomic(path, to_graph_json(graph).as_bytes()).map_err(|e| io_err(path, e))
}

pub fn import_graph_json(path: &Path) -> Result<CoGraph, GraphError> {
    let json = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    from_graph_json(&json)
}
