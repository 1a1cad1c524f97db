//! Modularity and deterministic Louvain community detection.
//!
//! The Louvain implementation is fully deterministic:
//!
//! - nodes are visited in lexicographic name order (the [`CoGraph`] order);
//! - a node moves only when the move strictly increases modularity;
//! - among equally good target communities the smallest id wins;
//! - local moving and aggregation alternate until no move improves.
//!
//! Gains are compared in the integer-scaled form `2m * k_in - γ * Σtot * k`,
//! which is exact in `f64` for integer edge weights and `γ = 1`, so the
//! strict-improvement rule cannot cycle on rounding noise.
//!
//! After the multi-level phase converges, one more local-moving pass runs on
//! the original graph starting from the found partition. If any node moves,
//! the multi-level phase restarts from the improved partition. The returned
//! partition is therefore a local optimum for single-node moves both at the
//! final aggregation level and on the original graph.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cograph::CoGraph;
use crate::synth::SplitMix64;

#[derive(Debug, Error, PartialEq)]
pub enum CommunityError {
    #[error("modularity undefined on edgeless graph")]
    Edgeless,
    #[error("partition does not cover node `{0}`")]
    Uncovered(String),
    #[error("partition assigns unknown node `{0}`")]
    UnknownNode(String),
    #[error("cluster ids are not dense: id {0} is unused")]
    SparseIds(usize),
    #[error("empty partition")]
    Empty,
    #[error("invalid partition json: {0}")]
    Json(String),
}

/// Disjoint assignment of node names to dense cluster ids `0..cluster_count`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    modularity: f64,
    cluster_count: usize,
    assignment: BTreeMap<String, usize>,
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            modularity: f64,
            assignment: BTreeMap<String, usize>,
        }
        let raw = Raw::deserialize(d)?;
        Partition::new(raw.assignment, raw.modularity).map_err(serde::de::Error::custom)
    }
}

impl Partition {
    /// Checks that ids are dense; `modularity` is stored as given.
    pub fn new(assignment: BTreeMap<String, usize>, modularity: f64) -> Result<Self, CommunityError> {
        if assignment.is_empty() {
            return Err(CommunityError::Empty);
        }
        let used: BTreeSet<usize> = assignment.values().copied().collect();
        let cluster_count = used.len();
        if let Some(missing) = (0..cluster_count).find(|c| !used.contains(c)) {
            return Err(CommunityError::SparseIds(missing));
        }
        Ok(Partition {
            modularity,
            cluster_count,
            assignment,
        })
    }

    /// Builds a partition of `graph` and scores it.
    pub fn scored(graph: &CoGraph, assignment: BTreeMap<String, usize>) -> Result<Self, CommunityError> {
        let q = modularity_of(graph, &assignment)?;
        Partition::new(assignment, q)
    }

    pub fn modularity(&self) -> f64 {
        self.modularity
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn assignment(&self) -> &BTreeMap<String, usize> {
        &self.assignment
    }

    pub fn cluster_of(&self, node: &str) -> Option<usize> {
        self.assignment.get(node).copied()
    }

    /// Members of each cluster, indexed by cluster id, names sorted.
    pub fn clusters(&self) -> Vec<BTreeSet<String>> {
        let mut out = vec![BTreeSet::new(); self.cluster_count];
        for (n, &c) in &self.assignment {
            out[c].insert(n.clone());
        }
        out
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.cluster_count];
        for &c in self.assignment.values() {
            out[c] += 1;
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("partition serializes");
        s.push('\n');
        s
    }

    pub fn from_json(json: &str) -> Result<Self, CommunityError> {
        serde_json::from_str(json).map_err(|e| CommunityError::Json(e.to_string()))
    }
}

fn cluster_vector(graph: &CoGraph, assignment: &BTreeMap<String, usize>) -> Result<Vec<usize>, CommunityError> {
    let mut out = Vec::with_capacity(graph.node_count());
    for n in graph.nodes() {
        out.push(*assignment.get(&n.name).ok_or_else(|| CommunityError::Uncovered(n.name.clone()))?);
    }
    if assignment.len() != graph.node_count() {
        if let Some(extra) = assignment.keys().find(|k| graph.node(k).is_none()) {
            return Err(CommunityError::UnknownNode(extra.clone()));
        }
    }
    Ok(out)
}

/// Newman modularity of `partition` on `graph`.
pub fn modularity(graph: &CoGraph, partition: &Partition) -> Result<f64, CommunityError> {
    modularity_of(graph, partition.assignment())
}

/// `Q = Σ_c [ Σin(c)/2m − (Σtot(c)/2m)² ]`, where `Σin` counts each
/// intra-cluster edge twice and `Σtot` sums weighted degrees.
pub fn modularity_of(graph: &CoGraph, assignment: &BTreeMap<String, usize>) -> Result<f64, CommunityError> {
    let m = graph.total_weight();
    if m == 0 {
        return Err(CommunityError::Edgeless);
    }
    let comm = cluster_vector(graph, assignment)?;
    let k = comm.iter().copied().max().map_or(0, |c| c + 1);
    let mut sigma_in = vec![0u64; k];
    let mut sigma_tot = vec![0u64; k];
    for (u, v, w) in graph.indexed_edges() {
        sigma_tot[comm[u]] += w;
        sigma_tot[comm[v]] += w;
        if comm[u] == comm[v] {
            sigma_in[comm[u]] += 2 * w;
        }
    }
    let two_m = 2.0 * m as f64;
    Ok(sigma_in
        .iter()
        .zip(&sigma_tot)
        .map(|(&i, &t)| i as f64 / two_m - (t as f64 / two_m).powi(2))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LouvainConfig {
    /// Modularity resolution γ; 1.0 is standard modularity.
    pub resolution: f64,
    /// Extra runs with shuffled visit orders (seeds `1..=restarts`); the
    /// best result wins, ties going to the earliest run. Run 0 visits nodes
    /// in name order.
    pub restarts: u64,
}

impl Default for LouvainConfig {
    fn default() -> Self {
        LouvainConfig {
            resolution: 1.0,
            restarts: 8,
        }
    }
}

/// Weighted graph at one aggregation level. Node order is significant: it is
/// the traversal order of local moving.
#[derive(Debug, Clone)]
struct LevelGraph {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
    degree: Vec<f64>,
    two_m: f64,
}

impl LevelGraph {
    fn from_cograph(graph: &CoGraph) -> Self {
        let n = graph.node_count();
        let mut adj = vec![Vec::new(); n];
        let mut degree = vec![0.0; n];
        for (u, v, w) in graph.indexed_edges() {
            let w = w as f64;
            adj[u].push((v, w));
            adj[v].push((u, w));
            degree[u] += w;
            degree[v] += w;
        }
        LevelGraph {
            adj,
            self_loops: vec![0.0; n],
            degree,
            two_m: 2.0 * graph.total_weight() as f64,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Collapses each community of the dense labelling `comm` into one node.
    fn aggregate(&self, comm: &[usize], count: usize) -> LevelGraph {
        let mut weights: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); count];
        let mut self_loops = vec![0.0; count];
        let mut degree = vec![0.0; count];
        for (u, neighbors) in self.adj.iter().enumerate() {
            let cu = comm[u];
            degree[cu] += self.degree[u];
            self_loops[cu] += self.self_loops[u];
            for &(v, w) in neighbors {
                let cv = comm[v];
                if cu == cv {
                    // each intra edge is seen from both ends
                    self_loops[cu] += w / 2.0;
                } else {
                    *weights[cu].entry(cv).or_insert(0.0) += w;
                }
            }
        }
        LevelGraph {
            adj: weights.into_iter().map(|m| m.into_iter().collect()).collect(),
            self_loops,
            degree,
            two_m: self.two_m,
        }
    }
}

/// Relabels `comm` densely by first appearance. Returns the label count.
fn densify(comm: &mut [usize]) -> usize {
    let mut map = BTreeMap::new();
    for c in comm.iter_mut() {
        let next = map.len();
        *c = *map.entry(*c).or_insert(next);
    }
    map.len()
}

/// One local-moving phase starting from `comm` (ids in `0..n`), visiting
/// nodes in `order`. Returns whether any node moved.
fn local_move(g: &LevelGraph, comm: &mut [usize], resolution: f64, order: &[usize]) -> bool {
    let n = g.len();
    let mut tot = vec![0.0; n];
    let mut size = vec![0usize; n];
    for (i, &c) in comm.iter().enumerate() {
        tot[c] += g.degree[i];
        size[c] += 1;
    }
    let mut empty: BTreeSet<usize> = (0..n).filter(|&c| size[c] == 0).collect();
    let mut link = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut moved_any = false;

    loop {
        let mut moved = false;
        for &i in order {
            let ci = comm[i];
            let ki = g.degree[i];
            for &(j, w) in &g.adj[i] {
                let c = comm[j];
                if link[c] == 0.0 {
                    touched.push(c);
                }
                link[c] += w;
            }
            tot[ci] -= ki;
            size[ci] -= 1;

            let gain = |c: usize, link_c: f64| link_c * g.two_m - resolution * tot[c] * ki;
            let stay = gain(ci, link[ci]);
            let mut best: Option<(usize, f64)> = None;
            let mut consider = |c: usize, value: f64| match best {
                None => best = Some((c, value)),
                Some((bc, bv)) => match value.partial_cmp(&bv) {
                    Some(Ordering::Greater) => best = Some((c, value)),
                    Some(Ordering::Equal) if c < bc => best = Some((c, value)),
                    _ => {}
                },
            };
            for &c in &touched {
                if c != ci {
                    consider(c, gain(c, link[c]));
                }
            }
            // moving out alone into an empty community has gain 0
            if size[ci] > 0 {
                if let Some(&e) = empty.iter().next() {
                    consider(e, 0.0);
                }
            }

            let target = match best {
                Some((c, v)) if v > stay => c,
                _ => ci,
            };
            tot[target] += ki;
            size[target] += 1;
            if target != ci {
                comm[i] = target;
                empty.remove(&target);
                if size[ci] == 0 {
                    empty.insert(ci);
                }
                moved = true;
            }
            for &c in &touched {
                link[c] = 0.0;
            }
            touched.clear();
        }
        if !moved {
            break;
        }
        moved_any = true;
    }
    moved_any
}

pub fn louvain(graph: &CoGraph) -> Result<Partition, CommunityError> {
    louvain_with(graph, &LouvainConfig::default())
}

pub fn louvain_with(graph: &CoGraph, config: &LouvainConfig) -> Result<Partition, CommunityError> {
    if graph.total_weight() == 0 {
        return Err(CommunityError::Edgeless);
    }
    let base = LevelGraph::from_cograph(graph);
    let mut best = run_louvain(&base, config.resolution, None);
    let mut best_q = quality(&base, &best, config.resolution);
    for seed in 1..=config.restarts {
        let candidate = run_louvain(&base, config.resolution, Some(SplitMix64::new(seed)));
        let q = quality(&base, &candidate, config.resolution);
        if q > best_q {
            best = candidate;
            best_q = q;
        }
    }
    let map: BTreeMap<String, usize> = graph
        .nodes()
        .iter()
        .zip(&best)
        .map(|(n, &c)| (n.name.clone(), c))
        .collect();
    Partition::scored(graph, map)
}

fn visit_order(n: usize, rng: &mut Option<SplitMix64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if let Some(rng) = rng {
        for i in (1..n).rev() {
            order.swap(i, rng.index(i + 1));
        }
    }
    order
}

/// Multilevel local moving, then a pass on the original graph; repeated
/// until that pass moves nothing. Returns a dense labelling.
fn run_louvain(base: &LevelGraph, resolution: f64, mut rng: Option<SplitMix64>) -> Vec<usize> {
    let n = base.len();
    let mut assignment: Vec<usize> = (0..n).collect();
    loop {
        let mut membership = assignment.clone();
        let count = densify(&mut membership);
        let mut level = base.aggregate(&membership, count);
        loop {
            let mut comm: Vec<usize> = (0..level.len()).collect();
            let order = visit_order(level.len(), &mut rng);
            if !local_move(&level, &mut comm, resolution, &order) {
                break;
            }
            let count = densify(&mut comm);
            for m in membership.iter_mut() {
                *m = comm[*m];
            }
            level = level.aggregate(&comm, count);
        }
        assignment = membership;
        let order = visit_order(n, &mut rng);
        if local_move(base, &mut assignment, resolution, &order) {
            continue;
        }
        if !vertex_mover(base, &mut assignment, resolution) {
            break;
        }
    }
    densify(&mut assignment);
    assignment
}

/// Kernighan-Lin style refinement. Each pass moves every node exactly once,
/// always taking the best remaining move even when it lowers quality, then
/// rewinds to the best prefix of the pass. Returns whether quality improved.
fn vertex_mover(g: &LevelGraph, comm: &mut [usize], resolution: f64) -> bool {
    let n = g.len();
    let eps = 1e-10 * g.two_m * g.two_m;
    let mut tot = vec![0.0; n];
    let mut size = vec![0usize; n];
    for (i, &c) in comm.iter().enumerate() {
        tot[c] += g.degree[i];
        size[c] += 1;
    }
    let mut link = vec![0.0; n];
    let mut improved = false;
    loop {
        let mut moved = vec![false; n];
        let mut history: Vec<(usize, usize, usize)> = Vec::with_capacity(n);
        let (mut total, mut best_total, mut best_len) = (0.0, 0.0, 0usize);
        for _ in 0..n {
            // (gain, node, target)
            let mut best: Option<(f64, usize, usize)> = None;
            for i in (0..n).filter(|&i| !moved[i]) {
                let (a, ki) = (comm[i], g.degree[i]);
                let mut touched = Vec::new();
                for &(j, w) in &g.adj[i] {
                    if link[comm[j]] == 0.0 {
                        touched.push(comm[j]);
                    }
                    link[comm[j]] += w;
                }
                let stay = link[a] * g.two_m - resolution * (tot[a] - ki) * ki;
                let mut consider = |c: usize, value: f64| {
                    let delta = value - stay;
                    let better = match best {
                        None => true,
                        Some((bd, bi, bc)) => delta > bd || (delta == bd && (i, c) < (bi, bc)),
                    };
                    if better {
                        best = Some((delta, i, c));
                    }
                };
                for &c in &touched {
                    if c != a {
                        consider(c, link[c] * g.two_m - resolution * tot[c] * ki);
                    }
                }
                if size[a] > 1 {
                    if let Some(e) = (0..n).find(|&c| size[c] == 0) {
                        consider(e, 0.0);
                    }
                }
                for &c in &touched {
                    link[c] = 0.0;
                }
            }
            let Some((delta, i, target)) = best else { break };
            let from = comm[i];
            tot[from] -= g.degree[i];
            size[from] -= 1;
            tot[target] += g.degree[i];
            size[target] += 1;
            comm[i] = target;
            moved[i] = true;
            history.push((i, from, target));
            total += delta;
            if total > best_total + eps {
                best_total = total;
                best_len = history.len();
            }
        }
        for &(i, from, target) in history[best_len..].iter().rev() {
            tot[target] -= g.degree[i];
            size[target] -= 1;
            tot[from] += g.degree[i];
            size[from] += 1;
            comm[i] = from;
        }
        if best_len == 0 {
            break;
        }
        improved = true;
    }
    if improved {
        densify(comm);
    }
    improved
}

/// `Σ_c in_c / 2m − γ (tot_c / 2m)²` for a dense labelling.
fn quality(g: &LevelGraph, comm: &[usize], resolution: f64) -> f64 {
    let count = comm.iter().max().map_or(0, |m| m + 1);
    let mut inside = vec![0.0; count];
    let mut tot = vec![0.0; count];
    for (u, neighbors) in g.adj.iter().enumerate() {
        tot[comm[u]] += g.degree[u];
        for &(v, w) in neighbors {
            if comm[u] == comm[v] {
                inside[comm[u]] += w;
            }
        }
    }
    inside
        .iter()
        .zip(&tot)
        .map(|(i, t)| i / g.two_m - resolution * (t / g.two_m).powi(2))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterLabel {
    pub cluster: usize,
    pub suggested_label: String,
    pub top_tags: Vec<String>,
}

/// Per cluster, the up to five members with the largest intra-cluster
/// weighted degree (ties lexicographic); the first one is the label.
pub fn suggest_labels(graph: &CoGraph, partition: &Partition) -> Vec<ClusterLabel> {
    let mut intra: BTreeMap<&str, u64> = BTreeMap::new();
    for e in graph.edges() {
        if let (Some(a), Some(b)) = (partition.cluster_of(&e.u), partition.cluster_of(&e.v)) {
            if a == b {
                *intra.entry(e.u.as_str()).or_insert(0) += e.weight;
                *intra.entry(e.v.as_str()).or_insert(0) += e.weight;
            }
        }
    }
    partition
        .clusters()
        .into_iter()
        .enumerate()
        .map(|(cluster, members)| {
            let mut ranked: Vec<(&String, u64)> = members
                .iter()
                .map(|m| (m, intra.get(m.as_str()).copied().unwrap_or(0)))
                .collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            let top_tags: Vec<String> = ranked.into_iter().take(5).map(|(m, _)| m.clone()).collect();
            ClusterLabel {
                cluster,
                suggested_label: top_tags[0].clone(),
                top_tags,
            }
        })
        .collect()
}
