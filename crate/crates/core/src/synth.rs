//! Synthetic tagged corpora with planted cluster-evolution events.
//!
//! Each window holds disjoint communities of terms. A document picks one
//! community of its window uniformly and fills `tags_per_doc` slots: a slot
//! takes a member of that community with probability `intra_rate`, otherwise
//! a uniform term from the rest of the window's vocabulary. After each slot
//! an extra uniform vocabulary term is added with probability `noise_rate`.
//!
//! Between windows, each community of the later window is the target of
//! exactly one planted event, and inherits `round(mixing * size)` members
//! from its sources; the rest are fresh terms named `{name}{window}_{k}`.
//! Merge shares are split evenly across sources, the remainder going to the
//! first ones.
//!
//! Randomness comes from SplitMix64 so that output bytes are fixed by the
//! seed on every platform.

use std::collections::{BTreeMap, BTreeSet};

use chrono::Duration;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Document, TimeWindow};
use crate::lexicon::{TermLexicon, TermPattern};
use crate::transition::{indices, similarity_from_clusters, EventKind, SimilarityMeasure};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error("window {window}, community `{community}`: {message}")]
    Community {
        window: usize,
        community: String,
        message: String,
    },
    #[error("event {index}: {message}")]
    Event { index: usize, message: String },
    #[error("window {window}: term `{term}` belongs to more than one community")]
    Overlap { window: usize, term: String },
    #[error("spec json: {0}")]
    Json(String),
}

/// SplitMix64 (Steele, Lea, Flood 2014).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `0..n` by multiply-shift.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index of empty range");
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}

fn one() -> f64 {
    1.0
}

fn default_tags_per_doc() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunitySpec {
    pub name: String,
    /// Member count; may be omitted when `members` is given.
    #[serde(default)]
    pub size: usize,
    #[serde(default = "one")]
    pub intra_rate: f64,
    /// Explicit members, overriding derivation from events.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<String>>,
}

impl CommunitySpec {
    pub fn new(name: impl Into<String>, size: usize, intra_rate: f64) -> Self {
        CommunitySpec {
            name: name.into(),
            size,
            intra_rate,
            members: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedEvent {
    /// Index of the earlier window of the transition.
    pub from_window: usize,
    pub kind: EventKind,
    /// Community names in window `from_window`.
    #[serde(default)]
    pub sources: Vec<String>,
    /// Community names in window `from_window + 1`.
    #[serde(default)]
    pub targets: Vec<String>,
    /// Share of each target inherited from the sources.
    #[serde(default = "one")]
    pub mixing: f64,
}

impl PlantedEvent {
    pub fn new(from_window: usize, kind: EventKind, sources: &[&str], targets: &[&str], mixing: f64) -> Self {
        PlantedEvent {
            from_window,
            kind,
            sources: sources.iter().map(|s| s.to_string()).collect(),
            targets: targets.iter().map(|s| s.to_string()).collect(),
            mixing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    pub windows: Vec<TimeWindow>,
    /// Communities of each window, parallel to `windows`.
    pub communities: Vec<Vec<CommunitySpec>>,
    #[serde(default)]
    pub events: Vec<PlantedEvent>,
    pub docs_per_window: usize,
    #[serde(default)]
    pub noise_rate: f64,
    pub seed: u64,
    #[serde(default = "default_tags_per_doc")]
    pub tags_per_doc: usize,
    /// Emit terms inside sentence text instead of as tags.
    #[serde(default)]
    pub with_text: bool,
}

impl PlantSpec {
    pub fn from_json(json: &str) -> Result<Self, SynthError> {
        serde_json::from_str(json).map_err(|e| SynthError::Json(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedCommunity {
    pub name: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowTruth {
    pub window: TimeWindow,
    pub communities: Vec<PlantedCommunity>,
    /// Term to community index.
    pub assignment: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedEvent {
    pub kind: EventKind,
    pub sources: Vec<usize>,
    pub targets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionTruth {
    pub from_window: usize,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    /// Overlap-target similarity of the planted memberships.
    pub similarity: Vec<Vec<f64>>,
    pub ci: Vec<f64>,
    pub ni: Vec<f64>,
    pub events: Vec<ExpectedEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub windows: Vec<WindowTruth>,
    pub transitions: Vec<TransitionTruth>,
}

impl GroundTruth {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("ground truth serializes");
        s.push('\n');
        s
    }
}

fn spec_err(msg: impl Into<String>) -> SynthError {
    SynthError::Spec(msg.into())
}

fn validate(spec: &PlantSpec) -> Result<(), SynthError> {
    if spec.windows.is_empty() {
        return Err(spec_err("no windows"));
    }
    if spec.communities.len() != spec.windows.len() {
        return Err(spec_err(format!(
            "{} community lists for {} windows",
            spec.communities.len(),
            spec.windows.len()
        )));
    }
    for w in &spec.windows {
        w.validate().map_err(|e| spec_err(e.to_string()))?;
    }
    if spec.docs_per_window == 0 {
        return Err(spec_err("docs_per_window must be positive"));
    }
    if !(0.0..1.0).contains(&spec.noise_rate) {
        return Err(spec_err(format!("noise_rate {} outside [0, 1)", spec.noise_rate)));
    }
    if spec.tags_per_doc == 0 {
        return Err(spec_err("tags_per_doc must be positive"));
    }
    for (w, comms) in spec.communities.iter().enumerate() {
        if comms.is_empty() {
            return Err(spec_err(format!("window {w} has no communities")));
        }
        let mut names = BTreeSet::new();
        for c in comms {
            let err = |message: &str| SynthError::Community {
                window: w,
                community: c.name.clone(),
                message: message.into(),
            };
            if c.name.is_empty() {
                return Err(err("empty name"));
            }
            if !names.insert(c.name.as_str()) {
                return Err(err("duplicate name"));
            }
            let size = c.members.as_ref().map_or(c.size, Vec::len);
            if size == 0 {
                return Err(err("empty community"));
            }
            if let Some(m) = &c.members {
                if c.size != 0 && c.size != m.len() {
                    return Err(err("size disagrees with member list"));
                }
            }
            if !(0.0..=1.0).contains(&c.intra_rate) {
                return Err(err("intra_rate outside [0, 1]"));
            }
        }
    }
    for (index, e) in spec.events.iter().enumerate() {
        let err = |message: String| SynthError::Event { index, message };
        if e.from_window + 1 >= spec.windows.len() {
            return Err(err(format!("from_window {} has no following window", e.from_window)));
        }
        let (ns, nt) = (e.sources.len(), e.targets.len());
        let arity_ok = match e.kind {
            EventKind::Birth => ns == 0 && nt == 1,
            EventKind::Death => ns == 1 && nt == 0,
            EventKind::Persist => ns == 1 && nt == 1,
            EventKind::Merge => ns >= 2 && nt == 1,
            EventKind::Split => ns == 1 && nt >= 2,
        };
        if !arity_ok {
            return Err(err(format!("{} with {ns} sources and {nt} targets", e.kind)));
        }
        if matches!(e.kind, EventKind::Persist | EventKind::Merge | EventKind::Split)
            && !(e.mixing > 0.0 && e.mixing <= 1.0)
        {
            return Err(err(format!("mixing {} outside (0, 1]", e.mixing)));
        }
        for s in &e.sources {
            if !spec.communities[e.from_window].iter().any(|c| &c.name == s) {
                return Err(err(format!("unknown source `{s}` in window {}", e.from_window)));
            }
        }
        for t in &e.targets {
            if !spec.communities[e.from_window + 1].iter().any(|c| &c.name == t) {
                return Err(err(format!("unknown target `{t}` in window {}", e.from_window + 1)));
            }
        }
    }
    for w in 0..spec.windows.len() - 1 {
        let events: Vec<&PlantedEvent> = spec.events.iter().filter(|e| e.from_window == w).collect();
        for c in &spec.communities[w + 1] {
            let n = events.iter().filter(|e| e.targets.contains(&c.name)).count();
            if n != 1 {
                return Err(spec_err(format!(
                    "community `{}` in window {} is the target of {n} events, expected 1",
                    c.name,
                    w + 1
                )));
            }
        }
        for c in &spec.communities[w] {
            if !events.iter().any(|e| e.sources.contains(&c.name)) {
                return Err(spec_err(format!(
                    "community `{}` in window {w} is not the source of any event",
                    c.name
                )));
            }
        }
    }
    Ok(())
}

fn fresh(name: &str, window: usize, count: usize, start: usize) -> impl Iterator<Item = String> + '_ {
    (start..start + count).map(move |k| format!("{name}{window}_{k}").to_lowercase())
}

/// Member lists per window, parallel to `spec.communities`.
fn derive_members(spec: &PlantSpec) -> Result<Vec<Vec<Vec<String>>>, SynthError> {
    let mut all: Vec<Vec<Vec<String>>> = Vec::with_capacity(spec.windows.len());
    for (w, comms) in spec.communities.iter().enumerate() {
        let mut members: Vec<Vec<String>> = vec![Vec::new(); comms.len()];
        // inheritance cursor per source community of the previous window
        let mut cursor = vec![0usize; if w > 0 { spec.communities[w - 1].len() } else { 0 }];
        for (ci, c) in comms.iter().enumerate() {
            if let Some(explicit) = &c.members {
                members[ci] = explicit.iter().map(|m| crate::corpus::normalize_tag(m)).collect();
                continue;
            }
            let mut list = Vec::with_capacity(c.size);
            if w > 0 {
                let event = spec
                    .events
                    .iter()
                    .find(|e| e.from_window == w - 1 && e.targets.contains(&c.name))
                    .expect("validated: one event per target");
                if event.kind != EventKind::Birth {
                    let inherit = ((event.mixing * c.size as f64).round() as usize).min(c.size);
                    let src_idx: Vec<usize> = event
                        .sources
                        .iter()
                        .map(|s| spec.communities[w - 1].iter().position(|p| &p.name == s).expect("validated"))
                        .collect();
                    let share = inherit / src_idx.len();
                    let extra = inherit % src_idx.len();
                    for (k, &si) in src_idx.iter().enumerate() {
                        let take = share + usize::from(k < extra);
                        let source = &all[w - 1][si];
                        if cursor[si] + take > source.len() {
                            return Err(SynthError::Community {
                                window: w,
                                community: c.name.clone(),
                                message: format!(
                                    "needs {take} members from `{}`, which has only {} left",
                                    spec.communities[w - 1][si].name,
                                    source.len() - cursor[si]
                                ),
                            });
                        }
                        list.extend_from_slice(&source[cursor[si]..cursor[si] + take]);
                        cursor[si] += take;
                    }
                }
            }
            let missing = c.size - list.len();
            list.extend(fresh(&c.name, w, missing, 0));
            members[ci] = list;
        }
        let mut seen = BTreeSet::new();
        for m in members.iter().flatten() {
            if !seen.insert(m.as_str()) {
                return Err(SynthError::Overlap {
                    window: w,
                    term: m.clone(),
                });
            }
        }
        all.push(members);
    }
    Ok(all)
}

fn event_order(kind: EventKind) -> u8 {
    match kind {
        EventKind::Death => 0,
        EventKind::Birth => 1,
        EventKind::Merge => 2,
        EventKind::Split => 3,
        EventKind::Persist => 4,
    }
}

fn ground_truth(spec: &PlantSpec, members: &[Vec<Vec<String>>]) -> GroundTruth {
    let windows = spec
        .windows
        .iter()
        .enumerate()
        .map(|(w, window)| {
            let communities: Vec<PlantedCommunity> = spec.communities[w]
                .iter()
                .zip(&members[w])
                .map(|(c, m)| PlantedCommunity {
                    name: c.name.clone(),
                    members: m.clone(),
                })
                .collect();
            let assignment = members[w]
                .iter()
                .enumerate()
                .flat_map(|(ci, m)| m.iter().map(move |t| (t.clone(), ci)))
                .collect();
            WindowTruth {
                window: window.clone(),
                communities,
                assignment,
            }
        })
        .collect();
    let mut transitions = Vec::new();
    for w in 0..spec.windows.len().saturating_sub(1) {
        let sets = |ms: &Vec<Vec<String>>| ms.iter().map(|m| m.iter().cloned().collect()).collect::<Vec<BTreeSet<String>>>();
        let s = similarity_from_clusters(&sets(&members[w]), &sets(&members[w + 1]), SimilarityMeasure::OverlapTarget)
            .expect("validated: no empty communities");
        let idx = indices(&s).expect("overlap target");
        let pos = |list: &[CommunitySpec], name: &str| list.iter().position(|c| c.name == name).expect("validated");
        let mut events: Vec<ExpectedEvent> = spec
            .events
            .iter()
            .filter(|e| e.from_window == w)
            .map(|e| ExpectedEvent {
                kind: e.kind,
                sources: e.sources.iter().map(|n| pos(&spec.communities[w], n)).collect(),
                targets: e.targets.iter().map(|n| pos(&spec.communities[w + 1], n)).collect(),
            })
            .collect();
        events.sort_by_key(|e| (event_order(e.kind), e.sources.clone(), e.targets.clone()));
        transitions.push(TransitionTruth {
            from_window: w,
            rows: spec.communities[w].iter().map(|c| c.name.clone()).collect(),
            cols: spec.communities[w + 1].iter().map(|c| c.name.clone()).collect(),
            similarity: s.values,
            ci: idx.ci,
            ni: idx.ni,
            events,
        });
    }
    GroundTruth { windows, transitions }
}

fn sentence(terms: &[String]) -> String {
    match terms {
        [] => String::new(),
        [one] => format!("Notes on {one}."),
        [init @ .., last] => format!("Notes on {} and {last}.", init.join(", ")),
    }
}

/// Generated corpus with its ground truth, plus the literal lexicon of every
/// planted term when `with_text` is set.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub corpus: Corpus,
    pub truth: GroundTruth,
    pub lexicon: Option<TermLexicon>,
}

pub fn generate_corpus(spec: &PlantSpec) -> Result<(Corpus, GroundTruth), SynthError> {
    generate(spec).map(|o| (o.corpus, o.truth))
}

pub fn generate(spec: &PlantSpec) -> Result<SynthOutput, SynthError> {
    validate(spec)?;
    let members = derive_members(spec)?;
    let truth = ground_truth(spec, &members);
    let mut rng = SplitMix64::new(spec.seed);
    let mut docs = Vec::with_capacity(spec.windows.len() * spec.docs_per_window);
    for (w, window) in spec.windows.iter().enumerate() {
        let comms = &members[w];
        let vocab: Vec<&String> = comms.iter().flatten().collect();
        let days = (window.end - window.start).num_days() as usize;
        for d in 0..spec.docs_per_window {
            let c = rng.index(comms.len());
            let own = &comms[c];
            let others: Vec<&String> = comms
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != c)
                .flat_map(|(_, m)| m.iter())
                .collect();
            let intra = spec.communities[w][c].intra_rate;
            let mut terms: Vec<String> = Vec::with_capacity(spec.tags_per_doc * 2);
            for _ in 0..spec.tags_per_doc {
                let term = if others.is_empty() || rng.next_f64() < intra {
                    &own[rng.index(own.len())]
                } else {
                    others[rng.index(others.len())]
                };
                terms.push(term.clone());
                if spec.noise_rate > 0.0 && rng.next_f64() < spec.noise_rate {
                    terms.push(vocab[rng.index(vocab.len())].clone());
                }
            }
            let mut unique = Vec::with_capacity(terms.len());
            for t in terms {
                if !unique.contains(&t) {
                    unique.push(t);
                }
            }
            let date = window.start + Duration::days(rng.index(days) as i64);
            let id = format!("w{w}-d{d}");
            docs.push(if spec.with_text {
                Document::new(id, date, sentence(&unique), Vec::<String>::new())
            } else {
                Document::new(id, date, "", unique)
            });
        }
    }
    let corpus = Corpus::new(docs, "synthetic").map_err(|e| spec_err(e.to_string()))?;
    let lexicon = if spec.with_text {
        let vocab: BTreeSet<&String> = members.iter().flatten().flatten().collect();
        let entries = vocab.into_iter().map(|t| TermPattern::literal(t)).collect();
        Some(TermLexicon::compile(entries).map_err(|e| spec_err(e.to_string()))?)
    } else {
        None
    };
    Ok(SynthOutput { corpus, truth, lexicon })
}
