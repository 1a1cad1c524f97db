//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use techconv::cograph::{CoGraph, Edge, Node, NodeKind};
use techconv::corpus::TimeWindow;
use techconv::synth::{CommunitySpec, PlantSpec, PlantedEvent};
use techconv::transition::EventKind;

/// Graph from an edge list; each node's document frequency is the sum of
/// its incident weights.
pub fn graph(edges: &[(&str, &str, u64)]) -> CoGraph {
    let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
    for &(u, v, w) in edges {
        *freq.entry(u).or_default() += w;
        *freq.entry(v).or_default() += w;
    }
    let nodes = freq
        .into_iter()
        .map(|(name, doc_frequency)| Node {
            name: name.to_string(),
            kind: NodeKind::Tag,
            doc_frequency,
        })
        .collect();
    let edges = edges
        .iter()
        .map(|&(u, v, weight)| Edge {
            u: u.to_string(),
            v: v.to_string(),
            weight,
        })
        .collect();
    CoGraph::from_parts(nodes, edges).expect("valid fixture graph")
}

pub fn date(s: &str) -> NaiveDate {
    s.parse().expect("fixture date")
}

pub fn month_window(year: i32, month: u32) -> TimeWindow {
    let start = NaiveDate::from_ymd_opt(year, month, 1).unwrap();
    let end = if month == 12 {
        NaiveDate::from_ymd_opt(year + 1, 1, 1).unwrap()
    } else {
        NaiveDate::from_ymd_opt(year, month + 1, 1).unwrap()
    };
    TimeWindow::new(start, end, "").unwrap()
}

pub fn community(name: &str, size: usize) -> CommunitySpec {
    CommunitySpec::new(name, size, 1.0)
}

pub fn event(kind: EventKind, sources: &[&str], targets: &[&str], mixing: f64) -> PlantedEvent {
    PlantedEvent::new(0, kind, sources, targets, mixing)
}

/// One transition planting a merge, a split, a death and a birth.
pub fn four_event_spec(seed: u64) -> PlantSpec {
    PlantSpec {
        windows: vec![month_window(2021, 1), month_window(2021, 2)],
        communities: vec![
            vec![community("a", 6), community("b", 6), community("c", 6), community("d", 10)],
            vec![community("m", 12), community("s", 5), community("t", 5), community("n", 6)],
        ],
        events: vec![
            event(EventKind::Merge, &["a", "b"], &["m"], 1.0),
            event(EventKind::Split, &["d"], &["s", "t"], 1.0),
            event(EventKind::Death, &["c"], &[], 1.0),
            event(EventKind::Birth, &[], &["n"], 1.0),
        ],
        docs_per_window: 200,
        noise_rate: 0.05,
        seed,
        tags_per_doc: 4,
        with_text: false,
    }
}

/// Two communities persisting with partial inheritance `mixing`.
pub fn mixing_spec(seed: u64, mixing: f64) -> PlantSpec {
    PlantSpec {
        windows: vec![month_window(2021, 1), month_window(2021, 2)],
        communities: vec![
            vec![community("a", 8), community("b", 8)],
            vec![community("a", 8), community("b", 8)],
        ],
        events: vec![
            event(EventKind::Persist, &["a"], &["a"], mixing),
            event(EventKind::Persist, &["b"], &["b"], mixing),
        ],
        docs_per_window: 150,
        noise_rate: 0.05,
        seed,
        tags_per_doc: 4,
        with_text: false,
    }
}

/// Two stable communities over consecutive months.
pub fn stable_spec(seed: u64, months: u32) -> PlantSpec {
    let windows: Vec<TimeWindow> = (1..=months).map(|m| month_window(2021, m)).collect();
    let mut events = Vec::new();
    for w in 0..windows.len() - 1 {
        for name in ["a", "b"] {
            events.push(PlantedEvent::new(w, EventKind::Persist, &[name], &[name], 1.0));
        }
    }
    PlantSpec {
        communities: vec![vec![community("a", 6), community("b", 6)]; windows.len()],
        windows,
        events,
        docs_per_window: 100,
        noise_rate: 0.0,
        seed,
        tags_per_doc: 4,
        with_text: false,
    }
}

/// Majority planted community for each detected cluster (ties to the
/// smaller index).
pub fn majority_map(clusters: &[BTreeSet<String>], planted: &BTreeMap<String, usize>) -> Vec<Option<usize>> {
    clusters
        .iter()
        .map(|members| {
            let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
            for m in members {
                if let Some(&c) = planted.get(m) {
                    *votes.entry(c).or_default() += 1;
                }
            }
            votes.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map(|(c, _)| c)
        })
        .collect()
}
