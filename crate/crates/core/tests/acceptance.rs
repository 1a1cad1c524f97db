//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use techconv::breakcheck::special::inc_beta;
use techconv::breakcheck::{chow_test, index_series};
use techconv::cograph::{build_cooccurrence, top_n_filter, CoGraph, Edge, ItemField, Node, NodeKind, PairMode};
use techconv::community::{louvain, modularity_of, Partition};
use techconv::corpus::{load_corpus, window_filter, Corpus, CorpusFormat, Document, TimeWindow};
use techconv::lexicon::{TermLexicon, TermPattern};
use techconv::pipeline::{analyze_window, PipelineConfig};
use techconv::synth::{generate_corpus, GroundTruth, PlantSpec};
use techconv::transition::{biadjacency, transition_report, EventKind, SimilarityMeasure, TransitionReport};

enum Status {
    Pass,
    Fail,
    Skipped,
}

struct Outcome {
    status: Status,
    detail: String,
}

fn pass(detail: String) -> Outcome {
    Outcome {
        status: Status::Pass,
        detail,
    }
}

fn fail(detail: String) -> Outcome {
    Outcome {
        status: Status::Fail,
        detail,
    }
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

// ---------------------------------------------------------------- AC1

fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize) -> (CoGraph, Vec<Vec<f64>>) {
    let mut adj = vec![vec![0.0; n]; n];
    let mut weights: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        weights.insert((j, i), rng.random_range(1..=5));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !weights.contains_key(&(i, j)) && rng.random_bool(0.35) {
                weights.insert((i, j), rng.random_range(1..=5));
            }
        }
    }
    let mut strength = vec![0u64; n];
    for (&(i, j), &w) in &weights {
        adj[i][j] = w as f64;
        adj[j][i] = w as f64;
        strength[i] += w;
        strength[j] += w;
    }
    let nodes = (0..n)
        .map(|i| Node {
            name: format!("n{i}"),
            kind: NodeKind::Tag,
            doc_frequency: strength[i],
        })
        .collect();
    let edges = weights
        .iter()
        .map(|(&(i, j), &weight)| Edge {
            u: format!("n{i}"),
            v: format!("n{j}"),
            weight,
        })
        .collect();
    (CoGraph::from_parts(nodes, edges).unwrap(), adj)
}

/// `Q = 1/2m Σ_ij (A_ij − k_i k_j / 2m) δ(c_i, c_j)`
fn oracle_modularity(adj: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = adj.len();
    let k: Vec<f64> = adj.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += adj[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Every set partition as a restricted growth string.
fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=max + 1 {
            prefix.push(c);
            rec(prefix, max.max(c), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(&mut vec![0], 0, n, &mut out);
    }
    out
}

fn as_assignment(labels: &[usize]) -> BTreeMap<String, usize> {
    labels.iter().enumerate().map(|(i, &c)| (format!("n{i}"), c)).collect()
}

fn densify(labels: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC1);
    let mut worst_ratio = f64::INFINITY;
    let mut worst_delta: f64 = 0.0;
    let mut failures = Vec::new();
    let graphs = 200;
    for g in 0..graphs {
        let n = rng.random_range(2..=8);
        let (graph, adj) = random_connected_graph(&mut rng, n);
        let opt = all_partitions(n)
            .iter()
            .map(|p| oracle_modularity(&adj, p))
            .fold(f64::NEG_INFINITY, f64::max);
        let part = louvain(&graph).unwrap();
        let labels: Vec<usize> = (0..n).map(|i| part.cluster_of(&format!("n{i}")).unwrap()).collect();
        let q_oracle = oracle_modularity(&adj, &labels);
        let mut deltas = vec![(part.modularity() - q_oracle).abs()];
        for _ in 0..3 {
            let random: Vec<usize> = densify(&(0..n).map(|_| rng.random_range(0..n)).collect::<Vec<_>>());
            let q = modularity_of(&graph, &as_assignment(&random)).unwrap();
            deltas.push((q - oracle_modularity(&adj, &random)).abs());
        }
        let delta = deltas.into_iter().fold(0.0, f64::max);
        worst_delta = worst_delta.max(delta);
        let ratio = if opt > 0.0 { q_oracle / opt } else { 1.0 };
        worst_ratio = worst_ratio.min(ratio);
        if q_oracle < 0.9 * opt - 1e-12 || delta > 1e-12 {
            failures.push(format!("graph {g}: Q {q_oracle:.6} vs opt {opt:.6}, |dQ| {delta:.1e}"));
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed < Duration::from_secs(60);
    verdict(
        ok,
        format!(
            "{graphs} graphs, min Q/opt {worst_ratio:.4}, max |Q - oracle| {worst_delta:.1e}, {:.2}s{}",
            elapsed.as_secs_f64(),
            if failures.is_empty() {
                String::new()
            } else {
                format!("; {}", failures.join("; "))
            }
        ),
    )
}

// ---------------------------------------------------------------- AC2

fn ac2() -> Outcome {
    let mut notes = Vec::new();
    let bridged = common::graph(&[
        ("a", "b", 1),
        ("b", "c", 1),
        ("a", "c", 1),
        ("d", "e", 1),
        ("e", "f", 1),
        ("d", "f", 1),
        ("c", "d", 1),
    ]);
    let p = louvain(&bridged).unwrap();
    let expect: Vec<BTreeSet<String>> = vec![
        ["a", "b", "c"].iter().map(|s| s.to_string()).collect(),
        ["d", "e", "f"].iter().map(|s| s.to_string()).collect(),
    ];
    let ok1 = p.clusters() == expect;
    notes.push(format!("bridged triangles {}", if ok1 { "ok" } else { "WRONG" }));

    let mut k4 = Vec::new();
    for group in [["a", "b", "c", "d"], ["w", "x", "y", "z"]] {
        for i in 0..4 {
            for j in i + 1..4 {
                k4.push((group[i], group[j], 1));
            }
        }
    }
    let p = louvain(&common::graph(&k4)).unwrap();
    let expect: Vec<BTreeSet<String>> = vec![
        ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect(),
        ["w", "x", "y", "z"].iter().map(|s| s.to_string()).collect(),
    ];
    let ok2 = p.clusters() == expect;
    notes.push(format!("disjoint K4 {}", if ok2 { "ok" } else { "WRONG" }));

    let whole: BTreeMap<String, usize> = bridged.nodes().iter().map(|n| (n.name.clone(), 0)).collect();
    let q_whole = modularity_of(&bridged, &whole).unwrap();
    let edge = common::graph(&[("a", "b", 1)]);
    let singletons: BTreeMap<String, usize> = [("a".to_string(), 0), ("b".to_string(), 1)].into();
    let q_single = modularity_of(&edge, &singletons).unwrap();
    let ok3 = q_whole == 0.0 && q_single == -0.5;
    notes.push(format!("Q(one cluster) = {q_whole}, Q(singletons) = {q_single}"));
    verdict(ok1 && ok2 && ok3, notes.join(", "))
}

// ---------------------------------------------------------------- AC3

fn random_partition(rng: &mut ChaCha8Rng, universe: &[String]) -> Partition {
    let mut chosen: Vec<&String> = universe.iter().filter(|_| rng.random_bool(0.7)).collect();
    if chosen.is_empty() {
        chosen.push(&universe[rng.random_range(0..universe.len())]);
    }
    let k = rng.random_range(1..=chosen.len().min(6));
    let raw: Vec<usize> = chosen.iter().map(|_| rng.random_range(0..k)).collect();
    let dense = densify(&raw);
    Partition::new(chosen.into_iter().cloned().zip(dense).collect(), 0.0).unwrap()
}

fn permuted(p: &Partition, perm: &[usize]) -> Partition {
    Partition::new(p.assignment().iter().map(|(n, &c)| (n.clone(), perm[c])).collect(), 0.0).unwrap()
}

type EventKey = (EventKind, Vec<(usize, u64)>, Vec<(usize, u64)>);

/// Events with ids mapped back through the inverse permutations; each id
/// carries its similarity so that the supporting values are compared too.
fn event_keys(report: &TransitionReport, back_t: &[usize], back_t1: &[usize]) -> Vec<EventKey> {
    let mut keys: Vec<EventKey> = report
        .events
        .iter()
        .map(|e| {
            let sim_of = |pos: usize| e.similarities.get(pos).map_or(0, |v| v.to_bits());
            let mut s: Vec<(usize, u64)> = e
                .sources
                .iter()
                .enumerate()
                .map(|(k, &i)| (back_t[i], if e.sources.len() > 1 { sim_of(k) } else { 0 }))
                .collect();
            let mut t: Vec<(usize, u64)> = e
                .targets
                .iter()
                .enumerate()
                .map(|(k, &j)| (back_t1[j], if e.targets.len() > 1 { sim_of(k) } else { 0 }))
                .collect();
            s.sort();
            t.sort();
            (e.kind, s, t)
        })
        .collect();
    keys.sort();
    keys
}

fn ac3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC3);
    let mut failures: Vec<String> = Vec::new();
    let pairs = 500;
    for case in 0..pairs {
        let n = rng.random_range(1..=30);
        let universe: Vec<String> = (0..n).map(|i| format!("v{i:02}")).collect();
        let pt = random_partition(&mut rng, &universe);
        let pt1 = random_partition(&mut rng, &universe);
        let tau = rng.random_range(0.05..0.6);
        let r = transition_report(&pt, &pt1, SimilarityMeasure::OverlapTarget, tau).unwrap();
        let s = &r.similarity;
        let nodes_t: BTreeSet<&String> = pt.assignment().keys().collect();
        let nodes_t1: BTreeSet<&String> = pt1.assignment().keys().collect();
        let mut problems = Vec::new();
        for (j, members) in pt1.clusters().iter().enumerate() {
            let inherited = members.iter().filter(|m| nodes_t.contains(m)).count() as f64 / members.len() as f64;
            if (r.ci[j] + r.ni[j] - 1.0).abs() > 1e-12 {
                problems.push(format!("CI+NI != 1 at {j}"));
            }
            if (r.ci[j] - inherited).abs() > 1e-12 {
                problems.push(format!("CI {} vs direct {inherited} at {j}", r.ci[j]));
            }
            let birth = r.events.iter().any(|e| e.kind == EventKind::Birth && e.targets == [j]);
            if birth != (r.ci[j] == 0.0) {
                problems.push(format!("birth/CI=0 mismatch at {j}"));
            }
            if s.column_sum(j) > 1.0 + 1e-12 {
                problems.push(format!("column {j} sums to {}", s.column_sum(j)));
            }
        }
        for (i, members) in pt.clusters().iter().enumerate() {
            let zero_row = s.values[i].iter().all(|&v| v == 0.0);
            let disjoint = members.iter().all(|m| !nodes_t1.contains(m));
            let death = r.events.iter().any(|e| e.kind == EventKind::Death && e.sources == [i]);
            if zero_row != disjoint || death != zero_row {
                problems.push(format!("death/zero-row mismatch at {i}"));
            }
        }
        let d = biadjacency(s);
        let (m, k) = (d.size_t, d.size_t1);
        for a in 0..m + k {
            for b in 0..m + k {
                let same_block = (a < m) == (b < m);
                if d.matrix[a][b] != d.matrix[b][a] || (same_block && d.matrix[a][b] != 0.0) {
                    problems.push(format!("biadjacency entry ({a},{b})"));
                }
            }
        }
        let mut perm_t: Vec<usize> = (0..pt.cluster_count()).collect();
        let mut perm_t1: Vec<usize> = (0..pt1.cluster_count()).collect();
        perm_t.shuffle(&mut rng);
        perm_t1.shuffle(&mut rng);
        let rp = transition_report(&permuted(&pt, &perm_t), &permuted(&pt1, &perm_t1), SimilarityMeasure::OverlapTarget, tau)
            .unwrap();
        let inverse = |p: &[usize]| {
            let mut inv = vec![0; p.len()];
            for (i, &v) in p.iter().enumerate() {
                inv[v] = i;
            }
            inv
        };
        let id_t: Vec<usize> = (0..pt.cluster_count()).collect();
        let id_t1: Vec<usize> = (0..pt1.cluster_count()).collect();
        if event_keys(&r, &id_t, &id_t1) != event_keys(&rp, &inverse(&perm_t), &inverse(&perm_t1)) {
            problems.push("events change under cluster-id permutation".into());
        }
        if !problems.is_empty() {
            failures.push(format!("pair {case}: {}", problems.join(", ")));
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed < Duration::from_secs(30);
    verdict(
        ok,
        format!(
            "{pairs} partition pairs, {} failing, {:.2}s{}",
            failures.len(),
            elapsed.as_secs_f64(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------- AC4

struct Detected {
    report: TransitionReport,
    map_t: Vec<Option<usize>>,
    map_t1: Vec<Option<usize>>,
}

fn detect(spec: &PlantSpec) -> Result<(Detected, GroundTruth), String> {
    let (corpus, truth) = generate_corpus(spec).map_err(|e| e.to_string())?;
    let config = PipelineConfig::default();
    let lexicon = TermLexicon::empty();
    let analyse = |w: &TimeWindow| analyze_window(&window_filter(&corpus, w), &lexicon, w, &config).map_err(|e| e.to_string());
    let a = analyse(&spec.windows[0])?;
    let b = analyse(&spec.windows[1])?;
    let report = transition_report(&a.partition, &b.partition, SimilarityMeasure::OverlapTarget, config.tau).map_err(|e| e.to_string())?;
    let map_t = common::majority_map(&a.partition.clusters(), &truth.windows[0].assignment);
    let map_t1 = common::majority_map(&b.partition.clusters(), &truth.windows[1].assignment);
    Ok((Detected { report, map_t, map_t1 }, truth))
}

type NamedEvent = (EventKind, Vec<String>, Vec<String>);

fn detected_events(d: &Detected, truth: &GroundTruth) -> Vec<NamedEvent> {
    let t = &truth.transitions[0];
    let name = |map: &[Option<usize>], names: &[String], id: usize| map[id].map_or_else(|| format!("?{id}"), |c| names[c].clone());
    let mut out: Vec<NamedEvent> = d
        .report
        .events
        .iter()
        .map(|e| {
            let mut s: Vec<String> = e.sources.iter().map(|&i| name(&d.map_t, &t.rows, i)).collect();
            let mut g: Vec<String> = e.targets.iter().map(|&j| name(&d.map_t1, &t.cols, j)).collect();
            s.sort();
            g.sort();
            (e.kind, s, g)
        })
        .collect();
    out.sort();
    out
}

fn planted_events(truth: &GroundTruth) -> Vec<NamedEvent> {
    let t = &truth.transitions[0];
    let mut out: Vec<NamedEvent> = t
        .events
        .iter()
        .map(|e| {
            let mut s: Vec<String> = e.sources.iter().map(|&i| t.rows[i].clone()).collect();
            let mut g: Vec<String> = e.targets.iter().map(|&j| t.cols[j].clone()).collect();
            s.sort();
            g.sort();
            (e.kind, s, g)
        })
        .collect();
    out.sort();
    out
}

fn ac4() -> Outcome {
    let seeds = 20u64;
    let mut recovered = 0;
    let mut misses = Vec::new();
    for seed in 0..seeds {
        match detect(&common::four_event_spec(seed)) {
            Ok((d, truth)) => {
                let got = detected_events(&d, &truth);
                let want = planted_events(&truth);
                if got == want {
                    recovered += 1;
                } else {
                    misses.push(format!("seed {seed}: {got:?}"));
                }
            }
            Err(e) => misses.push(format!("seed {seed}: {e}")),
        }
    }
    let mut worst_ni: f64 = 0.0;
    let mut ni_failures = Vec::new();
    for mixing in [0.25, 0.5, 0.75] {
        for seed in 0..seeds {
            match detect(&common::mixing_spec(seed, mixing)) {
                Ok((d, truth)) => {
                    let planted = &truth.transitions[0].ni;
                    let mut matched = BTreeSet::new();
                    for (j, m) in d.map_t1.iter().enumerate() {
                        let Some(c) = m else {
                            ni_failures.push(format!("mixing {mixing} seed {seed}: unmapped cluster"));
                            continue;
                        };
                        matched.insert(*c);
                        let diff = (d.report.ni[j] - planted[*c]).abs();
                        worst_ni = worst_ni.max(diff);
                        if diff > 0.1 {
                            ni_failures.push(format!("mixing {mixing} seed {seed}: NI {:.3} vs {:.3}", d.report.ni[j], planted[*c]));
                        }
                    }
                    if matched.len() != planted.len() {
                        ni_failures.push(format!("mixing {mixing} seed {seed}: {} of {} communities found", matched.len(), planted.len()));
                    }
                }
                Err(e) => ni_failures.push(format!("mixing {mixing} seed {seed}: {e}")),
            }
        }
    }
    let ok = recovered >= 18 && ni_failures.is_empty();
    verdict(
        ok,
        format!(
            "events recovered on {recovered}/{seeds} seeds, max |NI - planted| {worst_ni:.3} over 3 mixings x {seeds} seeds{}{}",
            misses.first().map(|m| format!("; first miss: {m}")).unwrap_or_default(),
            ni_failures.first().map(|m| format!("; {m}")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------- AC5

fn reference_ssr(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let design = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { x[i] });
    let target = DVector::from_column_slice(y);
    let beta = design.clone().svd(true, true).solve(&target, 1e-14).expect("svd solve");
    (target - design * beta).norm_squared()
}

fn reference_f(x: &[f64], y: &[f64], bp: usize) -> f64 {
    let pooled = reference_ssr(x, y);
    let seg = reference_ssr(&x[..bp], &y[..bp]) + reference_ssr(&x[bp..], &y[bp..]);
    ((pooled - seg) / 2.0) / (seg / (x.len() - 4) as f64)
}

/// `ln Γ` by Stirling's series after shifting the argument above 15.
fn stirling_ln_gamma(z: f64) -> f64 {
    let mut shift = 0.0;
    let mut z = z;
    while z < 15.0 {
        shift += z.ln();
        z += 1.0;
    }
    let z2 = z * z;
    let series = 1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z * z2 * z2) - 1.0 / (1680.0 * z * z2 * z2 * z2)
        + 1.0 / (1188.0 * z * z2 * z2 * z2 * z2);
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln() + series - shift
}

/// `I_x(a, b) = x^a (1-x)^b / (a B(a, b)) Σ_n (a+b)_n / (a+1)_n x^n`, all
/// terms positive; the symmetry relation is used above `x = 0.5`.
fn series_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x > 0.5 {
        return 1.0 - series_inc_beta(b, a, 1.0 - x);
    }
    let ln_beta = stirling_ln_gamma(a) + stirling_ln_gamma(b) - stirling_ln_gamma(a + b);
    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta).exp() / a;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = 0.0;
    while term > 1e-17 * sum {
        term *= (a + b + n) / (a + 1.0 + n) * x;
        sum += term;
        n += 1.0;
    }
    front * sum
}

fn ac5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC5);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut notes = Vec::new();

    let mut worst_rel: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(8..=30);
        let bp = rng.random_range(3..=n - 3);
        let shift = rng.random_range(-3.0..3.0);
        let slope = rng.random_range(-1.0..1.0);
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&t| slope * t + if t as usize >= bp { shift } else { 0.0 } + normal.sample(&mut rng))
            .collect();
        let ours = chow_test(&x, &y, bp).unwrap().f_statistic;
        let reference = reference_f(&x, &y, bp);
        worst_rel = worst_rel.max((ours - reference).abs() / reference.abs().max(1e-300));
    }
    let ok_oracle = worst_rel <= 1e-6;
    notes.push(format!("F vs reference OLS max rel err {worst_rel:.1e}"));

    let mut worst_f: f64 = 0.0;
    let mut worst_p: f64 = 1.0;
    for _ in 0..50 {
        let n = rng.random_range(8..=30);
        let bp = rng.random_range(3..=n - 3);
        let (a, b) = (rng.random_range(-10.0..10.0), rng.random_range(-5.0..5.0));
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| a + b * t).collect();
        let r = chow_test(&x, &y, bp).unwrap();
        worst_f = worst_f.max(r.f_statistic);
        worst_p = worst_p.min(r.p_value);
    }
    let ok_flat = worst_f <= 1e-9 && worst_p >= 1.0 - 1e-9;
    notes.push(format!("no-break max F {worst_f:.1e}, min p {worst_p}"));

    let reps = 1000;
    let mut rejected = 0;
    for _ in 0..reps {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..20).map(|i| normal.sample(&mut rng) + if i >= 10 { 10.0 } else { 0.0 }).collect();
        if chow_test(&x, &y, 10).unwrap().p_value < 0.01 {
            rejected += 1;
        }
    }
    let ok_power = rejected as f64 >= 0.95 * reps as f64;
    notes.push(format!("10 sigma shift rejected in {rejected}/{reps}"));

    let mut worst_beta: f64 = 0.0;
    let shapes = [0.5, 1.0, 2.5, 7.0, 20.0];
    let xs = [0.03, 0.3, 0.62, 0.95];
    let mut points = 0;
    for &a in &shapes {
        for &b in &shapes {
            for &x in &xs {
                worst_beta = worst_beta.max((inc_beta(a, b, x) - series_inc_beta(a, b, x)).abs());
                points += 1;
            }
        }
    }
    let ok_beta = worst_beta <= 1e-10;
    notes.push(format!("incomplete beta {points}-point grid max err {worst_beta:.1e}"));
    verdict(ok_oracle && ok_flat && ok_power && ok_beta, notes.join(", "))
}

// ---------------------------------------------------------------- AC6

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn ac6() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let (corpus, _) = generate_corpus(&common::four_event_spec(11)).unwrap();
    let corpus_path = tmp.path().join("corpus.jsonl");
    std::fs::write(&corpus_path, corpus.to_jsonl()).unwrap();
    let run = |out: &Path| {
        Command::new(env!("CARGO_BIN_EXE_techconv"))
            .args(["compare", "--corpus"])
            .arg(&corpus_path)
            .args(["--window-t", "2021-01-01:2021-02-01", "--window-t1", "2021-02-01:2021-03-01", "--out"])
            .arg(out)
            .output()
            .unwrap()
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let (ra, rb) = (run(&a), run(&b));
    if !ra.status.success() || !rb.status.success() {
        return fail(format!("compare failed: {}", String::from_utf8_lossy(&ra.stderr)));
    }
    let (fa, fb) = (dir_contents(&a), dir_contents(&b));
    let graphml = fa.keys().filter(|k| k.ends_with(".graphml")).count();
    let ok = fa == fb && fa.len() == 9 && graphml == 2 && ra.stdout == rb.stdout;
    verdict(
        ok,
        format!(
            "{} files ({graphml} GraphML) {} across two runs",
            fa.len(),
            if fa == fb { "byte-identical" } else { "DIFFER" }
        ),
    )
}

// ---------------------------------------------------------------- AC7

fn ac7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC7);
    let vocab = ["cloud", "iot", "5g", "robot", "drone", "vr", "ai", "crypto", "health", "remote"];
    let lexicon = TermLexicon::compile(["cloud", "iot", "robot", "ai", "blockchain"].iter().map(|t| TermPattern::literal(t)).collect()).unwrap();
    let lex_terms = ["cloud", "iot", "robot", "ai", "blockchain"];
    let words = ["cloud", "iot", "robot", "ai", "blockchain", "the", "new", "edge", "data"];
    let mut failures = Vec::new();
    let corpora = 200;
    for case in 0..corpora {
        let n_docs = rng.random_range(1..=20);
        let mut docs = Vec::new();
        let mut item_sets: Vec<BTreeSet<String>> = Vec::new();
        for d in 0..n_docs {
            let tags: BTreeSet<&str> = (0..rng.random_range(0..5)).map(|_| vocab[rng.random_range(0..vocab.len())]).collect();
            let text_words: Vec<&str> = (0..rng.random_range(0..6)).map(|_| words[rng.random_range(0..words.len())]).collect();
            let mut items: BTreeSet<String> = tags.iter().map(|s| s.to_string()).collect();
            items.extend(text_words.iter().filter(|w| lex_terms.contains(w)).map(|s| s.to_string()));
            item_sets.push(items);
            docs.push(Document::new(
                format!("d{d}"),
                common::date("2020-03-01"),
                text_words.join(" "),
                tags.iter().copied(),
            ));
        }
        let corpus = Corpus::new(docs, "ac7").unwrap();
        let g = build_cooccurrence(&corpus, &lexicon, ItemField::Both, PairMode::All);
        let brute_total: u64 = item_sets.iter().map(|s| (s.len() * s.len().saturating_sub(1) / 2) as u64).sum();
        if g.total_weight() != brute_total {
            failures.push(format!("corpus {case}: total {} vs {brute_total}", g.total_weight()));
        }
        for e in g.edges() {
            let count = item_sets.iter().filter(|s| s.contains(&e.u) && s.contains(&e.v)).count() as u64;
            if count != e.weight {
                failures.push(format!("corpus {case}: {}-{} weight {} vs {count}", e.u, e.v, e.weight));
            }
        }
        for n in 1..=g.node_count().max(1) + 1 {
            let f = top_n_filter(&g, n);
            if top_n_filter(&f, n) != f {
                failures.push(format!("corpus {case}: top_n {n} not idempotent"));
            }
            let bigger = top_n_filter(&g, n + 1);
            let small: BTreeSet<&str> = f.nodes().iter().map(|x| x.name.as_str()).collect();
            let large: BTreeSet<&str> = bigger.nodes().iter().map(|x| x.name.as_str()).collect();
            if !small.is_subset(&large) || f.node_count() != n.min(g.node_count()) {
                failures.push(format!("corpus {case}: top_n {n} not monotone"));
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{corpora} corpora of <= 20 documents, {} mismatches{}",
            failures.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------- AC8

const KAGGLE_ENV: &str = "TECHCONV_KAGGLE_CORPUS";

/// Ten adjacent four-month windows, January 2017 to April 2020.
fn kaggle_windows() -> Vec<TimeWindow> {
    (0..10)
        .map(|k| {
            let start_month = k * 4;
            let start = chrono::NaiveDate::from_ymd_opt(2017 + start_month / 12, (start_month % 12) as u32 + 1, 1).unwrap();
            let end_month = start_month + 4;
            let end = chrono::NaiveDate::from_ymd_opt(2017 + end_month / 12, (end_month % 12) as u32 + 1, 1).unwrap();
            TimeWindow::new(start, end, "").unwrap()
        })
        .collect()
}

fn ac8() -> Outcome {
    let Some(path) = std::env::var_os(KAGGLE_ENV) else {
        return Outcome {
            status: Status::Skipped,
            detail: format!("set {KAGGLE_ENV} to the dataset path to run"),
        };
    };
    let path = Path::new(&path);
    let corpus = match load_corpus(path, CorpusFormat::from_path(path)) {
        Ok(c) => c,
        Err(e) => return fail(format!("cannot load {}: {e}", path.display())),
    };
    let lexicon = match std::env::var_os("TECHCONV_KAGGLE_LEXICON") {
        Some(l) => match techconv::lexicon::compile_lexicon(Path::new(&l)) {
            Ok(l) => l,
            Err(e) => return fail(format!("lexicon: {e}")),
        },
        None => TermLexicon::empty(),
    };
    let windows = kaggle_windows();
    let series = match index_series(&corpus, &lexicon, &windows, &PipelineConfig::default()) {
        Ok(s) => s,
        Err(e) => return fail(e.to_string()),
    };
    let ni = series.ni();
    let last = *ni.last().unwrap();
    let rising = ni[..ni.len() - 1].iter().all(|&v| last > v);
    // the last admissible breakpoint leaves three points after it
    let bp = ni.len() - 3;
    let chow = match chow_test(&series.time_index(), &ni, bp) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };
    verdict(
        rising && chow.p_value < 0.01,
        format!(
            "last NI {last:.3} {} all prior, Chow at point {bp}: F {:.2}, p {}",
            if rising { ">" } else { "NOT >" },
            chow.f_statistic,
            chow.p_display()
        ),
    )
}

type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("AC1", "modularity oracle", ac1),
        ("AC2", "louvain canonical cases", ac2),
        ("AC3", "transition algebra", ac3),
        ("AC4", "planted-event recovery", ac4),
        ("AC5", "chow test oracle", ac5),
        ("AC6", "compare determinism", ac6),
        ("AC7", "pipeline counting identity", ac7),
        ("AC8", "dataset directional check", ac8),
    ];
    let mut failed = 0;
    for (id, title, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            fail(format!("panicked: {msg}"))
        });
        let tag = match outcome.status {
            Status::Pass => "PASS",
            Status::Fail => {
                failed += 1;
                "FAIL"
            }
            Status::Skipped => "SKIPPED",
        };
        println!("[{tag}] {id} {title}: {} ({:.1}s)", outcome.detail, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
