//! Disjoint paths and vertex cuts by unit-capacity flow, the far-pair search
//! for two distant `S`–`T` paths, and the small-separator check.

use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::certificate::{Certificate, Mode, Verdict, Witness};
use crate::construction::LabeledGraph;
use crate::error::{Error, Result};
use crate::fatminor::{
    for_each_minimal_path, validate_path_system, Budget, Flow, PathVisitor, SearchBudget, SearchOutcome,
    SearchReport,
};
use crate::graph::{ball_mask, bfs_path_mask, Graph, Vertex, VertexSet};

/// Residual network of the vertex-splitting reduction: `v_in = 2v`,
/// `v_out = 2v + 1`, then a super source and a super sink. Only the
/// `v_in -> v_out` arcs are finite, so minimum cuts consist of vertices.
const UNBOUNDED: u32 = u32::MAX / 2;

struct FlowNet {
    head: Vec<usize>,
    cap: Vec<u32>,
    adj: Vec<Vec<usize>>,
    source: usize,
    sink: usize,
}

impl FlowNet {
    fn new(g: &Graph, s: &VertexSet, t: &VertexSet, forbidden: &VertexSet, vertex_cap: impl Fn(Vertex) -> u32) -> Self {
        let n = g.vertex_count();
        let mut net = FlowNet {
            head: Vec::new(),
            cap: Vec::new(),
            adj: vec![Vec::new(); 2 * n + 2],
            source: 2 * n,
            sink: 2 * n + 1,
        };
        let live = |v: Vertex| !forbidden.contains(v);
        for v in g.vertices().filter(|&v| live(v)) {
            net.arc(2 * v, 2 * v + 1, vertex_cap(v));
            for &w in g.neighbors(v) {
                if live(w) {
                    net.arc(2 * v + 1, 2 * w, UNBOUNDED);
                }
            }
        }
        for v in s.iter() {
            net.arc(net.source, 2 * v, UNBOUNDED);
        }
        for v in t.iter() {
            net.arc(2 * v + 1, net.sink, UNBOUNDED);
        }
        net
    }

    fn arc(&mut self, from: usize, to: usize, cap: u32) {
        self.adj[from].push(self.head.len());
        self.head.push(to);
        self.cap.push(cap);
        self.adj[to].push(self.head.len());
        self.head.push(from);
        self.cap.push(0);
    }

    /// Residual reachability from the source; the parent arc of each reached node.
    fn search(&self) -> Vec<Option<usize>> {
        let mut parent = vec![None; self.adj.len()];
        let mut seen = vec![false; self.adj.len()];
        seen[self.source] = true;
        let mut queue = VecDeque::from([self.source]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adj[u] {
                let w = self.head[a];
                if self.cap[a] > 0 && !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(a);
                    queue.push_back(w);
                }
            }
        }
        parent
    }

    fn reached(&self, parent: &[Option<usize>], node: usize) -> bool {
        node == self.source || parent[node].is_some()
    }

    /// Augments along shortest paths until none is left; returns the flow value.
    fn saturate(&mut self) -> usize {
        let mut value = 0;
        loop {
            let parent = self.search();
            if !self.reached(&parent, self.sink) {
                return value;
            }
            let mut bottleneck = u32::MAX;
            let mut node = self.sink;
            while let Some(a) = parent[node] {
                bottleneck = bottleneck.min(self.cap[a]);
                node = self.head[a ^ 1];
            }
            node = self.sink;
            while let Some(a) = parent[node] {
                self.cap[a] -= bottleneck;
                self.cap[a ^ 1] += bottleneck;
                node = self.head[a ^ 1];
            }
            value += bottleneck as usize;
        }
    }

    /// Splits the flow into paths of original vertices.
    fn paths(&mut self) -> Vec<Vec<Vertex>> {
        let mut out = Vec::new();
        loop {
            // Forward arcs carrying flow have their reverse residual positive.
            let carries = |net: &FlowNet, a: usize| a.is_multiple_of(2) && net.cap[a ^ 1] > 0;
            let Some(&first) = self.adj[self.source].iter().find(|&&a| carries(self, a)) else {
                return out;
            };
            let mut path = Vec::new();
            let mut a = first;
            loop {
                self.cap[a ^ 1] -= 1;
                let node = self.head[a];
                if node == self.sink {
                    break;
                }
                if node.is_multiple_of(2) {
                    path.push(node / 2);
                }
                a = *self.adj[node]
                    .iter()
                    .find(|&&b| carries(self, b))
                    .expect("flow is conserved");
            }
            out.push(path);
        }
    }
}

fn check_terminals(g: &Graph, s: &VertexSet, t: &VertexSet, forbidden: &VertexSet) -> Result<()> {
    g.check_set(s)?;
    g.check_set(t)?;
    g.check_set(forbidden)?;
    if s.is_empty() {
        return Err(Error::EmptySet("source set"));
    }
    if t.is_empty() {
        return Err(Error::EmptySet("target set"));
    }
    if !s.is_disjoint(forbidden) || !t.is_disjoint(forbidden) {
        return Err(Error::Precondition("terminal sets must avoid the forbidden set".into()));
    }
    Ok(())
}

/// Cuts a path down to one that meets `s` only in its first vertex and `t`
/// only in its last.
fn trim(path: &[Vertex], s: &VertexSet, t: &VertexSet) -> Vec<Vertex> {
    let end = path.iter().position(|&v| t.contains(v)).expect("path reaches t");
    let start = path[..=end].iter().rposition(|&v| s.contains(v)).expect("path leaves s");
    path[start..=end].to_vec()
}

/// A maximum family of vertex-disjoint `s`–`t` paths in `g - forbidden`.
/// Each path meets `s` only at its start and `t` only at its end; a vertex
/// of `s ∩ t` forms a one-vertex path.
pub fn max_disjoint_paths(
    g: &Graph,
    s: &VertexSet,
    t: &VertexSet,
    forbidden: &VertexSet,
) -> Result<Vec<Vec<Vertex>>> {
    check_terminals(g, s, t, forbidden)?;
    let mut net = FlowNet::new(g, s, t, forbidden, |_| 1);
    net.saturate();
    let mut paths: Vec<Vec<Vertex>> = net.paths().iter().map(|p| trim(p, s, t)).collect();
    paths.sort();
    Ok(paths)
}

/// A minimum vertex set meeting every `s`–`t` path of `g - forbidden`. The
/// terminal sets themselves are allowed in the cut, so a cut always exists
/// and its size equals the number of disjoint paths. Among minimum cuts one
/// with the fewest terminal vertices is returned.
pub fn min_vertex_cut(g: &Graph, s: &VertexSet, t: &VertexSet, forbidden: &VertexSet) -> Result<VertexSet> {
    check_terminals(g, s, t, forbidden)?;
    // Weight n+1 per vertex plus 1 per terminal ranks cuts by size first.
    let n = g.vertex_count() as u32;
    let mut net = FlowNet::new(g, s, t, forbidden, |v| {
        n + 1 + u32::from(s.contains(v) || t.contains(v))
    });
    net.saturate();
    let parent = net.search();
    Ok(g.vertices()
        .filter(|&v| !forbidden.contains(v) && net.reached(&parent, 2 * v) && !net.reached(&parent, 2 * v + 1))
        .collect())
}

struct FarPair<'a> {
    g: &'a Graph,
    k: u32,
    s: Vec<Vertex>,
    is_t: Vec<bool>,
    root_block: Vec<bool>,
    budget: Budget,
    found: Option<(Vec<Vertex>, Vec<Vertex>)>,
}

impl FarPair<'_> {
    /// A second path avoiding the root block and the ball around `first`.
    fn second(&self, first: &[Vertex]) -> Option<Vec<Vertex>> {
        let mut blocked = if self.k == 0 {
            vec![false; self.g.vertex_count()]
        } else {
            ball_mask(self.g, first, self.k - 1)
        };
        for (v, &b) in self.root_block.iter().enumerate() {
            blocked[v] |= b;
        }
        bfs_path_mask(self.g, &self.s, &self.is_t, &blocked)
    }
}

impl PathVisitor for FarPair<'_> {
    fn tick(&mut self) -> bool {
        self.budget.tick()
    }

    fn prune(&mut self, prefix: &[Vertex]) -> bool {
        self.second(prefix).is_none()
    }

    fn visit(&mut self, path: &[Vertex]) -> Flow {
        match self.second(path) {
            Some(q) => {
                self.found = Some((path.to_vec(), q));
                Flow::Stop
            }
            None => Flow::Continue,
        }
    }
}

/// Searches for two `S(G)`–`T(G)` paths at distance at least `k`, avoiding
/// the root when `avoid_root` is set. The first path ranges over chordless
/// paths meeting `S` and `T` only at their ends; the second is decided by
/// reachability, so `ExhaustedNone` means no such pair exists.
pub fn far_pair_search(
    lg: &LabeledGraph,
    k: u32,
    avoid_root: bool,
    budget: &SearchBudget,
) -> Result<SearchReport<(Vec<Vertex>, Vec<Vertex>)>> {
    let g = &lg.graph;
    let n = g.vertex_count();
    let s = lg.s_vertex_set();
    let t = lg.t_vertex_set();
    let mut root_block = vec![false; n];
    if avoid_root {
        root_block[lg.root] = true;
    }
    let sources: Vec<Vertex> = s.iter().filter(|&v| !root_block[v]).collect();
    let is_t: Vec<bool> = (0..n).map(|v| t.contains(v) && !root_block[v]).collect();
    let mut search = FarPair {
        g,
        k,
        s: sources.clone(),
        is_t: is_t.clone(),
        root_block: root_block.clone(),
        budget: Budget::new(budget),
        found: None,
    };
    for_each_minimal_path(g, &sources, &s.mask(n), &is_t, &root_block, None, &mut search);
    let outcome = match search.found.take() {
        Some((p, q)) => {
            let avoided = if avoid_root { VertexSet::singleton(lg.root) } else { VertexSet::new() };
            let cert = validate_path_system(g, &s, &t, &[p.clone(), q.clone()], k, &avoided);
            if cert.verdict != Verdict::Pass {
                return Err(Error::InvalidGraph(format!("far pair failed re-validation: {:?}", cert.witness)));
            }
            SearchOutcome::Found((p, q))
        }
        None if search.budget.exceeded() => SearchOutcome::BudgetExceeded,
        None => SearchOutcome::ExhaustedNone,
    };
    Ok(SearchReport {
        outcome,
        nodes: search.budget.nodes,
    })
}

/// Certificate for a [`far_pair_search`] run.
pub fn far_pair_certificate(
    lg: &LabeledGraph,
    k: u32,
    avoid_root: bool,
    budget: &SearchBudget,
    report: &SearchReport<(Vec<Vertex>, Vec<Vertex>)>,
) -> Certificate {
    let mut cert = Certificate::new("far-pair", budget.mode(), report.outcome.verdict())
        .param("h", lg.params.h)
        .param("d", lg.params.d)
        .param("m", lg.params.m)
        .param("K", k)
        .param("avoid_root", avoid_root)
        .stats(report.nodes, report.nodes);
    if let SearchOutcome::Found((p, q)) = &report.outcome {
        cert = cert.witness(Witness::PathSystem {
            sources: lg.s_vertex_set().to_vec(),
            targets: lg.t_vertex_set().to_vec(),
            paths: vec![p.clone(), q.clone()],
            min_separation: k,
            avoided: if avoid_root { vec![lg.root] } else { Vec::new() },
        });
    }
    cert
}

/// Which candidate separators [`no_small_separator`] examines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeparatorMode {
    /// Every vertex set of size below `m`; refused above `cap` candidates.
    Exhaustive { cap: u64 },
    /// `count` seeded samples, uniform over all sets of size below `m`.
    Sampled { count: u64, seed: u64 },
}

impl SeparatorMode {
    pub const DEFAULT_CAP: u64 = 1_000_000;
}

fn binomial(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All subsets of `0..n` of size exactly `k`, lexicographically.
fn subsets_of_size(n: usize, k: usize, out: &mut Vec<Vec<Vertex>>) {
    let mut cur: Vec<Vertex> = (0..k).collect();
    if k > n {
        return;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Checks that every vertex set `X` with `|X| < m` leaves an `S(G)`–`T(G)`
/// path at distance more than `ell` from `X ∪ {R}`.
pub fn no_small_separator(lg: &LabeledGraph, ell: u32, mode: SeparatorMode) -> Result<Certificate> {
    let g = &lg.graph;
    let n = g.vertex_count();
    let m = lg.params.m as usize;
    let (h, d) = (lg.params.h, lg.params.d);
    let candidates: Vec<Vec<Vertex>> = match mode {
        SeparatorMode::Exhaustive { cap } => {
            let total: u128 = (0..m as u64).map(|k| binomial(n as u64, k)).sum();
            if total > cap as u128 {
                return Err(Error::Precondition(format!(
                    "{total} candidate separators exceed the exhaustive cap {cap}"
                )));
            }
            let mut out = Vec::new();
            for size in 0..m {
                subsets_of_size(n, size, &mut out);
            }
            out
        }
        SeparatorMode::Sampled { count, seed } => {
            let weights: Vec<u128> = (0..m as u64).map(|k| binomial(n as u64, k)).collect();
            let total: u128 = weights.iter().sum();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| {
                    let mut pick = rng.gen_range(0..total);
                    let mut size = 0;
                    while pick >= weights[size] {
                        pick -= weights[size];
                        size += 1;
                    }
                    let mut set = sample(&mut rng, n, size).into_vec();
                    set.sort_unstable();
                    set
                })
                .collect()
        }
    };
    let s = lg.s_vertex_set();
    let t = lg.t_vertex_set();
    let separates = |x: &Vec<Vertex>| {
        let mut centers = x.clone();
        centers.push(lg.root);
        let blocked = ball_mask(g, &centers, ell);
        let targets: Vec<bool> = (0..n).map(|v| t.contains(v) && !blocked[v]).collect();
        bfs_path_mask(g, &s.to_vec(), &targets, &blocked).is_none()
    };
    let failure = candidates.par_iter().find_first(|x| separates(x));
    let cert_mode = match mode {
        SeparatorMode::Exhaustive { .. } => Mode::Exhaustive,
        SeparatorMode::Sampled { count, seed } => Mode::Sampled { count, seed },
    };
    let mut cert = Certificate::new(
        "no-small-separator",
        cert_mode,
        if failure.is_some() { Verdict::Fail } else { Verdict::Pass },
    )
    .param("h", h)
    .param("d", d)
    .param("m", m)
    .param("ell", ell)
    .param("hypotheses_met", d >= 2 * ell && h >= 2 * ell + 2)
    .param("candidates", candidates.len())
    .stats(candidates.len() as u64, candidates.len() as u64)
    .note("tests the strict form: the path avoids the radius-ell ball around X and the root");
    if let Some(x) = failure {
        cert = cert.witness(Witness::Vertices {
            role: "separator".into(),
            vertices: x.clone(),
        });
    }
    Ok(cert)
}
