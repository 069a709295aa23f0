//! Simple undirected graphs and the metric primitives built on them.
//!
//! Every vertex set handed to the public functions here is validated against
//! the graph; the `*_mask` helpers skip validation and are what the search
//! modules use in their inner loops.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vertex = usize;

const UNREACHED: u32 = u32::MAX;

/// Exact graph distance. `Infinite` sorts above every finite value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Distance {
    Finite(u32),
    Infinite,
}

impl Distance {
    fn from_raw(raw: u32) -> Self {
        if raw == UNREACHED {
            Distance::Infinite
        } else {
            Distance::Finite(raw)
        }
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Distance::Finite(_))
    }

    /// `self >= k`, with `Infinite` at least every bound.
    pub fn at_least(self, k: u32) -> bool {
        match self {
            Distance::Finite(d) => d >= k,
            Distance::Infinite => true,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Distance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.finite().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Distance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match Option::<u32>::deserialize(d)? {
            Some(v) => Distance::Finite(v),
            None => Distance::Infinite,
        })
    }
}

/// A set of vertex ids, always iterated in increasing order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexSet(BTreeSet<Vertex>);

impl VertexSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(v: Vertex) -> Self {
        Self(BTreeSet::from([v]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.0.contains(&v)
    }

    pub fn insert(&mut self, v: Vertex) -> bool {
        self.0.insert(v)
    }

    pub fn remove(&mut self, v: Vertex) -> bool {
        self.0.remove(&v)
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = Vertex> + '_ {
        self.0.iter().copied()
    }

    pub fn first(&self) -> Option<Vertex> {
        self.0.first().copied()
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        Self(self.0.union(&other.0).copied().collect())
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        Self(self.0.intersection(&other.0).copied().collect())
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        Self(self.0.difference(&other.0).copied().collect())
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn to_vec(&self) -> Vec<Vertex> {
        self.iter().collect()
    }

    /// Membership mask of length `n`. Members must be `< n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for v in self.iter() {
            m[v] = true;
        }
        m
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        mask.iter()
            .enumerate()
            .filter_map(|(v, &b)| b.then_some(v))
            .collect()
    }
}

impl FromIterator<Vertex> for VertexSet {
    fn from_iter<I: IntoIterator<Item = Vertex>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl<'a> FromIterator<&'a Vertex> for VertexSet {
    fn from_iter<I: IntoIterator<Item = &'a Vertex>>(iter: I) -> Self {
        Self(iter.into_iter().copied().collect())
    }
}

impl<const N: usize> From<[Vertex; N]> for VertexSet {
    fn from(vs: [Vertex; N]) -> Self {
        vs.into_iter().collect()
    }
}

impl From<&[Vertex]> for VertexSet {
    fn from(vs: &[Vertex]) -> Self {
        vs.iter().collect()
    }
}

impl From<Vec<Vertex>> for VertexSet {
    fn from(vs: Vec<Vertex>) -> Self {
        vs.into_iter().collect()
    }
}

impl IntoIterator for VertexSet {
    type Item = Vertex;
    type IntoIter = std::collections::btree_set::IntoIter<Vertex>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a VertexSet {
    type Item = &'a Vertex;
    type IntoIter = std::collections::btree_set::Iter<'a, Vertex>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// A separation `{A, B}`: `A ∪ B = V(G)` and no edge between `A∖B` and `B∖A`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Separation {
    pub side_a: VertexSet,
    pub side_b: VertexSet,
}

impl Separation {
    pub fn order(&self) -> usize {
        self.side_a.intersection(&self.side_b).len()
    }

    pub fn is_valid_in(&self, g: &Graph) -> bool {
        if self.side_a.union(&self.side_b).len() != g.vertex_count() {
            return false;
        }
        let only_a = self.side_a.difference(&self.side_b).mask(g.vertex_count());
        let only_b = self.side_b.difference(&self.side_a).mask(g.vertex_count());
        g.edges().all(|(u, v)| !(only_a[u] && only_b[v] || only_b[u] && only_a[v]))
    }
}

/// All-pairs distances, row-major.
#[derive(Clone, Debug)]
pub struct DistanceMatrix {
    n: usize,
    raw: Vec<u32>,
}

impl DistanceMatrix {
    pub fn get(&self, u: Vertex, v: Vertex) -> Distance {
        Distance::from_raw(self.raw[u * self.n + v])
    }

    pub(crate) fn raw(&self, u: Vertex, v: Vertex) -> u32 {
        self.raw[u * self.n + v]
    }
}

/// Immutable simple undirected graph on vertices `0..n`.
///
/// Adjacency lists are sorted. The all-pairs distance matrix is filled on the
/// first call to [`Graph::distances`] and shared read-only afterwards.
#[derive(Clone)]
pub struct Graph {
    adj: Vec<Vec<Vertex>>,
    edge_count: usize,
    apsp: OnceLock<DistanceMatrix>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.vertex_count())
            .field("m", &self.edge_count)
            .finish()
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.adj == other.adj
    }
}

impl Eq for Graph {}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self::from_adjacency(vec![Vec::new(); n])
    }

    fn from_adjacency(mut adj: Vec<Vec<Vertex>>) -> Self {
        for list in &mut adj {
            list.sort_unstable();
        }
        let edge_count = adj.iter().map(Vec::len).sum::<usize>() / 2;
        Self {
            adj,
            edge_count,
            apsp: OnceLock::new(),
        }
    }

    /// Builds a graph, rejecting loops, repeated edges and out-of-range ids.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("loop at vertex {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let g = Self::from_adjacency(adj);
        for (u, list) in g.adj.iter().enumerate() {
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidGraph(format!("parallel edges at vertex {u}")));
            }
        }
        Ok(g)
    }

    /// Builds a graph, silently dropping loops and repeated edges.
    pub fn from_edges_simplified<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::VertexOutOfRange { vertex: w, n });
                }
            }
            if u != v {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self::from_adjacency(adj))
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn vertices(&self) -> std::ops::Range<Vertex> {
        0..self.adj.len()
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        u < self.adj.len() && self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn contains_vertex(&self, v: Vertex) -> bool {
        v < self.adj.len()
    }

    pub fn check_set(&self, set: &VertexSet) -> Result<()> {
        match set.iter().next_back() {
            Some(v) if v >= self.vertex_count() => Err(Error::VertexOutOfRange {
                vertex: v,
                n: self.vertex_count(),
            }),
            _ => Ok(()),
        }
    }

    /// Whether `path` is a simple path of this graph (a single vertex counts).
    pub fn is_path(&self, path: &[Vertex]) -> bool {
        if path.is_empty() || path.iter().any(|&v| v >= self.vertex_count()) {
            return false;
        }
        let distinct: BTreeSet<_> = path.iter().collect();
        distinct.len() == path.len() && path.windows(2).all(|w| self.has_edge(w[0], w[1]))
    }

    /// All-pairs distances, computed once by breadth-first search from every vertex.
    pub fn distances(&self) -> &DistanceMatrix {
        self.apsp.get_or_init(|| {
            let n = self.vertex_count();
            let mut raw = Vec::with_capacity(n * n);
            for v in self.vertices() {
                raw.extend(bfs_distances(self, &[v], None));
            }
            DistanceMatrix { n, raw }
        })
    }

    /// Whether the distance matrix has already been filled.
    pub fn has_distance_cache(&self) -> bool {
        self.apsp.get().is_some()
    }

    pub fn is_connected(&self) -> bool {
        self.vertex_count() == 0 || {
            let d = bfs_distances(self, &[0], None);
            d.iter().all(|&x| x != UNREACHED)
        }
    }

    /// Induced subgraph on `keep` (in increasing order) and the old→new id map.
    pub fn induced(&self, keep: &VertexSet) -> (Graph, Vec<Option<Vertex>>) {
        let mut map = vec![None; self.vertex_count()];
        for (i, v) in keep.iter().enumerate() {
            map[v] = Some(i);
        }
        let edges = self
            .edges()
            .filter_map(|(u, v)| Some((map[u]?, map[v]?)))
            .collect::<Vec<_>>();
        let g = Graph::from_edges(keep.len(), edges).expect("induced subgraph of a simple graph");
        (g, map)
    }
}

/// Multi-source BFS distances, not entering vertices marked in `blocked`.
/// Blocked sources are skipped.
pub(crate) fn bfs_distances(g: &Graph, sources: &[Vertex], blocked: Option<&[bool]>) -> Vec<u32> {
    let n = g.vertex_count();
    let mut dist = vec![UNREACHED; n];
    let mut queue = VecDeque::new();
    let is_blocked = |v: Vertex| blocked.is_some_and(|b| b[v]);
    for &s in sources {
        if !is_blocked(s) && dist[s] == UNREACHED {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            if dist[w] == UNREACHED && !is_blocked(w) {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Mask of the radius-`r` ball around `sources`.
pub(crate) fn ball_mask(g: &Graph, sources: &[Vertex], r: u32) -> Vec<bool> {
    let mut mask = vec![false; g.vertex_count()];
    grow_ball_mask(g, sources, r, &mut mask);
    mask
}

/// ORs the radius-`r` ball around `sources` into `mask`.
pub(crate) fn grow_ball_mask(g: &Graph, sources: &[Vertex], r: u32, mask: &mut [bool]) {
    let mut frontier: Vec<Vertex> = Vec::new();
    let mut visited = vec![false; g.vertex_count()];
    for &s in sources {
        if !visited[s] {
            visited[s] = true;
            frontier.push(s);
        }
    }
    for &s in &frontier {
        mask[s] = true;
    }
    for _ in 0..r {
        let mut next = Vec::new();
        for &u in &frontier {
            for &w in g.neighbors(u) {
                if !visited[w] {
                    visited[w] = true;
                    mask[w] = true;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
}

/// Whether some vertex of `to` is reachable from some vertex of `from` in `g - blocked`.
pub(crate) fn reachable_mask(g: &Graph, from: &[Vertex], to: &[bool], blocked: &[bool]) -> bool {
    bfs_path_mask(g, from, to, blocked).is_some()
}

/// Shortest path from `from` to a vertex flagged in `to`, avoiding `blocked`.
pub(crate) fn bfs_path_mask(
    g: &Graph,
    from: &[Vertex],
    to: &[bool],
    blocked: &[bool],
) -> Option<Vec<Vertex>> {
    let n = g.vertex_count();
    let mut parent = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for &s in from {
        if !blocked[s] && parent[s] == usize::MAX {
            parent[s] = s;
            if to[s] {
                return Some(vec![s]);
            }
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            if parent[w] == usize::MAX && !blocked[w] {
                parent[w] = u;
                if to[w] {
                    let mut path = vec![w];
                    let mut cur = w;
                    while parent[cur] != cur {
                        cur = parent[cur];
                        path.push(cur);
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(w);
            }
        }
    }
    None
}

fn require_nonempty(set: &VertexSet, what: &'static str) -> Result<()> {
    if set.is_empty() {
        Err(Error::EmptySet(what))
    } else {
        Ok(())
    }
}

/// Minimum distance between two nonempty vertex sets.
pub fn distance(g: &Graph, u: &VertexSet, v: &VertexSet) -> Result<Distance> {
    require_nonempty(u, "first set")?;
    require_nonempty(v, "second set")?;
    g.check_set(u)?;
    g.check_set(v)?;
    if !u.is_disjoint(v) {
        return Ok(Distance::Finite(0));
    }
    if g.has_distance_cache() {
        let d = g.distances();
        let best = u
            .iter()
            .flat_map(|a| v.iter().map(move |b| d.raw(a, b)))
            .min()
            .unwrap_or(UNREACHED);
        return Ok(Distance::from_raw(best));
    }
    let dist = bfs_distances(g, &u.to_vec(), None);
    Ok(Distance::from_raw(
        v.iter().map(|b| dist[b]).min().unwrap_or(UNREACHED),
    ))
}

/// Vertices at distance at most `r` from `u`. `ball(u, 0) = u`.
pub fn ball(g: &Graph, u: &VertexSet, r: u32) -> Result<VertexSet> {
    g.check_set(u)?;
    Ok(VertexSet::from_mask(&ball_mask(g, &u.to_vec(), r)))
}

/// Whether `G[u]` is connected. The empty set counts as connected.
pub fn is_connected_set(g: &Graph, u: &VertexSet) -> bool {
    if g.check_set(u).is_err() {
        return false;
    }
    let Some(start) = u.first() else {
        return true;
    };
    let outside: Vec<bool> = {
        let mut m = vec![true; g.vertex_count()];
        for v in u.iter() {
            m[v] = false;
        }
        m
    };
    let dist = bfs_distances(g, &[start], Some(&outside));
    u.iter().all(|v| dist[v] != UNREACHED)
}

/// Whether every `y`–`z` path meets `x`.
///
/// Vertices of `y ∩ x` or `z ∩ x` count as met, so the question is whether
/// `z ∖ x` is reachable from `y ∖ x` in `g - x`.
pub fn separates(g: &Graph, x: &VertexSet, y: &VertexSet, z: &VertexSet) -> Result<bool> {
    require_nonempty(y, "y")?;
    require_nonempty(z, "z")?;
    g.check_set(x)?;
    g.check_set(y)?;
    g.check_set(z)?;
    let blocked = x.mask(g.vertex_count());
    let target = z.mask(g.vertex_count());
    Ok(!reachable_mask(g, &y.to_vec(), &target, &blocked))
}

/// A shortest `s`–`t` path in `g - forbidden`, if one exists.
pub fn path_avoiding(
    g: &Graph,
    s: &VertexSet,
    t: &VertexSet,
    forbidden: &VertexSet,
) -> Result<Option<Vec<Vertex>>> {
    require_nonempty(s, "s")?;
    require_nonempty(t, "t")?;
    g.check_set(s)?;
    g.check_set(t)?;
    g.check_set(forbidden)?;
    let blocked = forbidden.mask(g.vertex_count());
    let target = t.mask(g.vertex_count());
    Ok(bfs_path_mask(g, &s.to_vec(), &target, &blocked))
}

pub fn path_graph(n: usize) -> Graph {
    Graph::from_edges(n, (1..n).map(|v| (v - 1, v))).expect("path graph")
}

pub fn cycle_graph(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::InvalidParams(format!("cycle needs at least 3 vertices, got {n}")));
    }
    Graph::from_edges(n, (0..n).map(|v| (v, (v + 1) % n)))
}

pub fn complete_graph(n: usize) -> Graph {
    Graph::from_edges(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)))).expect("complete graph")
}

pub fn star_graph(leaves: usize) -> Graph {
    Graph::from_edges(leaves + 1, (1..=leaves).map(|v| (0, v))).expect("star graph")
}
