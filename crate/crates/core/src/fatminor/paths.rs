use std::collections::VecDeque;

use crate::certificate::{Certificate, Mode, Verdict, Witness};
use crate::error::{Error, Result};
use crate::graph::{ball_mask, bfs_distances, bfs_path_mask, Graph, Vertex, VertexSet};

use super::{Budget, SearchBudget, SearchOutcome, SearchReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Flow {
    Continue,
    Stop,
}

/// Callbacks for [`for_each_minimal_path`].
pub(crate) trait PathVisitor {
    /// Counts one search node; returning false aborts the enumeration.
    fn tick(&mut self) -> bool;

    /// Whether the partial path (last vertex not yet a target) can be cut.
    fn prune(&mut self, _prefix: &[Vertex]) -> bool {
        false
    }

    fn visit(&mut self, path: &[Vertex]) -> Flow;
}

/// Enumerates the chordless paths that start at one of `sources`, end in
/// `is_target`, meet `is_source` only in their first vertex and `is_target`
/// only in their last, and whose inner vertices avoid `blocked`.
///
/// Every path between the two sets contains such a path on a subset of its
/// vertices, so searches over far-apart paths lose nothing by restricting to
/// them. Neighbors are tried in increasing `rank` (then id) when given.
pub(crate) fn for_each_minimal_path(
    g: &Graph,
    sources: &[Vertex],
    is_source: &[bool],
    is_target: &[bool],
    blocked: &[bool],
    rank: Option<&[u32]>,
    visitor: &mut impl PathVisitor,
) -> Flow {
    let n = g.vertex_count();
    let mut e = Enumerator {
        g,
        is_source,
        is_target,
        blocked,
        rank,
        path: Vec::new(),
        on_path: vec![false; n],
        touch: vec![0; n],
        seen: vec![0; n],
        epoch: 0,
        queue: VecDeque::new(),
    };
    for &s in sources {
        if !visitor.tick() {
            return Flow::Stop;
        }
        if is_target[s] {
            if visitor.visit(&[s]) == Flow::Stop {
                return Flow::Stop;
            }
            continue;
        }
        e.push(s);
        let flow = if visitor.prune(&e.path) || !e.can_reach_target() {
            Flow::Continue
        } else {
            e.extend(visitor)
        };
        e.pop();
        if flow == Flow::Stop {
            return Flow::Stop;
        }
    }
    Flow::Continue
}

struct Enumerator<'a> {
    g: &'a Graph,
    is_source: &'a [bool],
    is_target: &'a [bool],
    blocked: &'a [bool],
    rank: Option<&'a [u32]>,
    path: Vec<Vertex>,
    on_path: Vec<bool>,
    /// Number of path vertices adjacent to each vertex.
    touch: Vec<u32>,
    seen: Vec<u32>,
    epoch: u32,
    queue: VecDeque<Vertex>,
}

impl Enumerator<'_> {
    fn push(&mut self, v: Vertex) {
        self.path.push(v);
        self.on_path[v] = true;
        for &w in self.g.neighbors(v) {
            self.touch[w] += 1;
        }
    }

    fn pop(&mut self) {
        let v = self.path.pop().expect("nonempty path");
        self.on_path[v] = false;
        for &w in self.g.neighbors(v) {
            self.touch[w] -= 1;
        }
    }

    /// Whether `w` may follow the current last vertex without a chord.
    fn chordless_next(&self, w: Vertex) -> bool {
        !self.on_path[w] && self.touch[w] == 1
    }

    /// Sound test: a chordless continuation from the last vertex to a target.
    fn can_reach_target(&mut self) -> bool {
        let last = *self.path.last().expect("nonempty path");
        self.epoch += 1;
        let epoch = self.epoch;
        self.queue.clear();
        for &w in self.g.neighbors(last) {
            if !self.chordless_next(w) {
                continue;
            }
            if self.is_target[w] {
                return true;
            }
            if !self.blocked[w] && !self.is_source[w] && self.seen[w] != epoch {
                self.seen[w] = epoch;
                self.queue.push_back(w);
            }
        }
        while let Some(u) = self.queue.pop_front() {
            for &w in self.g.neighbors(u) {
                if self.on_path[w] || self.touch[w] != 0 || self.seen[w] == epoch {
                    continue;
                }
                if self.is_target[w] {
                    return true;
                }
                if !self.blocked[w] && !self.is_source[w] {
                    self.seen[w] = epoch;
                    self.queue.push_back(w);
                }
            }
        }
        false
    }

    fn extend(&mut self, visitor: &mut impl PathVisitor) -> Flow {
        let last = *self.path.last().expect("nonempty path");
        let mut next: Vec<Vertex> = self
            .g
            .neighbors(last)
            .iter()
            .copied()
            .filter(|&w| self.chordless_next(w))
            .collect();
        if let Some(rank) = self.rank {
            next.sort_by_key(|&w| (rank[w], w));
        }
        for w in next {
            if !visitor.tick() {
                return Flow::Stop;
            }
            if self.is_target[w] {
                self.push(w);
                let flow = visitor.visit(&self.path);
                self.pop();
                if flow == Flow::Stop {
                    return Flow::Stop;
                }
                continue;
            }
            if self.blocked[w] || self.is_source[w] {
                continue;
            }
            self.push(w);
            let flow = if visitor.prune(&self.path) || !self.can_reach_target() {
                Flow::Continue
            } else {
                self.extend(visitor)
            };
            self.pop();
            if flow == Flow::Stop {
                return Flow::Stop;
            }
        }
        Flow::Continue
    }
}

struct FarSystem<'a> {
    g: &'a Graph,
    is_a: Vec<bool>,
    is_b: Vec<bool>,
    a: Vec<Vertex>,
    k: u32,
    count: usize,
    /// Multiplicity of each vertex in the balls around chosen paths.
    forbid: Vec<u32>,
    chosen: Vec<Vec<Vertex>>,
    budget: Budget,
    result: Option<Vec<Vec<Vertex>>>,
}

impl FarSystem<'_> {
    fn blocked(&self) -> Vec<bool> {
        self.forbid.iter().map(|&c| c > 0).collect()
    }

    fn mark(&mut self, path: &[Vertex], delta: i32) {
        let ball = ball_mask(self.g, path, self.k - 1);
        for (v, inside) in ball.into_iter().enumerate() {
            if inside {
                self.forbid[v] = (self.forbid[v] as i32 + delta) as u32;
            }
        }
    }

    fn last_path(&self) -> Option<Vec<Vertex>> {
        let blocked = self.blocked();
        let targets: Vec<bool> = (0..self.is_b.len()).map(|v| self.is_b[v] && !blocked[v]).collect();
        bfs_path_mask(self.g, &self.a, &targets, &blocked)
    }

    /// Places path number `chosen.len()`; returns `Stop` once done or out of budget.
    fn place(&mut self) -> Flow {
        if self.chosen.len() + 1 == self.count {
            if let Some(p) = self.last_path() {
                let mut all = self.chosen.clone();
                all.push(p);
                self.result = Some(all);
                return Flow::Stop;
            }
            return Flow::Continue;
        }
        let blocked = self.blocked();
        let min_start = self.chosen.last().map(|p| p[0]);
        let sources: Vec<Vertex> = self
            .a
            .iter()
            .copied()
            .filter(|&s| !blocked[s] && min_start.is_none_or(|m| s > m))
            .collect();
        let targets: Vec<bool> = (0..self.is_b.len()).map(|v| self.is_b[v] && !blocked[v]).collect();
        let is_a = self.is_a.clone();
        let g = self.g;
        for_each_minimal_path(g, &sources, &is_a, &targets, &blocked, None, self)
    }
}

impl PathVisitor for FarSystem<'_> {
    fn tick(&mut self) -> bool {
        self.budget.tick()
    }

    fn prune(&mut self, prefix: &[Vertex]) -> bool {
        // Every later path must avoid the ball around this prefix.
        let ball = ball_mask(self.g, prefix, self.k - 1);
        let blocked: Vec<bool> = (0..ball.len()).map(|v| ball[v] || self.forbid[v] > 0).collect();
        let targets: Vec<bool> = (0..ball.len()).map(|v| self.is_b[v] && !blocked[v]).collect();
        bfs_path_mask(self.g, &self.a, &targets, &blocked).is_none()
    }

    fn visit(&mut self, path: &[Vertex]) -> Flow {
        self.mark(path, 1);
        self.chosen.push(path.to_vec());
        let flow = self.place();
        self.chosen.pop();
        self.mark(path, -1);
        flow
    }
}

/// Searches for `count` paths between `a` and `b` that are pairwise at
/// distance at least `k`. With `k = 0` the condition is vacuous and one path
/// repeated `count` times is reported.
pub fn find_far_path_system(
    g: &Graph,
    a: &VertexSet,
    b: &VertexSet,
    count: usize,
    k: u32,
    budget: &SearchBudget,
) -> Result<SearchReport<Vec<Vec<Vertex>>>> {
    g.check_set(a)?;
    g.check_set(b)?;
    if a.len() < count || b.len() < count {
        return Err(Error::Precondition(format!(
            "need at least {count} vertices on each side, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if count == 0 {
        return Ok(SearchReport {
            outcome: SearchOutcome::Found(Vec::new()),
            nodes: 0,
        });
    }
    let n = g.vertex_count();
    if k == 0 {
        let found = bfs_path_mask(g, &a.to_vec(), &b.mask(n), &vec![false; n]);
        return Ok(SearchReport {
            outcome: match found {
                Some(p) => SearchOutcome::Found(vec![p; count]),
                None => SearchOutcome::ExhaustedNone,
            },
            nodes: 1,
        });
    }
    let mut search = FarSystem {
        g,
        is_a: a.mask(n),
        is_b: b.mask(n),
        a: a.to_vec(),
        k,
        count,
        forbid: vec![0; n],
        chosen: Vec::new(),
        budget: Budget::new(budget),
        result: None,
    };
    search.place();
    let outcome = match search.result.take() {
        Some(paths) => SearchOutcome::Found(paths),
        None if search.budget.exceeded() => SearchOutcome::BudgetExceeded,
        None => SearchOutcome::ExhaustedNone,
    };
    Ok(SearchReport {
        outcome,
        nodes: search.budget.nodes,
    })
}

/// Checks a claimed path system: each path joins `sources` to `targets`,
/// avoids `avoided`, and distinct paths are at least `k` apart.
pub fn validate_path_system(
    g: &Graph,
    sources: &VertexSet,
    targets: &VertexSet,
    paths: &[Vec<Vertex>],
    k: u32,
    avoided: &VertexSet,
) -> Certificate {
    let mut cert = Certificate::new("path-system", Mode::Exhaustive, Verdict::Pass)
        .param("K", k)
        .param("paths", paths.len());
    let mut fail = |detail: String| {
        cert.verdict = Verdict::Fail;
        cert.witness = Some(Witness::Violation { detail });
    };
    for (i, p) in paths.iter().enumerate() {
        if !g.is_path(p) {
            fail(format!("path {i} is not a path of the graph"));
            return cert;
        }
        if !sources.contains(p[0]) || !targets.contains(p[p.len() - 1]) {
            fail(format!("path {i} does not run from the sources to the targets"));
            return cert;
        }
        if let Some(&v) = p.iter().find(|&&v| avoided.contains(v)) {
            fail(format!("path {i} meets avoided vertex {v}"));
            return cert;
        }
    }
    if k > 0 {
        for i in 0..paths.len() {
            let dist = bfs_distances(g, &paths[i], None);
            for (j, q) in paths.iter().enumerate().skip(i + 1) {
                let d = q.iter().map(|&v| dist[v]).min().unwrap_or(u32::MAX);
                if d < k {
                    fail(format!("paths {i} and {j} are at distance {d} < {k}"));
                    return cert;
                }
            }
        }
    }
    cert
}

/// Why a set failed to be fat path-connected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PathConnectivity {
    TooSmall { size: usize, required: usize },
    TooClose { u: Vertex, v: Vertex, distance: Option<u32> },
    NoSystem { a: Vec<Vertex>, b: Vec<Vertex> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathConnectivityReport {
    /// `Found` carries the number of subset pairs checked.
    pub outcome: SearchOutcome<u64>,
    pub nodes: u64,
    pub failure: Option<PathConnectivity>,
}

/// Calls `f` on every `k`-subset of `items` in lexicographic order.
fn for_each_subset(items: &[Vertex], k: usize, f: &mut impl FnMut(&[Vertex]) -> bool) -> bool {
    fn rec(items: &[Vertex], k: usize, start: usize, cur: &mut Vec<Vertex>, f: &mut impl FnMut(&[Vertex]) -> bool) -> bool {
        if cur.len() == k {
            return f(cur);
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            let go = rec(items, k, i + 1, cur, f);
            cur.pop();
            if !go {
                return false;
            }
        }
        true
    }
    rec(items, k, 0, &mut Vec::new(), f)
}

/// Decides whether `w` is `k`-fat `n`-path-connected: `|w| >= 2n`, pairwise
/// distance at least `k`, and every two equal-size subsets of size at most
/// `n` are joined by that many paths pairwise at least `k` apart.
pub fn is_fat_path_connected(
    g: &Graph,
    w: &VertexSet,
    k: u32,
    n: usize,
    budget: &SearchBudget,
) -> Result<PathConnectivityReport> {
    g.check_set(w)?;
    let fail = |failure, nodes| PathConnectivityReport {
        outcome: SearchOutcome::ExhaustedNone,
        nodes,
        failure: Some(failure),
    };
    if w.len() < 2 * n {
        return Ok(fail(
            PathConnectivity::TooSmall {
                size: w.len(),
                required: 2 * n,
            },
            0,
        ));
    }
    let members = w.to_vec();
    for (i, &u) in members.iter().enumerate() {
        let dist = bfs_distances(g, &[u], None);
        for &v in &members[i + 1..] {
            if dist[v] < k {
                return Ok(fail(
                    PathConnectivity::TooClose {
                        u,
                        v,
                        distance: Some(dist[v]),
                    },
                    0,
                ));
            }
        }
    }

    let mut nodes = 0u64;
    let mut pairs = 0u64;
    let mut failure = None;
    let mut exceeded = false;
    let mut error = None;
    'sizes: for size in 1..=n {
        let mut subsets: Vec<Vec<Vertex>> = Vec::new();
        for_each_subset(&members, size, &mut |s| {
            subsets.push(s.to_vec());
            true
        });
        for a in &subsets {
            for b in &subsets {
                let remaining = SearchBudget {
                    node_limit: budget.node_limit.saturating_sub(nodes),
                    time_limit: budget.time_limit,
                };
                let report = match find_far_path_system(g, &a.as_slice().into(), &b.as_slice().into(), size, k, &remaining) {
                    Ok(r) => r,
                    Err(e) => {
                        error = Some(e);
                        break 'sizes;
                    }
                };
                nodes += report.nodes;
                pairs += 1;
                match report.outcome {
                    SearchOutcome::Found(_) => {}
                    SearchOutcome::ExhaustedNone => {
                        failure = Some(PathConnectivity::NoSystem {
                            a: a.clone(),
                            b: b.clone(),
                        });
                        break 'sizes;
                    }
                    SearchOutcome::BudgetExceeded => {
                        exceeded = true;
                        break 'sizes;
                    }
                }
            }
        }
    }
    if let Some(e) = error {
        return Err(e);
    }
    Ok(match (failure, exceeded) {
        (Some(f), _) => fail(f, nodes),
        (None, true) => PathConnectivityReport {
            outcome: SearchOutcome::BudgetExceeded,
            nodes,
            failure: None,
        },
        (None, false) => PathConnectivityReport {
            outcome: SearchOutcome::Found(pairs),
            nodes,
            failure: None,
        },
    })
}
