use std::collections::{BTreeMap, HashSet, VecDeque};

use crate::certificate::Verdict;
use crate::error::{Error, Result};
use crate::graph::{ball_mask, bfs_distances, Graph, Vertex, VertexSet};

use super::paths::{for_each_minimal_path, Flow, PathVisitor};
use super::{validate_model, Budget, FatModel, SearchBudget, SearchOutcome, SearchReport};

/// Branch-set shapes searched for a pattern vertex. Any model can be shrunk
/// to one whose branch sets have these shapes without breaking fatness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Shape {
    /// A single vertex.
    Single,
    /// An induced path with endpoints at least `K` apart, used for degree 2.
    Path,
    /// A connected set with at most this many non-cut vertices.
    Tree(usize),
}

#[derive(Clone, Debug)]
struct Candidate {
    verts: Vec<Vertex>,
    /// Where branch paths may attach.
    ends: Vec<Vertex>,
}

fn shape_for(degree: usize, k: u32) -> Shape {
    match degree {
        0 | 1 => Shape::Single,
        2 if k == 0 => Shape::Single,
        2 => Shape::Path,
        d => Shape::Tree(d),
    }
}

fn cycle_rank(g: &Graph) -> usize {
    let mut seen = vec![false; g.vertex_count()];
    let mut components = 0;
    for s in g.vertices() {
        if seen[s] {
            continue;
        }
        components += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(u) = stack.pop() {
            for &w in g.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    g.edge_count() + components - g.vertex_count()
}

/// Pattern vertices in breadth-first order, component by component, with
/// each vertex's breadth-first parent.
fn placement_order(pattern: &Graph) -> (Vec<Vertex>, Vec<Option<Vertex>>) {
    let mut seen = vec![false; pattern.vertex_count()];
    let mut parent = vec![None; pattern.vertex_count()];
    let mut order = Vec::new();
    for s in pattern.vertices() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &w in pattern.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(u);
                    queue.push_back(w);
                }
            }
        }
    }
    (order, parent)
}

/// Vertices of `set` whose removal leaves `g[set]` connected.
fn non_cut_vertices(g: &Graph, set: &[Vertex], member: &mut [bool]) -> Vec<Vertex> {
    let mut out = Vec::new();
    if set.len() == 1 {
        return set.to_vec();
    }
    for &v in set {
        member[v] = false;
        let start = *set.iter().find(|&&u| u != v).expect("two members");
        let mut stack = vec![start];
        let mut reached = vec![start];
        member[start] = false;
        while let Some(u) = stack.pop() {
            for &w in g.neighbors(u) {
                if member[w] {
                    member[w] = false;
                    reached.push(w);
                    stack.push(w);
                }
            }
        }
        if reached.len() == set.len() - 1 {
            out.push(v);
        }
        for &u in set {
            member[u] = true;
        }
    }
    out
}

struct CandidateList {
    list: Vec<Candidate>,
    /// Indices into `list` of the candidates having each vertex as an end.
    by_end: Vec<Vec<usize>>,
}

struct Candidates<'g> {
    g: &'g Graph,
    k: u32,
    cache: BTreeMap<(Shape, usize), CandidateList>,
    /// Connected sets of the most recent size, grown one size at a time.
    connected: Vec<Vec<Vec<Vertex>>>,
}

impl<'g> Candidates<'g> {
    fn new(g: &'g Graph, k: u32) -> Self {
        Self {
            g,
            k,
            cache: BTreeMap::new(),
            connected: Vec::new(),
        }
    }

    /// Candidates of one shape and size, sorted lexicographically. `None`
    /// when generation ran out of budget.
    fn get(&mut self, shape: Shape, size: usize, budget: &mut Budget) -> Option<&CandidateList> {
        if !self.cache.contains_key(&(shape, size)) {
            let list = match shape {
                Shape::Single if size == 1 => self
                    .g
                    .vertices()
                    .map(|v| Candidate {
                        verts: vec![v],
                        ends: vec![v],
                    })
                    .collect(),
                Shape::Single => Vec::new(),
                Shape::Path => self.paths(size, budget)?,
                Shape::Tree(d) => self.trees(d, size, budget)?,
            };
            let mut by_end = vec![Vec::new(); self.g.vertex_count()];
            for (i, c) in list.iter().enumerate() {
                for &v in &c.ends {
                    by_end[v].push(i);
                }
            }
            self.cache.insert((shape, size), CandidateList { list, by_end });
        }
        Some(&self.cache[&(shape, size)])
    }

    fn paths(&self, size: usize, budget: &mut Budget) -> Option<Vec<Candidate>> {
        if size < 2 {
            return Some(Vec::new());
        }
        let g = self.g;
        let n = g.vertex_count();
        let mut out = Vec::new();
        let mut touch = vec![0u32; n];
        let mut on = vec![false; n];
        let mut path = Vec::new();
        for s in g.vertices() {
            let dist = bfs_distances(g, &[s], None);
            let mut ok = true;
            grow_induced(g, s, size, &mut path, &mut on, &mut touch, budget, &mut ok, &mut |p| {
                let last = p[p.len() - 1];
                if last > s && dist[last] >= self.k {
                    let mut verts = p.to_vec();
                    verts.sort_unstable();
                    out.push(Candidate {
                        verts,
                        ends: vec![s, last],
                    });
                }
            });
            if !ok {
                return None;
            }
        }
        out.sort_by(|a, b| a.verts.cmp(&b.verts).then(a.ends.cmp(&b.ends)));
        Some(out)
    }

    fn trees(&mut self, d: usize, size: usize, budget: &mut Budget) -> Option<Vec<Candidate>> {
        let g = self.g;
        let n = g.vertex_count();
        if size == 0 || size > n {
            return Some(Vec::new());
        }
        while self.connected.len() < size {
            let next = if self.connected.is_empty() {
                g.vertices().map(|v| vec![v]).collect()
            } else {
                let prev = self.connected.last().expect("nonempty");
                let mut seen: HashSet<Vec<Vertex>> = HashSet::new();
                let mut member = vec![false; n];
                for set in prev {
                    for &v in set {
                        member[v] = true;
                    }
                    for &v in set {
                        for &w in g.neighbors(v) {
                            if member[w] {
                                continue;
                            }
                            if !budget.tick() {
                                return None;
                            }
                            let mut grown = set.clone();
                            let at = grown.binary_search(&w).unwrap_err();
                            grown.insert(at, w);
                            seen.insert(grown);
                        }
                    }
                    for &v in set {
                        member[v] = false;
                    }
                }
                let mut next: Vec<Vec<Vertex>> = seen.into_iter().collect();
                next.sort_unstable();
                next
            };
            self.connected.push(next);
        }
        let mut member = vec![false; n];
        let mut out = Vec::new();
        for set in &self.connected[size - 1] {
            if self.k >= 1 && d >= 2 && size < d {
                break;
            }
            for &v in set {
                member[v] = true;
            }
            let free = non_cut_vertices(g, set, &mut member);
            for &v in set {
                member[v] = false;
            }
            if free.len() > d {
                continue;
            }
            if self.k >= 1 && !pairwise_far(g, &free, self.k) {
                continue;
            }
            out.push(Candidate {
                verts: set.clone(),
                ends: set.clone(),
            });
        }
        Some(out)
    }
}

fn pairwise_far(g: &Graph, verts: &[Vertex], k: u32) -> bool {
    verts.iter().enumerate().all(|(i, &u)| {
        let dist = bfs_distances(g, &[u], None);
        verts[i + 1..].iter().all(|&v| dist[v] >= k)
    })
}

/// Calls `emit` on every induced path of `size` vertices starting at `s`.
#[allow(clippy::too_many_arguments)]
fn grow_induced(
    g: &Graph,
    s: Vertex,
    size: usize,
    path: &mut Vec<Vertex>,
    on: &mut [bool],
    touch: &mut [u32],
    budget: &mut Budget,
    ok: &mut bool,
    emit: &mut impl FnMut(&[Vertex]),
) {
    fn push(g: &Graph, v: Vertex, path: &mut Vec<Vertex>, on: &mut [bool], touch: &mut [u32]) {
        path.push(v);
        on[v] = true;
        for &w in g.neighbors(v) {
            touch[w] += 1;
        }
    }
    fn pop(g: &Graph, path: &mut Vec<Vertex>, on: &mut [bool], touch: &mut [u32]) {
        let v = path.pop().expect("nonempty");
        on[v] = false;
        for &w in g.neighbors(v) {
            touch[w] -= 1;
        }
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        g: &Graph,
        size: usize,
        path: &mut Vec<Vertex>,
        on: &mut [bool],
        touch: &mut [u32],
        budget: &mut Budget,
        ok: &mut bool,
        emit: &mut impl FnMut(&[Vertex]),
    ) {
        if !*ok {
            return;
        }
        if !budget.tick() {
            *ok = false;
            return;
        }
        if path.len() == size {
            emit(path);
            return;
        }
        let last = path[path.len() - 1];
        for &w in g.neighbors(last) {
            if !on[w] && touch[w] == 1 {
                push(g, w, path, on, touch);
                rec(g, size, path, on, touch, budget, ok, emit);
                pop(g, path, on, touch);
            }
        }
    }
    push(g, s, path, on, touch);
    rec(g, size, path, on, touch, budget, ok, emit);
    pop(g, path, on, touch);
}


struct Search<'g> {
    g: &'g Graph,
    pattern: &'g Graph,
    k: u32,
    order: Vec<Vertex>,
    /// Breadth-first parent of each pattern vertex.
    parent: Vec<Option<Vertex>>,
    /// Earlier-placed neighbors other than the parent, by placement index.
    back: Vec<Vec<Vertex>>,
    shapes: Vec<Shape>,
    candidates: Candidates<'g>,
    placed: Vec<Option<Candidate>>,
    /// Radius `K-1` ball around each placed branch set (the set itself for `K = 0`).
    balls: Vec<Option<Vec<bool>>>,
    /// Number of placed balls holding each vertex.
    near: Vec<u32>,
    occupied: Vec<bool>,
    used: usize,
    routed: BTreeMap<(Vertex, Vertex), Vec<Vertex>>,
    /// Number of routed paths that rule out each vertex for later objects:
    /// their radius `K-1` balls, or their inner vertices for `K = 0`.
    path_block: Vec<u32>,
    /// Placement index and back-edge position of the routing in progress.
    frame: (usize, usize),
    budget: Budget,
    result: Option<FatModel>,
}

fn edge_key(a: Vertex, b: Vertex) -> (Vertex, Vertex) {
    (a.min(b), a.max(b))
}

impl<'g> Search<'g> {
    fn in_ball(&self, z: Vertex, v: Vertex) -> bool {
        self.balls[z].as_ref().is_some_and(|b| b[v])
    }

    /// Inner vertices of an `(a, b)` branch path must avoid these.
    fn inner_blocked(&self, a: Vertex, b: Vertex) -> Vec<bool> {
        (0..self.g.vertex_count())
            .map(|v| {
                if self.occupied[v] || self.path_block[v] > 0 {
                    return true;
                }
                let own = [a, b].iter().filter(|&&z| self.in_ball(z, v)).count() as u32;
                self.near[v] > own
            })
            .collect()
    }

    /// Whether `v` may start or end a new branch path.
    fn endpoint_free(&self, v: Vertex) -> bool {
        self.k == 0 || self.path_block[v] == 0
    }

    fn free_terminals(&self, x: Vertex) -> Vec<Vertex> {
        let cand = self.placed[x].as_ref().expect("placed");
        cand.ends.iter().copied().filter(|&v| self.endpoint_free(v)).collect()
    }

    /// Whether a new branch set may use all of `verts`.
    fn set_free(&self, verts: &[Vertex]) -> bool {
        verts
            .iter()
            .all(|&v| !self.occupied[v] && self.near[v] == 0 && self.path_block[v] == 0)
    }

    /// Sound test that `U_a` and `U_b` can still be joined, directly or
    /// through an unplaced branch set.
    fn link_possible(&self, a: Vertex, b: Vertex) -> bool {
        let blocked = self.inner_blocked(a, b);
        let n = self.g.vertex_count();
        let mut target = vec![false; n];
        for v in self.free_terminals(b) {
            target[v] = true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for s in self.free_terminals(a) {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &w in self.g.neighbors(u) {
                if seen[w] {
                    continue;
                }
                if target[w] {
                    return true;
                }
                if !blocked[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        false
    }

    /// Checks every unplaced vertex against its placed neighbors.
    fn lookahead(&self, from: usize) -> bool {
        for &y in &self.order[from..] {
            let placed: Vec<Vertex> = self
                .pattern
                .neighbors(y)
                .iter()
                .copied()
                .filter(|&a| self.placed[a].is_some())
                .collect();
            if placed.iter().any(|&a| self.free_terminals(a).is_empty()) {
                return false;
            }
            for (i, &a) in placed.iter().enumerate() {
                for &b in &placed[i + 1..] {
                    if !self.link_possible(a, b) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn put(&mut self, x: Vertex, cand: &Candidate) {
        let ball = if self.k >= 1 {
            ball_mask(self.g, &cand.verts, self.k - 1)
        } else {
            VertexSet::from(cand.verts.as_slice()).mask(self.g.vertex_count())
        };
        for (v, &inside) in ball.iter().enumerate() {
            if inside {
                self.near[v] += 1;
            }
        }
        for &v in &cand.verts {
            self.occupied[v] = true;
        }
        self.used += cand.verts.len();
        self.balls[x] = Some(ball);
        self.placed[x] = Some(cand.clone());
    }

    fn take(&mut self, x: Vertex) {
        let cand = self.placed[x].take().expect("placed");
        let ball = self.balls[x].take().expect("placed");
        for (v, &inside) in ball.iter().enumerate() {
            if inside {
                self.near[v] -= 1;
            }
        }
        for &v in &cand.verts {
            self.occupied[v] = false;
        }
        self.used -= cand.verts.len();
    }

    fn footprint(&self, path: &[Vertex]) -> Vec<Vertex> {
        if self.k >= 1 {
            let ball = ball_mask(self.g, path, self.k - 1);
            (0..ball.len()).filter(|&v| ball[v]).collect()
        } else {
            path[1..path.len() - 1].to_vec()
        }
    }

    fn add_path(&mut self, a: Vertex, b: Vertex, path: &[Vertex]) -> Vec<Vertex> {
        let footprint = self.footprint(path);
        for &v in &footprint {
            self.path_block[v] += 1;
        }
        self.routed.insert(edge_key(a, b), path.to_vec());
        footprint
    }

    fn remove_path(&mut self, a: Vertex, b: Vertex, footprint: &[Vertex]) {
        for &v in footprint {
            self.path_block[v] -= 1;
        }
        self.routed.remove(&edge_key(a, b));
    }

    /// Chordless paths with exactly `len` edges leaving `U_p` at a free
    /// terminal, with admissible inner vertices and a free last vertex.
    /// The flag reports whether some admissible prefix of that length exists
    /// at all; without one no longer path exists either.
    fn parent_paths(&mut self, p: Vertex, x: Vertex, len: usize) -> Option<(Vec<Vec<Vertex>>, bool)> {
        let g = self.g;
        let n = g.vertex_count();
        // `x` is unplaced, so only the ball of `U_p` is exempt.
        let blocked = self.inner_blocked(p, x);
        let mut out = Vec::new();
        let mut extendable = false;
        let mut touch = vec![0u32; n];
        let mut on = vec![false; n];
        let mut path = Vec::with_capacity(len + 1);
        for s in self.free_terminals(p) {
            let ok = self.chordless(s, len, &blocked, &mut path, &mut on, &mut touch, &mut out, &mut extendable);
            if !ok {
                return None;
            }
        }
        Some((out, extendable))
    }

    #[allow(clippy::too_many_arguments)]
    fn chordless(
        &mut self,
        s: Vertex,
        len: usize,
        blocked: &[bool],
        path: &mut Vec<Vertex>,
        on: &mut [bool],
        touch: &mut [u32],
        out: &mut Vec<Vec<Vertex>>,
        extendable: &mut bool,
    ) -> bool {
        let g = self.g;
        let push = |v: Vertex, path: &mut Vec<Vertex>, on: &mut [bool], touch: &mut [u32]| {
            path.push(v);
            on[v] = true;
            for &w in g.neighbors(v) {
                touch[w] += 1;
            }
        };
        let pop = |path: &mut Vec<Vertex>, on: &mut [bool], touch: &mut [u32]| {
            let v = path.pop().expect("nonempty");
            on[v] = false;
            for &w in g.neighbors(v) {
                touch[w] -= 1;
            }
        };
        // Iterative depth-first search; each frame remembers the next neighbor index.
        push(s, path, on, touch);
        let mut cursor = vec![0usize];
        while let Some(&i) = cursor.last() {
            let last = *path.last().expect("nonempty");
            let depth = path.len() - 1;
            let nbrs = g.neighbors(last);
            if i >= nbrs.len() {
                cursor.pop();
                pop(path, on, touch);
                continue;
            }
            *cursor.last_mut().expect("nonempty") += 1;
            let w = nbrs[i];
            if on[w] || touch[w] != 1 {
                continue;
            }
            if !self.budget.tick() {
                while !path.is_empty() {
                    pop(path, on, touch);
                }
                return false;
            }
            if depth + 1 == len {
                if !blocked[w] {
                    *extendable = true;
                }
                if !self.occupied[w] && self.near[w] == 0 && self.path_block[w] == 0 {
                    let mut full = path.clone();
                    full.push(w);
                    out.push(full);
                }
            } else if !blocked[w] {
                push(w, path, on, touch);
                cursor.push(0);
            }
        }
        true
    }

    /// Places `order[idx]`, routing the branch path from its parent first.
    #[allow(clippy::needless_range_loop)]
    fn place(&mut self, idx: usize) -> bool {
        if idx == self.order.len() {
            self.result = Some(self.model());
            return true;
        }
        let x = self.order[idx];
        let shape = self.shapes[x];
        let n = self.g.vertex_count();
        let remaining = self.order.len() - idx - 1;
        let max_size = n.saturating_sub(self.used + remaining);
        let Some(p) = self.parent[x] else {
            for size in 1..=max_size {
                let Some(entry) = self.candidates.get(shape, size, &mut self.budget) else {
                    return false;
                };
                let list = entry.list.clone();
                for cand in list {
                    if !self.budget.tick() {
                        return false;
                    }
                    if !self.set_free(&cand.verts) {
                        continue;
                    }
                    self.put(x, &cand);
                    if self.lookahead(idx + 1) && self.route_back(idx, 0) {
                        return true;
                    }
                    self.take(x);
                    if self.budget.exceeded() {
                        return false;
                    }
                }
            }
            return false;
        };

        // Short paths and small sets first: pairs ordered by `len + size`.
        let min_len = (self.k as usize).max(1);
        let mut by_len: Vec<Option<Vec<Vec<Vertex>>>> = vec![None; n];
        let mut max_len = n.saturating_sub(1);
        for total in min_len + 1..=max_len + max_size {
            for len in min_len..=max_len.min(total - 1) {
                let size = total - len;
                if size > max_size {
                    continue;
                }
                if by_len[len].is_none() {
                    let Some((paths, extendable)) = self.parent_paths(p, x, len) else {
                        return false;
                    };
                    if !extendable {
                        max_len = max_len.min(len);
                    }
                    by_len[len] = Some(paths);
                }
                let paths = by_len[len].clone().expect("computed");
                if paths.is_empty() {
                    continue;
                }
                let Some(entry) = self.candidates.get(shape, size, &mut self.budget) else {
                    return false;
                };
                let (list, by_end) = (entry.list.clone(), entry.by_end.clone());
                for path in paths {
                    let v = path[path.len() - 1];
                    let inner = &path[1..path.len() - 1];
                    for &ci in &by_end[v] {
                        if !self.budget.tick() {
                            return false;
                        }
                        let cand = &list[ci];
                        if !self.set_free(&cand.verts) || inner.iter().any(|u| cand.verts.binary_search(u).is_ok()) {
                            continue;
                        }
                        let cand = cand.clone();
                        self.put(x, &cand);
                        let footprint = self.add_path(p, x, &path);
                        if self.lookahead(idx + 1) && self.route_back(idx, 0) {
                            return true;
                        }
                        self.remove_path(p, x, &footprint);
                        self.take(x);
                        if self.budget.exceeded() {
                            return false;
                        }
                    }
                }
            }
        }
        false
    }

    /// Routes the back edges of `order[idx]` from position `pos` on, then
    /// continues with the next vertex.
    fn route_back(&mut self, idx: usize, pos: usize) -> bool {
        let x = self.order[idx];
        if pos == self.back[idx].len() {
            return self.place(idx + 1);
        }
        let b = self.back[idx][pos];
        let n = self.g.vertex_count();
        let blocked = self.inner_blocked(x, b);
        let sources = self.free_terminals(x);
        let mut is_target = vec![false; n];
        for v in self.free_terminals(b) {
            is_target[v] = true;
        }
        let is_source = VertexSet::from(self.placed[x].as_ref().expect("placed").verts.as_slice()).mask(n);
        let targets: Vec<Vertex> = (0..n).filter(|&v| is_target[v]).collect();
        let rank = bfs_distances(self.g, &targets, Some(&blocked));
        self.frame = (idx, pos);
        let g = self.g;
        for_each_minimal_path(g, &sources, &is_source, &is_target, &blocked, Some(&rank), self);
        self.result.is_some()
    }

    fn model(&self) -> FatModel {
        FatModel {
            pattern: self.pattern.clone(),
            branch_sets: self
                .placed
                .iter()
                .map(|c| VertexSet::from(c.as_ref().expect("placed").verts.as_slice()))
                .collect(),
            branch_paths: self.routed.clone(),
            fatness: self.k,
        }
    }
}

impl PathVisitor for Search<'_> {
    fn tick(&mut self) -> bool {
        self.budget.tick()
    }

    fn visit(&mut self, path: &[Vertex]) -> Flow {
        if path.len() < 2 {
            return Flow::Continue;
        }
        let (idx, pos) = self.frame;
        let (x, b) = (self.order[idx], self.back[idx][pos]);
        let footprint = self.add_path(x, b, path);
        let rest_ok = self.back[idx][pos + 1..].iter().all(|&c| self.link_possible(x, c)) && self.lookahead(idx + 1);
        let done = rest_ok && self.route_back(idx, pos + 1);
        self.frame = (idx, pos);
        if done {
            return Flow::Stop;
        }
        self.remove_path(x, b, &footprint);
        if self.budget.exceeded() {
            Flow::Stop
        } else {
            Flow::Continue
        }
    }
}

/// Exhaustive search for a `k`-fat model of `pattern` in `g`.
///
/// Branch sets are restricted to minimal shapes and branch paths to chordless
/// paths; both restrictions keep every model reachable up to shrinking.
/// `k = 0` asks for an ordinary minor model.
pub fn find_fat_model(g: &Graph, pattern: &Graph, k: u32, budget: &SearchBudget) -> Result<SearchReport<FatModel>> {
    let p = pattern.vertex_count();
    if p == 0 {
        return Ok(SearchReport {
            outcome: SearchOutcome::Found(FatModel {
                pattern: pattern.clone(),
                branch_sets: Vec::new(),
                branch_paths: BTreeMap::new(),
                fatness: k,
            }),
            nodes: 0,
        });
    }
    if p > g.vertex_count() || cycle_rank(pattern) > cycle_rank(g) {
        return Ok(SearchReport {
            outcome: SearchOutcome::ExhaustedNone,
            nodes: 0,
        });
    }
    let n = g.vertex_count();
    let (order, parent) = placement_order(pattern);
    let mut position = vec![0; p];
    for (i, &x) in order.iter().enumerate() {
        position[x] = i;
    }
    let back = order
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            pattern
                .neighbors(x)
                .iter()
                .copied()
                .filter(|&y| position[y] < i && Some(y) != parent[x])
                .collect()
        })
        .collect();
    let mut search = Search {
        g,
        pattern,
        k,
        order,
        parent,
        back,
        shapes: pattern.vertices().map(|x| shape_for(pattern.degree(x), k)).collect(),
        candidates: Candidates::new(g, k),
        placed: vec![None; p],
        balls: vec![None; p],
        near: vec![0; n],
        occupied: vec![false; n],
        used: 0,
        routed: BTreeMap::new(),
        path_block: vec![0; n],
        frame: (0, 0),
        budget: Budget::new(budget),
        result: None,
    };
    search.place(0);
    let outcome = match search.result.take() {
        Some(model) => {
            let cert = validate_model(g, &model)?;
            if cert.verdict != Verdict::Pass {
                return Err(Error::InvalidGraph(format!(
                    "fat-model search produced an invalid model: {:?}",
                    cert.witness
                )));
            }
            SearchOutcome::Found(model)
        }
        None if search.budget.exceeded() => SearchOutcome::BudgetExceeded,
        None => SearchOutcome::ExhaustedNone,
    };
    Ok(SearchReport {
        outcome,
        nodes: search.budget.nodes,
    })
}
