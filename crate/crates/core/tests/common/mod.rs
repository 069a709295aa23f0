//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use ghdm::construction::LabeledGraph;
use ghdm::fatminor::FatModel;
use ghdm::treedec::TreeDecomposition;
use ghdm::{Graph, Vertex, VertexSet};
use proptest::prelude::*;

pub fn bfs(g: &Graph, sources: &[Vertex], blocked: &[bool]) -> Vec<Option<u32>> {
    let mut dist = vec![None; g.vertex_count()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if !blocked[s] && dist[s].is_none() {
            dist[s] = Some(0);
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap();
        for &v in g.neighbors(u) {
            if !blocked[v] && dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

pub fn open(g: &Graph) -> Vec<bool> {
    vec![false; g.vertex_count()]
}

pub fn set_distance(g: &Graph, a: &VertexSet, b: &VertexSet) -> Option<u32> {
    let dist = bfs(g, &a.to_vec(), &open(g));
    b.iter().filter_map(|v| dist[v]).min()
}

pub fn ball_oracle(g: &Graph, centers: &[Vertex], r: u32) -> VertexSet {
    bfs(g, centers, &open(g))
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_some_and(|d| d <= r))
        .map(|(v, _)| v)
        .collect()
}

pub fn connected_oracle(g: &Graph, set: &VertexSet) -> bool {
    let Some(first) = set.first() else { return false };
    let blocked: Vec<bool> = g.vertices().map(|v| !set.contains(v)).collect();
    let dist = bfs(g, &[first], &blocked);
    set.iter().all(|v| dist[v].is_some())
}

pub fn separates_oracle(g: &Graph, x: &VertexSet, y: &VertexSet, z: &VertexSet) -> bool {
    let blocked = x.mask(g.vertex_count());
    let dist = bfs(g, &y.to_vec(), &blocked);
    !z.iter().any(|v| dist[v].is_some())
}

pub fn is_walk_path(g: &Graph, p: &[Vertex]) -> bool {
    let distinct: VertexSet = p.iter().copied().collect();
    !p.is_empty() && distinct.len() == p.len() && p.windows(2).all(|w| g.neighbors(w[0]).contains(&w[1]))
}

/// Every partial map `V(G) -> V(P)` (value `k` = unused) whose classes are
/// nonempty and connected, as class bitmasks.
pub fn for_each_partition(g: &Graph, k: usize, mut f: impl FnMut(&[u32], &[u32]) -> bool) -> bool {
    let n = g.vertex_count();
    let adj: Vec<u32> = g.vertices().map(|u| g.neighbors(u).iter().fold(0u32, |a, &v| a | 1 << v)).collect();
    let connected = |mask: u32| {
        if mask == 0 {
            return false;
        }
        let mut seen = mask & mask.wrapping_neg();
        loop {
            let grown = (0..n).filter(|&u| seen >> u & 1 == 1).fold(seen, |a, u| a | (adj[u] & mask));
            if grown == seen {
                return seen == mask;
            }
            seen = grown;
        }
    };
    let mut assign = vec![0usize; n];
    loop {
        let mut classes = vec![0u32; k];
        for (v, &c) in assign.iter().enumerate() {
            if c < k {
                classes[c] |= 1 << v;
            }
        }
        if classes.iter().all(|&c| connected(c)) && f(&classes, &adj) {
            return true;
        }
        let mut i = 0;
        loop {
            if i == n {
                return false;
            }
            assign[i] += 1;
            if assign[i] <= k {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
    }
}

/// Plain minor containment: connected disjoint classes with an edge between
/// the classes of every pattern edge.
pub fn minor_oracle(g: &Graph, p: &Graph) -> bool {
    let n = g.vertex_count();
    let edges: Vec<(Vertex, Vertex)> = p.edges().collect();
    for_each_partition(g, p.vertex_count(), |classes, adj| {
        edges
            .iter()
            .all(|&(x, y)| (0..n).any(|u| classes[x] >> u & 1 == 1 && adj[u] & classes[y] != 0))
    })
}

/// 1-fat containment straight from the definition. Absorbing each branch
/// path but its last edge into a branch set, a 1-fat model is a family of
/// connected disjoint classes plus one class-to-class edge per pattern edge
/// with all endpoints distinct.
pub fn fat1_oracle(g: &Graph, p: &Graph) -> bool {
    let edges: Vec<(Vertex, Vertex)> = p.edges().collect();
    let g_edges: Vec<(Vertex, Vertex)> = g.edges().collect();
    fn pick(i: usize, edges: &[(Vertex, Vertex)], g_edges: &[(Vertex, Vertex)], classes: &[u32], used: u32) -> bool {
        let Some(&(x, y)) = edges.get(i) else { return true };
        g_edges.iter().any(|&(u, v)| {
            let (bu, bv) = (1u32 << u, 1u32 << v);
            let joins = (classes[x] & bu != 0 && classes[y] & bv != 0) || (classes[x] & bv != 0 && classes[y] & bu != 0);
            joins && used & (bu | bv) == 0 && pick(i + 1, edges, g_edges, classes, used | bu | bv)
        })
    }
    for_each_partition(g, p.vertex_count(), |classes, _| pick(0, &edges, &g_edges, classes, 0))
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Checks a fat model against the definition with plain BFS distances.
pub fn fat_oracle(g: &Graph, model: &FatModel, k: u32) -> Result<(), String> {
    // Vertex set, pattern edge for a path, pattern vertex for a branch set.
    type Piece = (VertexSet, Option<(Vertex, Vertex)>, Option<Vertex>);
    let mut pieces: Vec<Piece> = Vec::new();
    for (x, set) in model.branch_sets.iter().enumerate() {
        check(!set.is_empty() && connected_oracle(g, set), || format!("branch set {x} is not connected"))?;
        pieces.push((set.clone(), None, Some(x)));
    }
    for (&(x, y), p) in &model.branch_paths {
        check(is_walk_path(g, p), || format!("branch path {x}-{y} is not a path"))?;
        let (first, last) = (p[0], *p.last().unwrap());
        let (ux, uy) = (&model.branch_sets[x], &model.branch_sets[y]);
        let forward = ux.contains(first) && uy.contains(last);
        check(forward || (uy.contains(first) && ux.contains(last)), || {
            format!("branch path {x}-{y} has wrong ends")
        })?;
        for (z, set) in [(x, &model.branch_sets[x]), (y, &model.branch_sets[y])] {
            let inner = p.iter().filter(|&&v| set.contains(v)).count();
            check(inner == 1, || format!("branch path {x}-{y} meets U_{z} in {inner} vertices"))?;
        }
        pieces.push((p.iter().collect(), Some((x, y)), None));
    }
    for i in 0..pieces.len() {
        for j in i + 1..pieces.len() {
            let incident = match (pieces[i].1, pieces[j].1, pieces[i].2, pieces[j].2) {
                (Some((x, y)), None, _, Some(z)) | (None, Some((x, y)), Some(z), _) => z == x || z == y,
                _ => false,
            };
            if incident {
                continue;
            }
            let dist = set_distance(g, &pieces[i].0, &pieces[j].0);
            check(dist.is_none_or(|d| d >= k), || format!("pieces {i} and {j} are {dist:?} apart, need {k}"))?;
        }
    }
    Ok(())
}

/// Vertex count of `G_{h,d,m}` from the recursive shape: a base path with
/// spines at `m = 2`, then `2^{h+1} - 1` glued copies plus a fresh tree.
pub fn count_oracle(h: u32, d: u32, m: u32) -> u64 {
    let (h, d, m) = (u64::from(h), u64::from(d), u64::from(m));
    let tree = (1u64 << (h + 1)) - 1;
    let spines = ((1u64 << h) - 1) * (2 * m - 2);
    if m == 2 {
        tree + (d + 1) * tree + 1 + spines * d
    } else {
        let prev = count_oracle(h as u32, d as u32, m as u32 - 1);
        tree * prev - (tree - 1) * (m - 1) - tree + tree + spines * d
    }
}

pub fn spine_count_oracle(h: u32, m: u32) -> u64 {
    if m < 2 {
        return 0;
    }
    let tree = (1u64 << (h + 1)) - 1;
    let own = ((1u64 << h) - 1) * (2 * u64::from(m) - 2);
    if m == 2 {
        own
    } else {
        tree * spine_count_oracle(h, m - 1) + own
    }
}

pub fn td_oracle(g: &Graph, td: &TreeDecomposition) -> Result<(), String> {
    let k = td.bags.len();
    check(td.tree.vertex_count() == k, || "tree and bag counts differ".into())?;
    check(k > 0 && td.tree.edge_count() == k - 1, || "tree edge count is not nodes - 1".into())?;
    let tree_reach = bfs(&td.tree, &[0], &open(&td.tree));
    check(tree_reach.iter().all(Option::is_some), || "decomposition tree is disconnected".into())?;
    for v in g.vertices() {
        let holders: VertexSet = (0..k).filter(|&x| td.bags[x].contains(v)).collect();
        check(!holders.is_empty(), || format!("vertex {v} in no bag"))?;
        check(connected_oracle(&td.tree, &holders), || format!("bags holding {v} are not a subtree"))?;
    }
    for (u, v) in g.edges() {
        check((0..k).any(|x| td.bags[x].contains(u) && td.bags[x].contains(v)), || {
            format!("edge {u}-{v} in no bag")
        })?;
    }
    Ok(())
}

pub fn separator_oracle(g: &LabeledGraph, ell: u32) -> bool {
    let n = g.graph.vertex_count();
    let (s, t) = (g.s_vertex_set().to_vec(), g.t_vertex_set());
    let m = g.params.m as usize;
    let mut sets: Vec<Vec<Vertex>> = vec![Vec::new()];
    if m > 1 {
        sets.extend((0..n).map(|v| vec![v]));
    }
    if m > 2 {
        sets.extend((0..n).flat_map(|u| (u + 1..n).map(move |v| vec![u, v])));
    }
    sets.into_iter().all(|mut x| {
        x.push(g.root);
        let blocked = ball_oracle(&g.graph, &x, ell).mask(n);
        let dist = bfs(&g.graph, &s, &blocked);
        t.iter().any(|v| dist[v].is_some())
    })
}

pub fn side_counts_oracle(td: &TreeDecomposition, w: &VertexSet, (x, y): (usize, usize)) -> (usize, usize) {
    let mut blocked = open(&td.tree);
    blocked[y] = true;
    let reach = bfs(&td.tree, &[x], &blocked);
    let side = |inside: bool| -> usize {
        let union: VertexSet = (0..td.bags.len())
            .filter(|&z| reach[z].is_some() == inside)
            .flat_map(|z| td.bags[z].iter())
            .collect();
        union.intersection(w).len()
    };
    (side(true), side(false))
}

/// Simple graphs on `1..=max_n` vertices.
pub fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(Vertex, Vertex)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let len = pairs.len();
        proptest::collection::vec(any::<bool>(), len).prop_map(move |keep| {
            let edges = pairs.iter().zip(&keep).filter(|(_, &k)| k).map(|(&e, _)| e);
            Graph::from_edges(n, edges).expect("simple edge list")
        })
    })
}

/// Connected graphs: a random tree on `2..=max_n` vertices plus extra edges.
pub fn arb_connected_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        let parents: Vec<BoxedStrategy<Vertex>> = (1..n).map(|v| (0..v).boxed()).collect();
        (parents, proptest::collection::vec((0..n, 0..n), 0..n)).prop_map(move |(parents, extra)| {
            let mut edges: Vec<(Vertex, Vertex)> = parents.into_iter().enumerate().map(|(i, p)| (p, i + 1)).collect();
            for (u, v) in extra {
                let e = (u.min(v), u.max(v));
                if u != v && !edges.contains(&e) {
                    edges.push(e);
                }
            }
            Graph::from_edges(n, edges).expect("simple edge list")
        })
    })
}
