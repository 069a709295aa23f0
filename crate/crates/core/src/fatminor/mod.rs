//! K-fat minor models, their validation, and exhaustive searches for fat
//! models, far-apart path systems and fat path-connected sets.

mod paths;
mod search;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::certificate::{Certificate, Mode, Verdict, Witness};
use crate::error::{Error, Result};
use crate::graph::{ball_mask, bfs_distances, is_connected_set, Distance, Graph, Vertex, VertexSet};

pub use paths::{
    find_far_path_system, is_fat_path_connected, validate_path_system, PathConnectivity,
    PathConnectivityReport,
};
pub(crate) use paths::{for_each_minimal_path, Flow, PathVisitor};
pub use search::find_fat_model;

/// A model of `pattern` in a host graph: one branch set per pattern vertex
/// and one branch path per pattern edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FatModel {
    pub pattern: Graph,
    pub branch_sets: Vec<VertexSet>,
    /// Keyed by pattern edge `(x, y)` with `x < y`; runs from `U_x` to `U_y`.
    pub branch_paths: BTreeMap<(Vertex, Vertex), Vec<Vertex>>,
    pub fatness: u32,
}

#[derive(Serialize, Deserialize)]
struct FatModelJson {
    pattern: Graph,
    #[serde(rename = "K")]
    fatness: u32,
    branch_sets: BTreeMap<String, Vec<Vertex>>,
    branch_paths: BTreeMap<String, Vec<Vertex>>,
}

impl Serialize for FatModel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FatModelJson {
            pattern: self.pattern.clone(),
            fatness: self.fatness,
            branch_sets: self
                .branch_sets
                .iter()
                .enumerate()
                .map(|(x, u)| (x.to_string(), u.to_vec()))
                .collect(),
            branch_paths: self
                .branch_paths
                .iter()
                .map(|((x, y), p)| (format!("{x}-{y}"), p.clone()))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FatModel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = FatModelJson::deserialize(d)?;
        let mut branch_sets = vec![VertexSet::new(); raw.pattern.vertex_count()];
        for (key, members) in raw.branch_sets {
            let x: usize = key.parse().map_err(D::Error::custom)?;
            let slot = branch_sets
                .get_mut(x)
                .ok_or_else(|| D::Error::custom(format!("branch set key {x} out of range")))?;
            *slot = members.into();
        }
        let mut branch_paths = BTreeMap::new();
        for (key, path) in raw.branch_paths {
            let (x, y) = key
                .split_once('-')
                .ok_or_else(|| D::Error::custom(format!("bad edge key {key}")))?;
            let x: usize = x.parse().map_err(D::Error::custom)?;
            let y: usize = y.parse().map_err(D::Error::custom)?;
            branch_paths.insert((x, y), path);
        }
        Ok(FatModel {
            pattern: raw.pattern,
            branch_sets,
            branch_paths,
            fatness: raw.fatness,
        })
    }
}

/// Limits for the exhaustive searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    pub node_limit: u64,
    pub time_limit: Option<Duration>,
}

impl SearchBudget {
    pub fn nodes(node_limit: u64) -> Self {
        Self {
            node_limit,
            time_limit: None,
        }
    }

    pub fn mode(&self) -> Mode {
        Mode::Budgeted {
            node_limit: self.node_limit,
        }
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self::nodes(50_000_000)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome<W> {
    Found(W),
    /// The search space was enumerated completely without a witness.
    ExhaustedNone,
    BudgetExceeded,
}

impl<W> SearchOutcome<W> {
    pub fn verdict(&self) -> Verdict {
        match self {
            SearchOutcome::Found(_) => Verdict::Found,
            SearchOutcome::ExhaustedNone => Verdict::ExhaustedNone,
            SearchOutcome::BudgetExceeded => Verdict::BudgetExceeded,
        }
    }

    pub fn found(&self) -> Option<&W> {
        match self {
            SearchOutcome::Found(w) => Some(w),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchReport<W> {
    pub outcome: SearchOutcome<W>,
    /// Search-tree nodes visited.
    pub nodes: u64,
}

/// Node counter with an optional deadline.
pub(crate) struct Budget {
    pub nodes: u64,
    limit: u64,
    deadline: Option<Instant>,
    exceeded: bool,
}

impl Budget {
    pub fn new(budget: &SearchBudget) -> Self {
        Self {
            nodes: 0,
            limit: budget.node_limit,
            deadline: budget.time_limit.map(|t| Instant::now() + t),
            exceeded: false,
        }
    }

    /// Counts one node; false once the budget is spent.
    pub fn tick(&mut self) -> bool {
        if self.exceeded {
            return false;
        }
        if self.nodes >= self.limit {
            self.exceeded = true;
            return false;
        }
        self.nodes += 1;
        if self.nodes.is_multiple_of(4096) && self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.exceeded = true;
            return false;
        }
        true
    }

    pub fn exceeded(&self) -> bool {
        self.exceeded
    }
}

/// The `rows × cols` grid; vertex `(r, c)` has id `r * cols + c`.
pub fn grid(rows: usize, cols: usize) -> Graph {
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1));
            }
            if r + 1 < rows {
                edges.push((v, v + cols));
            }
        }
    }
    Graph::from_edges(rows * cols, edges).expect("grid edges are simple")
}

fn edge_key(e: (Vertex, Vertex)) -> String {
    format!("E{}-{}", e.0, e.1)
}

/// Checks every condition of a `K`-fat model.
pub fn validate_model(g: &Graph, model: &FatModel) -> Result<Certificate> {
    for u in &model.branch_sets {
        g.check_set(u)?;
    }
    for path in model.branch_paths.values() {
        if let Some(&v) = path.iter().find(|&&v| v >= g.vertex_count()) {
            return Err(Error::VertexOutOfRange {
                vertex: v,
                n: g.vertex_count(),
            });
        }
    }
    let k = model.fatness;
    let cert = Certificate::new("fat-model", Mode::Exhaustive, Verdict::Pass)
        .param("K", k)
        .param("pattern_vertices", model.pattern.vertex_count())
        .param("pattern_edges", model.pattern.edge_count());
    let fail = |cert: Certificate, detail: String| {
        let mut cert = cert.witness(Witness::Violation { detail });
        cert.verdict = Verdict::Fail;
        Ok(cert)
    };

    if model.branch_sets.len() != model.pattern.vertex_count() {
        return fail(cert, "one branch set per pattern vertex is required".into());
    }
    let n = g.vertex_count();
    let mut owner = vec![usize::MAX; n];
    for (x, u) in model.branch_sets.iter().enumerate() {
        if u.is_empty() {
            return fail(cert, format!("U{x} is empty"));
        }
        if !is_connected_set(g, u) {
            return fail(cert, format!("U{x} is not connected"));
        }
        for v in u.iter() {
            if owner[v] != usize::MAX {
                return fail(cert, format!("U{} and U{x} share vertex {v}", owner[v]));
            }
            owner[v] = x;
        }
    }

    let pattern_edges: Vec<(Vertex, Vertex)> = model.pattern.edges().collect();
    if model.branch_paths.keys().copied().ne(pattern_edges.iter().copied()) {
        return fail(cert, "branch paths must be keyed by exactly the pattern edges".into());
    }
    let mut interior_owner = vec![None; n];
    for (&(x, y), path) in &model.branch_paths {
        if !g.is_path(path) {
            return fail(cert, format!("{} is not a path", edge_key((x, y))));
        }
        let (first, last) = (path[0], path[path.len() - 1]);
        let ends_ok = (owner[first] == x && owner[last] == y) || (owner[first] == y && owner[last] == x);
        if path.len() < 2 || !ends_ok {
            return fail(cert, format!("{} does not join U{x} and U{y}", edge_key((x, y))));
        }
        for &v in &path[1..path.len() - 1] {
            if owner[v] != usize::MAX {
                return fail(cert, format!("{} passes through U{}", edge_key((x, y)), owner[v]));
            }
            if let Some(other) = interior_owner[v] {
                return fail(
                    cert,
                    format!("{} and {} share vertex {v}", edge_key(other), edge_key((x, y))),
                );
            }
            interior_owner[v] = Some((x, y));
        }
    }

    if k > 0 {
        // Members: branch sets first, then branch paths in key order.
        type Member = (String, Vec<Vertex>, Option<(Vertex, Vertex)>);
        let mut members: Vec<Member> = model
            .branch_sets
            .iter()
            .enumerate()
            .map(|(x, u)| (format!("U{x}"), u.to_vec(), None))
            .collect();
        members.extend(
            model
                .branch_paths
                .iter()
                .map(|(&e, p)| (edge_key(e), p.clone(), Some(e))),
        );
        let set_count = model.branch_sets.len();
        for i in 0..members.len() {
            let near = ball_mask(g, &members[i].1, k - 1);
            for j in i + 1..members.len() {
                // A path and a branch set at one of its ends are exempt.
                if let (Some((x, y)), true) = (members[j].2, i < set_count) {
                    if i == x || i == y {
                        continue;
                    }
                }
                if members[j].1.iter().any(|&v| near[v]) {
                    let dist = bfs_distances(g, &members[i].1, None);
                    let d = members[j].1.iter().map(|&v| dist[v]).min().unwrap_or(u32::MAX);
                    return fail(
                        cert,
                        format!("{} and {} are at distance {d} < {k}", members[i].0, members[j].0),
                    );
                }
            }
        }
    }
    Ok(cert)
}

/// One vertex (the smallest id) from each branch set of row `i` (1-based)
/// of a grid model.
pub fn row_witness(model: &FatModel, grid_rows: usize, grid_cols: usize, i: usize) -> Result<VertexSet> {
    if model.pattern != grid(grid_rows, grid_cols) {
        return Err(Error::Precondition(format!(
            "pattern is not the {grid_rows}x{grid_cols} grid"
        )));
    }
    if i == 0 || i > grid_rows {
        return Err(Error::Lookup(format!("row {i} outside 1..={grid_rows}")));
    }
    (0..grid_cols)
        .map(|c| {
            model.branch_sets[(i - 1) * grid_cols + c]
                .first()
                .ok_or(Error::EmptySet("branch set"))
        })
        .collect()
}

/// Certificate for a fat-model search. A found model is re-validated before
/// it is attached as the witness.
pub fn fat_model_certificate(
    g: &Graph,
    pattern: &Graph,
    k: u32,
    budget: &SearchBudget,
    report: &SearchReport<FatModel>,
) -> Result<Certificate> {
    let mut cert = Certificate::new("fat-model-search", budget.mode(), report.outcome.verdict())
        .param("K", k)
        .param("pattern_vertices", pattern.vertex_count())
        .param("pattern_edges", pattern.edge_count())
        .param("host_vertices", g.vertex_count())
        .stats(report.nodes, 0);
    if let SearchOutcome::Found(model) = &report.outcome {
        if !validate_model(g, model)?.passed() {
            return Err(Error::Precondition("search returned a model that fails validation".into()));
        }
        cert = cert.witness(Witness::FatModel(model.clone()));
    }
    Ok(cert)
}

/// Certificate for a far path-system search, re-validating a found system.
pub fn path_system_certificate(
    g: &Graph,
    a: &VertexSet,
    b: &VertexSet,
    k: u32,
    budget: &SearchBudget,
    report: &SearchReport<Vec<Vec<Vertex>>>,
) -> Result<Certificate> {
    let mut cert = Certificate::new("path-system-search", budget.mode(), report.outcome.verdict())
        .param("K", k)
        .param("sources", a.len())
        .param("targets", b.len())
        .stats(report.nodes, 0);
    if let SearchOutcome::Found(paths) = &report.outcome {
        cert = cert.param("count", paths.len());
        if !validate_path_system(g, a, b, paths, k, &VertexSet::new()).passed() {
            return Err(Error::Precondition("search returned a path system that fails validation".into()));
        }
        cert = cert.witness(Witness::PathSystem {
            sources: a.to_vec(),
            targets: b.to_vec(),
            paths: paths.clone(),
            min_separation: k,
            avoided: Vec::new(),
        });
    }
    Ok(cert)
}

/// Certificate for a fat path-connectivity check: Pass when every subset
/// pair was linked, Fail with the first obstruction otherwise.
pub fn path_connectivity_certificate(
    w: &VertexSet,
    k: u32,
    n: usize,
    budget: &SearchBudget,
    report: &PathConnectivityReport,
) -> Certificate {
    let verdict = match (&report.outcome, &report.failure) {
        (SearchOutcome::BudgetExceeded, _) => Verdict::BudgetExceeded,
        (_, Some(_)) => Verdict::Fail,
        _ => Verdict::Pass,
    };
    let pairs = match report.outcome {
        SearchOutcome::Found(pairs) => pairs,
        _ => 0,
    };
    let mut cert = Certificate::new("fat-path-connected", budget.mode(), verdict)
        .param("K", k)
        .param("n", n)
        .param("set", w.to_vec())
        .stats(report.nodes, pairs);
    cert.witness = report.failure.as_ref().map(|failure| match failure {
        PathConnectivity::TooSmall { size, required } => Witness::Violation {
            detail: format!("set has {size} vertices, at least {required} required"),
        },
        PathConnectivity::TooClose { u, v, distance } => Witness::VertexPair {
            u: *u,
            v: *v,
            distance: distance.map_or(Distance::Infinite, Distance::Finite),
        },
        PathConnectivity::NoSystem { a, b } => Witness::SubsetPair {
            a: a.clone(),
            b: b.clone(),
        },
    });
    cert
}
