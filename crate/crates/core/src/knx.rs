//! Constructive extraction of a `K_n` model from a quasi-isometric image of
//! `G_{h,d,m}`: parameter derivation, the disjoint path family and branch
//! path assembly along spines.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::certificate::Certificate;
use crate::construction::{count_vertices_checked, s_family, ConstructionParams, FamilyMember, LabeledGraph};
use crate::error::{Error, Result};
use crate::fatminor::{validate_model, FatModel};
use crate::graph::{ball_mask, bfs_distances, bfs_path_mask, complete_graph, grow_ball_mask, separates, Graph, Vertex, VertexSet};
use crate::menger::{max_disjoint_paths, min_vertex_cut};
use crate::qi::{check_qi, contract_balls, r_of, Contraction, VertexMap};

/// Vertex count above which the implied construction is flagged as too large.
pub const DEFAULT_SIZE_CAP: u128 = 5_000_000;

/// Replacement values for derived parameters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overrides {
    pub q: Option<u64>,
    pub r: Option<u64>,
    pub d: Option<u64>,
    pub h: Option<u64>,
    pub m: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionParams {
    pub n: u64,
    #[serde(rename = "N")]
    pub big_n: u64,
    pub q: u64,
    pub r: u64,
    pub d: u64,
    pub h: u64,
    pub m: u64,
    /// Names of the fields replaced by overrides.
    pub overridden: Vec<String>,
    /// Vertex count of `G_{h,d,m}`, if it fits in `u128`.
    pub graph_vertices: Option<u128>,
    pub exceeds_size_cap: bool,
}

fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        u64::from(64 - (x - 1).leading_zeros())
    }
}

/// Evaluates the parameter formulas for `(M, A, n)` exactly.
pub fn derive_params(m: u64, a: u64, n: u64) -> Result<ExtractionParams> {
    derive_params_with(m, a, n, Overrides::default(), DEFAULT_SIZE_CAP)
}

pub fn derive_params_with(m: u64, a: u64, n: u64, overrides: Overrides, size_cap: u128) -> Result<ExtractionParams> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be positive".into()));
    }
    let overflow = || Error::InvalidParams(format!("parameters for ({m},{a},{n}) overflow"));
    let big_n = n * (n - 1) / 2;
    let q = ceil_log2(big_n + 1);
    let r = r_of(m, a)?;
    // d = 4rM((2r+q)M + (6r+1)A + 1)
    let inner = (2 * r + q)
        .checked_mul(m)
        .and_then(|x| x.checked_add((6 * r + 1).checked_mul(a)?))
        .and_then(|x| x.checked_add(1))
        .ok_or_else(overflow)?;
    let d = (4 * r)
        .checked_mul(m)
        .and_then(|x| x.checked_mul(inner))
        .ok_or_else(overflow)?;
    let mut p = ExtractionParams {
        n,
        big_n,
        q,
        r,
        d,
        h: d.checked_add(2).ok_or_else(overflow)?,
        m: n.checked_mul(n).ok_or_else(overflow)?,
        overridden: Vec::new(),
        graph_vertices: None,
        exceeds_size_cap: true,
    };
    for (name, value, slot) in [
        ("q", overrides.q, &mut p.q),
        ("r", overrides.r, &mut p.r),
        ("d", overrides.d, &mut p.d),
        ("h", overrides.h, &mut p.h),
        ("m", overrides.m, &mut p.m),
    ] {
        if let Some(v) = value {
            *slot = v;
            p.overridden.push(name.into());
        }
    }
    p.graph_vertices = match (u32::try_from(p.h), u32::try_from(p.d), u32::try_from(p.m)) {
        (Ok(h), Ok(d), Ok(mm)) => count_vertices_checked(ConstructionParams { h, d, m: mm }),
        _ => None,
    };
    p.exceeds_size_cap = p.graph_vertices.is_none_or(|c| c > size_cap);
    Ok(p)
}

/// One entry of the staged extraction log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub stage: String,
    pub detail: String,
}

fn log(stages: &mut Vec<Stage>, stage: &str, detail: String) {
    stages.push(Stage {
        stage: stage.into(),
        detail,
    });
}

fn fail<T>(stage: &'static str, reason: String) -> Result<T> {
    Err(Error::Extraction { stage, reason })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathFamily {
    pub paths: Vec<Vec<Vertex>>,
    pub flow_value: usize,
    pub quotient_vertices: usize,
    pub contracted_balls: usize,
    /// `ball(f(u), r)` for every `u` in the union of the family sets, in
    /// family order.
    #[serde(skip)]
    pub balls: Vec<VertexSet>,
    pub stages: Vec<Stage>,
}

fn to_u32(x: u64, what: &str) -> Result<u32> {
    u32::try_from(x).map_err(|_| Error::InvalidParams(format!("{what} = {x} is too large")))
}

struct Setup<'a> {
    family: Vec<FamilyMember>,
    s_h: VertexSet,
    t_h: VertexSet,
    root_ball: VertexSet,
    root_h: Vertex,
    q_prime: u32,
    r: u32,
    f: &'a VertexMap<'a>,
}

fn setup<'a>(
    lg: &LabeledGraph,
    f: &'a VertexMap<'a>,
    m: u64,
    a: u64,
    p: &ExtractionParams,
    stages: &mut Vec<Stage>,
) -> Result<Setup<'a>> {
    if *f.source != lg.graph {
        return Err(Error::Precondition("the map must be defined on the labeled graph".into()));
    }
    let lp = lg.params;
    if (u64::from(lp.h), u64::from(lp.d)) != (p.h, p.d) || u64::from(lp.m) < p.m {
        return Err(Error::Precondition(format!(
            "graph G_{{{},{},{}}} does not match h = {}, d = {}, m = {}",
            lp.h, lp.d, lp.m, p.h, p.d, p.m
        )));
    }
    let qi = check_qi(f, m, a)?;
    if !qi.passed() {
        return fail("quasi-isometry", format!("{:?}", qi.witness));
    }
    log(stages, "quasi-isometry", format!("map passes with M = {m}, A = {a}"));

    let q_prime = to_u32(m.checked_mul(p.q).and_then(|x| x.checked_add(a)).unwrap_or(u64::MAX), "Mq + A")?;
    let r = to_u32(p.r, "r")?;
    let root_h = f.apply(lg.root);
    let root_ball = VertexSet::from_mask(&ball_mask(f.target, &[root_h], q_prime));
    let s_h = f.image(&lg.s_vertex_set());
    let t_h = f.image(&lg.t_vertex_set());
    if s_h.len() != lg.s_set.len() || t_h.len() != lg.t_set.len() || !s_h.is_disjoint(&t_h) {
        return fail("terminals", "images of S and T must be disjoint and injective".into());
    }
    if !s_h.is_disjoint(&root_ball) || !t_h.is_disjoint(&root_ball) {
        return fail("terminals", format!("images of S or T meet the root ball of radius {q_prime}"));
    }
    let family = s_family(lg, to_u32(p.q, "q")? as usize, p.big_n as usize)?;
    let dist = bfs_distances(f.target, &[root_h], None);
    for u in family.iter().flat_map(|fm| fm.set.iter()) {
        if dist[f.apply(u)] <= q_prime.saturating_add(r) {
            return fail(
                "root-distance",
                format!(
                    "image of {u} is within {} of the root image, so its radius-{r} ball meets the root ball",
                    dist[f.apply(u)]
                ),
            );
        }
    }
    log(
        stages,
        "setup",
        format!("root ball radius {q_prime} has {} vertices; {} family sets", root_ball.len(), family.len()),
    );
    Ok(Setup {
        family,
        s_h,
        t_h,
        root_ball,
        root_h,
        q_prime,
        r,
        f,
    })
}

/// Re-expands quotient paths by routing through each contracted ball.
struct Expander<'a> {
    h: &'a Graph,
    c: &'a Contraction,
    /// Original vertex of every non-ball quotient vertex.
    original: Vec<Option<Vertex>>,
    /// Ball index of every ball quotient vertex.
    ball_of: BTreeMap<Vertex, usize>,
}

impl<'a> Expander<'a> {
    fn new(h: &'a Graph, c: &'a Contraction) -> Self {
        let ball_of: BTreeMap<Vertex, usize> = c.ball_vertices.iter().enumerate().map(|(i, &w)| (w, i)).collect();
        let mut original = vec![None; c.quotient.vertex_count()];
        for (v, &w) in c.assignment.iter().enumerate() {
            if !ball_of.contains_key(&w) {
                original[w] = Some(v);
            }
        }
        Self {
            h,
            c,
            original,
            ball_of,
        }
    }

    fn expand(&self, path: &[Vertex], s: &VertexSet, t: &VertexSet) -> Option<Vec<Vertex>> {
        let n = self.h.vertex_count();
        let mut out: Vec<Vertex> = Vec::new();
        for (idx, &w) in path.iter().enumerate() {
            let Some(&b) = self.ball_of.get(&w) else {
                out.push(self.original[w]?);
                continue;
            };
            let ball = &self.c.balls[b];
            let entry: Vec<Vertex> = match out.last() {
                None => ball.iter().filter(|&v| s.contains(v)).collect(),
                Some(&prev) => ball.iter().filter(|&v| self.h.has_edge(prev, v)).collect(),
            };
            let mut exit = vec![false; n];
            for v in ball.iter() {
                exit[v] = match path.get(idx + 1) {
                    None => t.contains(v),
                    Some(&next) => match self.ball_of.get(&next) {
                        Some(&b2) => self.h.neighbors(v).iter().any(|&x| self.c.balls[b2].contains(x)),
                        None => self.h.has_edge(v, self.original[next].expect("outside vertex")),
                    },
                };
            }
            let mut blocked = vec![true; n];
            for v in ball.iter() {
                blocked[v] = false;
            }
            out.extend(bfs_path_mask(self.h, &entry, &exit, &blocked)?);
        }
        Some(out)
    }
}

/// Finds `m` disjoint paths from `f(S)` to `f(T)` avoiding the root ball, at
/// most one meeting each ball `ball(f(u), r)` for `u` in the family sets.
pub fn st_path_family(lg: &LabeledGraph, f: &VertexMap, m: u64, a: u64, p: &ExtractionParams) -> Result<PathFamily> {
    let mut stages = Vec::new();
    let st = setup(lg, f, m, a, p, &mut stages)?;
    st_path_family_inner(&st, p, &mut stages)
}

fn st_path_family_inner(st: &Setup, p: &ExtractionParams, stages: &mut Vec<Stage>) -> Result<PathFamily> {
    let (f, h) = (st.f, st.f.target);
    let centers: Vec<VertexSet> = st
        .family
        .iter()
        .flat_map(|fm| fm.set.iter())
        .map(|u| VertexSet::singleton(f.apply(u)))
        .collect();
    let c = contract_balls(h, &centers, st.r)?;
    log(
        stages,
        "contraction",
        format!(
            "{} balls of radius {} contracted; quotient has {} vertices",
            centers.len(),
            st.r,
            c.quotient.vertex_count()
        ),
    );

    let g = |set: &VertexSet| -> VertexSet { set.iter().map(|v| c.assignment[v]).collect() };
    let (s_q, t_q) = (g(&st.s_h), g(&st.t_h));
    let forbidden = VertexSet::from_mask(&ball_mask(&c.quotient, &[c.assignment[st.root_h]], st.q_prime));
    if !s_q.is_disjoint(&forbidden) || !t_q.is_disjoint(&forbidden) {
        return fail("terminals", "contracted terminals meet the contracted root ball".into());
    }
    let paths_q = max_disjoint_paths(&c.quotient, &s_q, &t_q, &forbidden)?;
    let flow_value = paths_q.len();
    if (flow_value as u64) < p.m {
        let cut = min_vertex_cut(&c.quotient, &s_q, &t_q, &forbidden)?;
        return fail(
            "path-family",
            format!(
                "only {flow_value} of {} disjoint paths in the quotient; separator {:?}",
                p.m,
                cut.to_vec()
            ),
        );
    }
    log(
        stages,
        "path-family",
        format!("{flow_value} disjoint paths in the quotient avoiding {} vertices", forbidden.len()),
    );

    let expander = Expander::new(h, &c);
    let mut paths = Vec::with_capacity(p.m as usize);
    for pq in paths_q.iter().take(p.m as usize) {
        match expander.expand(pq, &st.s_h, &st.t_h) {
            Some(path) => paths.push(path),
            None => return fail("expansion", format!("cannot route quotient path {pq:?} through its balls")),
        }
    }
    check_family(h, &paths, st, &c.balls)?;
    log(
        stages,
        "expansion",
        format!(
            "{} paths re-expanded; disjoint, clear of the root ball, at most one per ball",
            paths.len()
        ),
    );
    Ok(PathFamily {
        paths,
        flow_value,
        quotient_vertices: c.quotient.vertex_count(),
        contracted_balls: centers.len(),
        balls: c.balls.clone(),
        stages: stages.clone(),
    })
}

fn check_family(h: &Graph, paths: &[Vec<Vertex>], st: &Setup, balls: &[VertexSet]) -> Result<()> {
    let mut owner = vec![usize::MAX; h.vertex_count()];
    for (i, path) in paths.iter().enumerate() {
        if !h.is_path(path) || !st.s_h.contains(path[0]) || !st.t_h.contains(path[path.len() - 1]) {
            return fail("expansion", format!("path {i} is not an S-T path"));
        }
        for &v in path {
            if owner[v] != usize::MAX {
                return fail("expansion", format!("paths {} and {i} share vertex {v}", owner[v]));
            }
            if st.root_ball.contains(v) {
                return fail("expansion", format!("path {i} enters the root ball at {v}"));
            }
            owner[v] = i;
        }
    }
    for (b, ball) in balls.iter().enumerate() {
        let mut hits: Vec<usize> = ball.iter().map(|v| owner[v]).filter(|&o| o != usize::MAX).collect();
        hits.sort_unstable();
        hits.dedup();
        if hits.len() > 1 {
            return fail("expansion", format!("ball {b} is met by paths {hits:?}"));
        }
    }
    Ok(())
}

/// A `K_n` model with its staged log.
#[derive(Clone, Debug, Serialize)]
pub struct Extraction {
    pub params: ExtractionParams,
    pub family: PathFamily,
    pub discarded: usize,
    /// Size of the region `X_j` for every pattern edge, in edge order.
    pub region_sizes: Vec<usize>,
    pub model: FatModel,
    pub certificate: Certificate,
    pub stages: Vec<Stage>,
}

/// Builds a 1-fat `K_n` model: surviving paths become branch sets and each
/// pattern edge is routed inside the ball around two spines.
pub fn extract_kn(
    lg: &LabeledGraph,
    f: &VertexMap,
    m: u64,
    a: u64,
    n: u64,
    p: &ExtractionParams,
) -> Result<Extraction> {
    if n != p.n || p.big_n != n * (n - 1) / 2 {
        return Err(Error::InvalidParams(format!("parameters were derived for n = {}, not {n}", p.n)));
    }
    if p.m < 2 * p.big_n + n {
        return Err(Error::Precondition(format!("m = {} is below 2N + n = {}", p.m, 2 * p.big_n + n)));
    }
    let mut stages = Vec::new();
    let st = setup(lg, f, m, a, p, &mut stages)?;
    let family = st_path_family_inner(&st, p, &mut stages)?;
    let h = f.target;
    let nh = h.vertex_count();
    let r = st.r;
    let n = n as usize;

    let mut leaf_mask = vec![false; nh];
    for fm in &st.family {
        grow_ball_mask(h, &[f.apply(fm.ell), f.apply(fm.ell_prime)], r, &mut leaf_mask);
    }
    let survivors: Vec<&Vec<Vertex>> = family
        .paths
        .iter()
        .filter(|path| !path.iter().any(|&v| leaf_mask[v]))
        .collect();
    let discarded = family.paths.len() - survivors.len();
    if survivors.len() < n {
        return fail(
            "discard",
            format!("{} paths avoid the leaf balls, {n} required", survivors.len()),
        );
    }
    let branch = &survivors[..n];
    log(&mut stages, "discard", format!("{discarded} paths meet a leaf ball; {n} kept"));

    let mut owner = vec![usize::MAX; nh];
    for (x, path) in branch.iter().enumerate() {
        for &v in path.iter() {
            owner[v] = x;
        }
    }
    let pattern = complete_graph(n);
    let mut regions: Vec<VertexSet> = Vec::new();
    let mut branch_paths = BTreeMap::new();
    for (j, (i, k)) in pattern.edges().enumerate() {
        let fm = &st.family[j];
        let s_prime = VertexSet::from_mask(&ball_mask(h, &f.image(&fm.set).to_vec(), r));
        if !separates(h, &s_prime.union(&st.root_ball), &st.s_h, &st.t_h)? {
            return fail("separation", format!("S'_{} does not separate the terminals", j + 1));
        }
        log(&mut stages, "separation", format!("S'_{} with the root ball separates the terminals", j + 1));
        let anchors: Vec<Vertex> = fm.s_delta.iter().filter(|&v| v != fm.ell_prime).collect();
        let hit = |x: usize| {
            anchors.iter().copied().find(|&u| {
                let near = ball_mask(h, &[f.apply(u)], r);
                branch[x].iter().any(|&v| near[v])
            })
        };
        let (Some(ai), Some(ak)) = (hit(i), hit(k)) else {
            return fail("ball-hit", format!("branch set {i} or {k} misses every anchor ball of S'_{}", j + 1));
        };
        let spine = |u: Vertex| lg.spines.iter().find(|s| s.leaf == fm.ell && s.target == u);
        let (Some(qi), Some(qk)) = (spine(ai), spine(ak)) else {
            return fail("spines", format!("no spines from leaf {} to {ai} and {ak}", fm.ell));
        };
        let centers: Vec<Vertex> = qi.path.iter().chain(&qk.path).map(|&v| f.apply(v)).collect();
        let region = ball_mask(h, &centers, r);
        if let Some(v) = (0..nh).find(|&v| region[v] && owner[v] != usize::MAX && owner[v] != i && owner[v] != k) {
            return fail(
                "region",
                format!("X_{} meets branch set {} at {v}", j + 1, owner[v]),
            );
        }
        let from: Vec<Vertex> = branch[i].iter().copied().filter(|&v| region[v]).collect();
        let mut to = vec![false; nh];
        for &v in branch[k].iter() {
            to[v] = region[v];
        }
        let blocked: Vec<bool> = region.iter().map(|&x| !x).collect();
        let Some(path) = bfs_path_mask(h, &from, &to, &blocked) else {
            return fail("branch-path", format!("no path inside X_{} joins {i} and {k}", j + 1));
        };
        log(
            &mut stages,
            "branch-path",
            format!("edge {i}-{k}: anchors {ai}, {ak}; |X_{}| = {}", j + 1, region.iter().filter(|&&x| x).count()),
        );
        regions.push(VertexSet::from_mask(&region));
        branch_paths.insert((i, k), path);
    }
    for x in 0..regions.len() {
        for y in x + 1..regions.len() {
            if !regions[x].is_disjoint(&regions[y]) {
                return fail("region", format!("X_{} and X_{} intersect", x + 1, y + 1));
            }
        }
    }
    log(&mut stages, "region", format!("{} regions pairwise disjoint", regions.len()));

    let model = FatModel {
        pattern,
        branch_sets: branch.iter().map(|path| path.iter().copied().collect()).collect(),
        branch_paths,
        fatness: 1,
    };
    let certificate = validate_model(h, &model)?;
    if !certificate.passed() {
        return fail("validation", format!("{:?}", certificate.witness));
    }
    log(&mut stages, "validation", format!("1-fat K_{n} model validated"));
    Ok(Extraction {
        params: p.clone(),
        family,
        discarded,
        region_sizes: regions.iter().map(VertexSet::len).collect(),
        model,
        certificate,
        stages,
    })
}
