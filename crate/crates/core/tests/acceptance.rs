//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ghdm::construction::{
    build, count_vertices, delta, delta_boundary, verify_delta_separation, verify_landmark_distances,
    ConstructionParams, LabeledGraph,
};
use ghdm::fatminor::{
    find_fat_model, grid, is_fat_path_connected, validate_model, validate_path_system,
    PathConnectivity, SearchBudget, SearchOutcome,
};
use ghdm::graph::{complete_graph, cycle_graph, star_graph};
use ghdm::knx::{derive_params, derive_params_with, extract_kn, st_path_family, Overrides, DEFAULT_SIZE_CAP};
use ghdm::menger::{far_pair_search, no_small_separator, SeparatorMode};
use ghdm::qi::{
    check_conn_image, check_conn_preimage, check_qi, check_separator_transfer, constant_map, contract_balls,
    identity_map, r_of, subdivide, VertexMap,
};
use ghdm::treedec::{build_flat_indexed, build_recursive, build_recursive_indexed, trap, validate, TrapOutcome, TreeDecomposition};
use ghdm::{Graph, Verdict, Vertex, VertexSet};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

use common::*;

const INSTANCES: [(u32, u32, u32); 6] = [(1, 1, 2), (1, 2, 2), (2, 2, 2), (1, 1, 3), (1, 2, 3), (2, 2, 3)];
const SEED: u64 = 20240601;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit_s: u64, what: &str) -> Result<(), String> {
    let el = start.elapsed();
    ensure(el <= Duration::from_secs(limit_s), || format!("{what} took {el:.2?}, limit {limit_s}s"))
}

fn lg(h: u32, d: u32, m: u32) -> LabeledGraph {
    build(ConstructionParams::new(h, d, m).expect("valid params")).expect("build")
}

fn adhesion_oracle(lg: &LabeledGraph, td: &TreeDecomposition, nodes: &BTreeMap<(usize, usize), usize>) -> Result<usize, String> {
    let mut checked = 0;
    for (&(level, pos), &node) in nodes {
        if level == 0 {
            continue;
        }
        let parent = nodes[&(level - 1, pos.div_ceil(2))];
        ensure(td.tree.has_edge(parent, node), || format!("tree nodes ({level},{pos}) and parent not adjacent"))?;
        let (s, t) = delta_boundary(lg, level, pos).map_err(|e| e.to_string())?;
        let mut expected = s.union(&t);
        expected.insert(lg.root);
        expected.insert(lg.tree_nodes[&(level, pos)]);
        let got = td.bags[parent].intersection(&td.bags[node]);
        ensure(got == expected, || format!("adhesion at ({level},{pos}) is {got:?}, expected {expected:?}"))?;
        checked += 1;
    }
    Ok(checked)
}

// Criteria.

fn c1_construction() -> Outcome {
    let start = Instant::now();
    let mut counts = Vec::new();
    for (h, d, m) in INSTANCES {
        let g = lg(h, d, m);
        let n = g.graph.vertex_count() as u64;
        let oracle = count_oracle(h, d, m);
        ensure(n == oracle, || format!("G({h},{d},{m}) has {n} vertices, oracle {oracle}"))?;
        let formula = count_vertices(g.params).map_err(|e| e.to_string())?;
        ensure(formula == u128::from(oracle), || format!("count_vertices({h},{d},{m}) = {formula}"))?;
        ensure(bfs(&g.graph, &[0], &open(&g.graph)).iter().all(Option::is_some), || {
            format!("G({h},{d},{m}) is disconnected")
        })?;
        ensure(g.s_set.len() == m as usize && g.t_set.len() == m as usize, || "S or T has wrong size".into())?;
        ensure(g.spines.len() as u64 == spine_count_oracle(h, m), || {
            format!("G({h},{d},{m}) has {} spines", g.spines.len())
        })?;
        for sp in &g.spines {
            ensure(sp.path.len() == d as usize + 2 && is_walk_path(&g.graph, &sp.path), || {
                format!("spine from {} has length {}", sp.leaf, sp.path.len() - 1)
            })?;
        }
        counts.push(format!("({h},{d},{m})={n}"));
    }
    for (params, want) in [((1, 1, 2), 12), ((1, 2, 2), 17), ((1, 2, 3), 55)] {
        ensure(count_oracle(params.0, params.1, params.2) == want, || format!("oracle disagrees for {params:?}"))?;
    }
    within(start, 5, "construction")?;
    Ok(counts.join(" "))
}

fn c2_landmarks() -> Outcome {
    let start = Instant::now();
    let mut report = Vec::new();
    let mut failed = Vec::new();
    for (h, d, m) in INSTANCES {
        let g = lg(h, d, m);
        let landmarks = g.landmark_vertices().to_vec();
        let mut min = None::<u32>;
        for (i, &u) in landmarks.iter().enumerate() {
            let dist = bfs(&g.graph, &[u], &open(&g.graph));
            for &v in &landmarks[i + 1..] {
                min = Some(min.map_or(dist[v].unwrap(), |x| x.min(dist[v].unwrap())));
            }
        }
        let cert = verify_landmark_distances(&g);
        let reported = cert.params.get("minimum").and_then(|v| v.as_u64()).map(|v| v as u32);
        ensure(reported == min, || format!("G({h},{d},{m}) reports minimum {reported:?}, oracle {min:?}"))?;
        let threshold = 2 * d + 2;
        report.push(format!("({h},{d},{m}) min {} need {threshold}", min.unwrap_or(u32::MAX)));
        if cert.verdict != Verdict::Pass || min.is_some_and(|x| x < threshold) {
            failed.push(format!("({h},{d},{m})"));
        }
    }
    within(start, 5, "landmark scan")?;
    if failed.is_empty() {
        Ok(report.join("; "))
    } else {
        Err(format!("minimum below 2d+2 on {}: {}", failed.join(" "), report.join("; ")))
    }
}

fn c3_delta_separation() -> Outcome {
    let start = Instant::now();
    let mut checks = 0;
    for (h, d, m) in INSTANCES {
        let g = lg(h, d, m);
        let (s, t) = (g.s_vertex_set(), g.t_vertex_set());
        for level in 0..h as usize {
            let cert = verify_delta_separation(&g, level).map_err(|e| e.to_string())?;
            ensure(cert.verdict == Verdict::Pass, || format!("G({h},{d},{m}) level {level}: {:?}", cert.witness))?;
            let root_ball = ball_oracle(&g.graph, &[g.root], level as u32);
            for pos in 1..=1usize << level {
                let x = delta(&g, level, pos).map_err(|e| e.to_string())?.s_delta.union(&root_ball);
                ensure(separates_oracle(&g.graph, &x, &s, &t), || {
                    format!("oracle: ({level},{pos}) does not separate in G({h},{d},{m})")
                })?;
                checks += 1;
            }
        }
    }
    within(start, 10, "delta separation")?;
    Ok(format!("{checks} tree nodes separate S(G) from T(G)"))
}

fn c4_tree_decompositions() -> Outcome {
    let start = Instant::now();
    let mut adhesions = 0;
    for (h, d, m) in INSTANCES {
        let g = lg(h, d, m);
        let (flat, flat_index) = build_flat_indexed(&g);
        let (rec, rec_index) = build_recursive_indexed(&g);
        for (name, td, index) in [("flat", &flat, &flat_index), ("recursive", &rec, &rec_index)] {
            let cert = validate(&g.graph, td).map_err(|e| e.to_string())?;
            ensure(cert.verdict == Verdict::Pass, || format!("{name} G({h},{d},{m}): {:?}", cert.witness))?;
            td_oracle(&g.graph, td).map_err(|e| format!("{name} G({h},{d},{m}): {e}"))?;
            adhesions += adhesion_oracle(&g, td, &index.tree_nodes).map_err(|e| format!("{name} G({h},{d},{m}): {e}"))?;
        }
    }
    within(start, 10, "decompositions")?;
    Ok(format!("flat and recursive valid on 6 instances, {adhesions} tree-edge adhesions exact"))
}

fn far_pair_oracle(g: &LabeledGraph, paths: &(Vec<Vertex>, Vec<Vertex>), k: u32, avoid_root: bool) -> Result<(), String> {
    let (s, t) = (g.s_vertex_set(), g.t_vertex_set());
    for p in [&paths.0, &paths.1] {
        ensure(is_walk_path(&g.graph, p), || "witness is not a path".into())?;
        ensure(s.contains(p[0]) && t.contains(*p.last().unwrap()), || "witness does not join S to T".into())?;
        ensure(!avoid_root || !p.contains(&g.root), || "witness meets the root".into())?;
    }
    let (a, b): (VertexSet, VertexSet) = (paths.0.iter().collect(), paths.1.iter().collect());
    let dist = set_distance(&g.graph, &a, &b);
    ensure(dist.is_none_or(|x| x >= k), || format!("witness paths are {dist:?} apart"))?;
    let avoided = if avoid_root { VertexSet::singleton(g.root) } else { VertexSet::new() };
    let cert = validate_path_system(&g.graph, &s, &t, &[paths.0.clone(), paths.1.clone()], k, &avoided);
    ensure(cert.verdict == Verdict::Pass, || format!("re-validation failed: {:?}", cert.witness))
}

fn c5_far_pair() -> Outcome {
    let budget = SearchBudget::default();
    let mut log = Vec::new();
    let runs = [
        ((1, 2, 2), 3, true, false),
        ((1, 2, 3), 3, true, false),
        ((1, 2, 2), 3, false, true),
        ((1, 2, 2), 1, true, true),
        ((1, 2, 3), 1, true, true),
    ];
    for ((h, d, m), k, avoid_root, expect_found) in runs {
        let start = Instant::now();
        let g = lg(h, d, m);
        let report = far_pair_search(&g, k, avoid_root, &budget).map_err(|e| e.to_string())?;
        let label = format!("G({h},{d},{m}) K={k} avoid_root={avoid_root}");
        match (&report.outcome, expect_found) {
            (SearchOutcome::Found(w), true) => far_pair_oracle(&g, w, k, avoid_root).map_err(|e| format!("{label}: {e}"))?,
            (SearchOutcome::ExhaustedNone, false) => {}
            (other, _) => return Err(format!("{label}: unexpected {:?}", other.verdict())),
        }
        within(start, 60, &label)?;
        log.push(format!("{label} {:?} ({} nodes)", report.outcome.verdict(), report.nodes));
    }
    Ok(log.join("; "))
}

fn c6_no_small_separator() -> Outcome {
    let start = Instant::now();
    let mut log = Vec::new();
    for (h, d, m, ell) in [(2, 1, 2, 0), (4, 2, 2, 1)] {
        let g = lg(h, d, m);
        let cert = no_small_separator(&g, ell, SeparatorMode::Exhaustive { cap: SeparatorMode::DEFAULT_CAP })
            .map_err(|e| e.to_string())?;
        ensure(cert.verdict == Verdict::Pass, || format!("G({h},{d},{m}) ell={ell}: {:?}", cert.witness))?;
        ensure(separator_oracle(&g, ell), || format!("oracle finds a small separator in G({h},{d},{m})"))?;
        log.push(format!("exhaustive G({h},{d},{m}) ell={ell} {} sets", cert.stats.candidates));
    }
    let g = lg(4, 2, 3);
    let mode = SeparatorMode::Sampled { count: 10_000, seed: SEED };
    let first = no_small_separator(&g, 1, mode).map_err(|e| e.to_string())?;
    ensure(first.verdict == Verdict::Pass, || format!("sampled G(4,2,3): {:?}", first.witness))?;
    let second = no_small_separator(&g, 1, mode).map_err(|e| e.to_string())?;
    let (a, b) = (
        first.to_canonical_json().map_err(|e| e.to_string())?,
        second.to_canonical_json().map_err(|e| e.to_string())?,
    );
    ensure(a == b, || "sampled rerun differs".into())?;
    log.push(format!("sampled G(4,2,3) ell=1 10000 sets, seed {SEED}, rerun identical"));
    within(start, 120, "separator checks")?;
    Ok(log.join("; "))
}

fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> Vec<(Vertex, Vertex)> {
    (1..n).map(|v| (rng.gen_range(0..v), v)).collect()
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let edges: Vec<(Vertex, Vertex)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .filter(|_| rng.gen_bool(p))
        .collect();
    Graph::from_edges(n, edges).expect("simple edge list")
}

fn c7_fat_minor() -> Outcome {
    let start = Instant::now();
    let budget = SearchBudget::default();
    let host = grid(9, 9);
    let c4 = cycle_graph(4).map_err(|e| e.to_string())?;
    let report = find_fat_model(&host, &c4, 3, &budget).map_err(|e| e.to_string())?;
    let SearchOutcome::Found(model) = &report.outcome else {
        return Err(format!("grid(9,9) C4 K=3: {:?}", report.outcome.verdict()));
    };
    let cert = validate_model(&host, model).map_err(|e| e.to_string())?;
    ensure(cert.verdict == Verdict::Pass, || format!("grid model fails validation: {:?}", cert.witness))?;
    fat_oracle(&host, model, 3)?;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let tree = Graph::from_edges(30, random_tree(&mut rng, 30)).map_err(|e| e.to_string())?;
    for k in [1, 3] {
        let report = find_fat_model(&tree, &c4, k, &budget).map_err(|e| e.to_string())?;
        ensure(report.outcome == SearchOutcome::ExhaustedNone, || {
            format!("random tree C4 K={k}: {:?}", report.outcome.verdict())
        })?;
    }

    let patterns: Vec<(&str, Graph)> = vec![
        ("C3", cycle_graph(3).unwrap()),
        ("C4", cycle_graph(4).unwrap()),
        ("K4", complete_graph(4)),
        ("K1,3", star_graph(3)),
        ("C5", cycle_graph(5).unwrap()),
    ];
    let (mut yes, mut no) = (0, 0);
    let mut minor_mismatch = Vec::new();
    for i in 0..50 {
        let (name, pattern) = &patterns[i % patterns.len()];
        let n = rng.gen_range(4..=8);
        let density = rng.gen_range(0.25..0.65);
        let g = random_graph(&mut rng, n, density);
        let mut outcomes = Vec::new();
        for k in [0, 1] {
            let report = find_fat_model(&g, pattern, k, &budget).map_err(|e| e.to_string())?;
            outcomes.push(match &report.outcome {
                SearchOutcome::Found(model) => {
                    let cert = validate_model(&g, model).map_err(|e| e.to_string())?;
                    ensure(cert.verdict == Verdict::Pass, || format!("graph {i}: K={k} model fails validation"))?;
                    fat_oracle(&g, model, k).map_err(|e| format!("graph {i}: {e}"))?;
                    true
                }
                SearchOutcome::ExhaustedNone => false,
                SearchOutcome::BudgetExceeded => return Err(format!("graph {i}: budget exceeded")),
            });
        }
        let (minor, fat1) = (minor_oracle(&g, pattern), fat1_oracle(&g, pattern));
        let edges: Vec<(Vertex, Vertex)> = g.edges().collect();
        ensure(outcomes[0] == minor, || format!("graph {i} {name} {edges:?}: K=0 search {}, minor oracle {minor}", outcomes[0]))?;
        ensure(outcomes[1] == fat1, || format!("graph {i} {name} {edges:?}: K=1 search {}, 1-fat oracle {fat1}", outcomes[1]))?;
        if outcomes[1] != minor {
            minor_mismatch.push(format!("graph {i} ({n} vertices, {name})"));
        }
        if outcomes[1] {
            yes += 1;
        } else {
            no += 1;
        }
    }
    within(start, 120, "fat-minor checks")?;
    let summary = format!(
        "3-fat C4 in grid(9,9) validated; tree exhausted at K=1,3; K=0 matches the minor oracle and K=1 the 1-fat oracle on 50 graphs ({yes} with, {no} without); K=1 differs from the minor oracle on {}",
        minor_mismatch.len()
    );
    if minor_mismatch.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}: {}", minor_mismatch.join(", ")))
    }
}

fn c8_path_connectivity() -> Outcome {
    let start = Instant::now();
    let budget = SearchBudget::default();
    let g = grid(3, 6);
    let row: VertexSet = (6..12).collect();
    let report = is_fat_path_connected(&g, &row, 1, 3, &budget).map_err(|e| e.to_string())?;
    ensure(report.failure.is_none() && matches!(report.outcome, SearchOutcome::Found(_)), || {
        format!("row witness rejected: {:?}", report.failure)
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let vertices: Vec<Vertex> = g.vertices().collect();
    let mut rejected = 0;
    for trial in 0..300 {
        let k = 2 + (trial % 3) as u32;
        let size = rng.gen_range(2..=8);
        let w: VertexSet = vertices.choose_multiple(&mut rng, size).copied().collect();
        let wv = w.to_vec();
        let close = wv.iter().enumerate().any(|(i, &u)| {
            let dist = bfs(&g, &[u], &open(&g));
            wv[i + 1..].iter().any(|&v| dist[v].is_none_or(|d| d < k))
        });
        if !close {
            continue;
        }
        let report = is_fat_path_connected(&g, &w, k, size / 2, &budget).map_err(|e| e.to_string())?;
        let ok = match report.failure {
            Some(PathConnectivity::TooClose { u, v, .. }) => {
                let d = bfs(&g, &[u], &open(&g))[v];
                w.contains(u) && w.contains(v) && d.is_none_or(|d| d < k)
            }
            Some(PathConnectivity::TooSmall { .. }) => size < 2 * (size / 2),
            _ => false,
        };
        ensure(ok, || format!("W = {wv:?} with a pair closer than {k} was not rejected: {:?}", report.failure))?;
        rejected += 1;
    }
    within(start, 30, "path connectivity")?;
    Ok(format!("grid(3,6) row is 1-fat 3-path-connected; {rejected} sets with a close pair rejected"))
}

fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize) -> Graph {
    let mut edges = random_tree(rng, n);
    for _ in 0..rng.gen_range(0..n) {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u != v && !edges.contains(&(u.min(v), u.max(v))) {
            edges.push((u.min(v), u.max(v)));
        }
    }
    Graph::from_edges(n, edges).expect("simple edge list")
}

fn random_connected_set(rng: &mut ChaCha8Rng, g: &Graph, max_size: usize) -> VertexSet {
    let size = rng.gen_range(1..=max_size);
    let mut set = VertexSet::singleton(rng.gen_range(0..g.vertex_count()));
    while set.len() < size {
        let frontier: Vec<Vertex> = set
            .iter()
            .flat_map(|u| g.neighbors(u).iter().copied())
            .filter(|&v| !set.contains(v))
            .collect();
        let Some(&v) = frontier.choose(rng) else { break };
        set.insert(v);
    }
    set
}

/// A random `(x, y, z)` with `x` separating `y` from `z`.
fn random_separation(rng: &mut ChaCha8Rng, g: &Graph) -> Option<(VertexSet, VertexSet, VertexSet)> {
    let n = g.vertex_count();
    let x: VertexSet = if rng.gen_bool(0.5) {
        g.neighbors(rng.gen_range(0..n)).iter().copied().collect()
    } else {
        let size = rng.gen_range(1..=3.min(n));
        (0..n).collect::<Vec<_>>().choose_multiple(rng, size).copied().collect()
    };
    let blocked = x.mask(n);
    let free: Vec<Vertex> = (0..n).filter(|&v| !blocked[v]).collect();
    let &y = free.choose(rng)?;
    let reach = bfs(g, &[y], &blocked);
    let others: Vec<Vertex> = free.iter().copied().filter(|&v| reach[v].is_none()).collect();
    let &z = others.choose(rng)?;
    Some((x, VertexSet::singleton(y), VertexSet::singleton(z)))
}

fn qi_property_checks(rng: &mut ChaCha8Rng, maps: &str) -> Result<usize, String> {
    let mut checks = 0;
    let mut sets = 0;
    while sets < 100 {
        let n = rng.gen_range(5..=40);
        let g = random_connected_graph(rng, n);
        let (target, assignment, m, a) = match maps {
            "identity" => (g.clone(), identity_map(&g), 1, 0),
            _ => {
                let (sub, inc) = subdivide(&g);
                (sub, inc, 2, 1)
            }
        };
        let f = VertexMap::new(&g, &target, &assignment).map_err(|e| e.to_string())?;
        let u = random_connected_set(rng, &g, 6);
        let cert = check_conn_image(&f, m, a, &u).map_err(|e| e.to_string())?;
        let image: Vec<Vertex> = u.iter().map(|v| assignment[v]).collect();
        let oracle = connected_oracle(&target, &ball_oracle(&target, &image, (m + a) as u32));
        ensure(cert.passed() && oracle, || format!("{maps}: image ball of {u:?} disconnected"))?;

        let w = random_connected_set(rng, &target, 6);
        let cert = check_conn_preimage(&f, m, a, &w).map_err(|e| e.to_string())?;
        ensure(cert.passed(), || format!("{maps}: preimage ball of {w:?} disconnected: {:?}", cert.witness))?;

        if let Some((x, y, z)) = random_separation(rng, &g) {
            ensure(separates_oracle(&g, &x, &y, &z), || "generated separation is wrong".into())?;
            let cert = check_separator_transfer(&f, m, a, &x, &y, &z).map_err(|e| e.to_string())?;
            let r = r_of(m, a).map_err(|e| e.to_string())? as u32;
            let xs: Vec<Vertex> = x.iter().map(|v| assignment[v]).collect();
            let ball = ball_oracle(&target, &xs, r);
            let fy: VertexSet = y.iter().map(|v| assignment[v]).collect();
            let fz: VertexSet = z.iter().map(|v| assignment[v]).collect();
            ensure(cert.passed() && separates_oracle(&target, &ball, &fy, &fz), || {
                format!("{maps}: separator {x:?} does not transfer")
            })?;
            checks += 1;
        }
        checks += 2;
        sets += 1;
    }
    Ok(checks)
}

fn c9_quasi_isometry() -> Outcome {
    let start = Instant::now();
    let mut hosts: Vec<Graph> = INSTANCES.iter().map(|&(h, d, m)| lg(h, d, m).graph).collect();
    hosts.push(grid(4, 5));
    for g in &hosts {
        let id = identity_map(g);
        let cert = check_qi(&VertexMap::new(g, g, &id).unwrap(), 1, 0).map_err(|e| e.to_string())?;
        ensure(cert.passed(), || format!("identity fails: {:?}", cert.witness))?;
        let (sub, inc) = subdivide(g);
        let cert = check_qi(&VertexMap::new(g, &sub, &inc).unwrap(), 2, 1).map_err(|e| e.to_string())?;
        ensure(cert.passed(), || format!("subdivision fails: {:?}", cert.witness))?;
        let constant = constant_map(g, 0);
        let cert = check_qi(&VertexMap::new(g, g, &constant).unwrap(), 1, 1).map_err(|e| e.to_string())?;
        ensure(cert.verdict == Verdict::Fail, || "constant map passes".into())?;
    }
    for ((m, a), want) in [((1, 0), 2), ((2, 1), 20), ((1, 1), 7)] {
        let got = r_of(m, a).map_err(|e| e.to_string())?;
        ensure(got == want, || format!("r_of({m},{a}) = {got}, expected {want}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let checks = qi_property_checks(&mut rng, "identity")? + qi_property_checks(&mut rng, "subdivision")?;

    let mut contraction_log = Vec::new();
    let mut contraction_failures = Vec::new();
    for (i, g) in hosts.iter().enumerate() {
        for r in [1u32, 2] {
            let centers: Vec<VertexSet> = vec![VertexSet::singleton(0), VertexSet::singleton(g.vertex_count() - 1)];
            let Ok(c) = contract_balls(g, &centers, r) else { continue };
            let f = c.map(g);
            let scaled = check_qi(&f, 2 * u64::from(r), 0).map_err(|e| e.to_string())?;
            let shifted = check_qi(&f, 2 * u64::from(r) + 1, 1).map_err(|e| e.to_string())?;
            ensure(shifted.passed(), || format!("host {i} r={r}: ({}, 1) fails", 2 * r + 1))?;
            if !scaled.passed() {
                contraction_failures.push(format!("host {i} r={r}"));
            }
            contraction_log.push(r);
        }
    }
    within(start, 60, "quasi-isometry suite")?;
    let summary = format!(
        "maps and r_of ok, {checks} transfer checks pass; contractions: {} of {} fail (2r,0), all pass (2r+1,1)",
        contraction_failures.len(),
        contraction_log.len()
    );
    if contraction_failures.is_empty() {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn c10_pipeline() -> Outcome {
    let start = Instant::now();
    let p = derive_params(1, 0, 2).map_err(|e| e.to_string())?;
    ensure((p.big_n, p.q, p.d, p.h, p.m) == (1, 1, 48, 50, 4), || format!("derive_params(1,0,2) = {p:?}"))?;
    let mut log = vec!["derive_params(1,0,2) exact".to_string()];
    for (h, r) in [(2u32, 0u64), (3, 1)] {
        let g = lg(h, 2, 4);
        let id = identity_map(&g.graph);
        let f = VertexMap::new(&g.graph, &g.graph, &id).map_err(|e| e.to_string())?;
        let overrides = Overrides {
            q: Some(1),
            r: Some(r),
            d: Some(2),
            h: Some(u64::from(h)),
            m: None,
        };
        let p = derive_params_with(1, 0, 2, overrides, DEFAULT_SIZE_CAP).map_err(|e| e.to_string())?;
        let label = format!("G({h},2,4) r={r}");
        let family = st_path_family(&g, &f, 1, 0, &p).map_err(|e| format!("{label}: {e}"))?;
        ensure(family.paths.len() == 4, || format!("{label}: {} paths", family.paths.len()))?;
        let (s, t) = (g.s_vertex_set(), g.t_vertex_set());
        let root_ball = ball_oracle(&g.graph, &[g.root], 1);
        let mut used = VertexSet::new();
        for path in &family.paths {
            ensure(is_walk_path(&g.graph, path), || format!("{label}: not a path"))?;
            ensure(s.contains(path[0]) && t.contains(*path.last().unwrap()), || format!("{label}: not an S-T path"))?;
            let set: VertexSet = path.iter().collect();
            ensure(set.is_disjoint(&root_ball), || format!("{label}: path meets the root ball"))?;
            ensure(set.is_disjoint(&used), || format!("{label}: paths intersect"))?;
            used = used.union(&set);
        }
        for (i, b) in family.balls.iter().enumerate() {
            let hits = family.paths.iter().filter(|p| p.iter().any(|&v| b.contains(v))).count();
            ensure(hits <= 1, || format!("{label}: ball {i} met by {hits} paths"))?;
        }
        for (i, a) in family.balls.iter().enumerate() {
            for b in &family.balls[i + 1..] {
                ensure(a.is_disjoint(b), || format!("{label}: family balls overlap"))?;
            }
        }
        let ex = extract_kn(&g, &f, 1, 0, 2, &p).map_err(|e| format!("{label}: {e}"))?;
        let cert = validate_model(&g.graph, &ex.model).map_err(|e| e.to_string())?;
        ensure(cert.passed() && ex.certificate.passed(), || format!("{label}: K2 model fails validation"))?;
        fat_oracle(&g.graph, &ex.model, 1).map_err(|e| format!("{label}: {e}"))?;
        for needed in ["separation", "region", "validation"] {
            ensure(ex.stages.iter().any(|s| s.stage == needed), || format!("{label}: no {needed} stage logged"))?;
        }
        for stage in &ex.stages {
            println!("    {label} [{}] {}", stage.stage, stage.detail);
        }
        log.push(format!("{label}: 4 paths, {} discarded, regions {:?}", ex.discarded, ex.region_sizes));
    }
    within(start, 120, "pipeline")?;
    Ok(log.join("; "))
}

fn c11_trap() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut sinks = 0;
    let mut balanced = 0;
    for (h, d, m) in [(1, 2, 3), (2, 2, 3), (2, 2, 2), (1, 2, 2), (3, 2, 2)] {
        let g = lg(h, d, m);
        let td = build_recursive(&g);
        let k = td.bags.len();
        let holders: Vec<Vec<usize>> = g.graph.vertices().map(|v| (0..k).filter(|&x| td.bags[x].contains(v)).collect()).collect();
        let private = |x: usize| -> Vec<Vertex> { td.bags[x].iter().filter(|&v| holders[v].len() == 1).collect() };
        let rich: Vec<usize> = (0..k).filter(|&x| private(x).len() >= 2).collect();
        ensure(rich.len() >= 2, || format!("G({h},{d},{m}) has too few bags with private vertices"))?;

        for _ in 0..2 {
            let &x = rich.choose(&mut rng).unwrap();
            let own = private(x);
            let mut w: VertexSet = own.choose_multiple(&mut rng, 2).copied().collect();
            for v in td.bags[x].iter() {
                if rng.gen_bool(0.5) {
                    w.insert(v);
                }
            }
            let t = if sinks % 2 == 0 || w.len() < 3 { w.len() } else { w.len() - 1 };
            match trap(&td, &w, t, None).map_err(|e| e.to_string())? {
                TrapOutcome::Sink { node, in_bag, .. } => {
                    let deg = td.tree.degree(node);
                    let bound = w.len().saturating_sub(deg * (w.len() - t));
                    ensure(in_bag == td.bags[node].intersection(&w).len() && in_bag >= bound, || {
                        format!("sink {node} holds {in_bag}, bound {bound}")
                    })?;
                    ensure(in_bag >= w.len().saturating_sub(3 * (w.len() - t)), || "sink below |w| - 3(|w|-t)".into())?;
                    for (a, b) in td.tree.edges() {
                        let (sa, sb) = side_counts_oracle(&td, &w, (a, b));
                        ensure((sa >= t) != (sb >= t), || format!("edge {a}-{b} is not orientable"))?;
                    }
                }
                other => return Err(format!("w inside bag {x} gave {other:?}")),
            }
            sinks += 1;
        }

        for _ in 0..2 {
            let (x, y) = loop {
                let pair = (*rich.choose(&mut rng).unwrap(), *rich.choose(&mut rng).unwrap());
                if pair.0 != pair.1 {
                    break pair;
                }
            };
            let half = 2;
            let w: VertexSet = private(x)
                .choose_multiple(&mut rng, half)
                .chain(private(y).choose_multiple(&mut rng, half))
                .copied()
                .collect();
            let t = half + 1;
            match trap(&td, &w, t, None).map_err(|e| e.to_string())? {
                TrapOutcome::BalancedEdge { edge, adhesion, sides } => {
                    let oracle = side_counts_oracle(&td, &w, edge);
                    let threshold = w.len() - t + 1;
                    ensure(oracle == sides && oracle.0 >= threshold && oracle.1 >= threshold, || {
                        format!("edge {edge:?} sides {sides:?}, oracle {oracle:?}")
                    })?;
                    ensure(adhesion == td.bags[edge.0].intersection(&td.bags[edge.1]), || "wrong adhesion".into())?;
                }
                other => return Err(format!("split between bags {x} and {y} gave {other:?}")),
            }
            balanced += 1;
        }
    }
    within(start, 30, "trap")?;
    ensure(sinks + balanced == 20, || format!("{} sets checked", sinks + balanced))?;
    Ok(format!("{sinks} single-bag sets trapped in a sink, {balanced} split sets give a balanced edge"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("construction fidelity", c1_construction),
        ("landmark distances", c2_landmarks),
        ("delta separation", c3_delta_separation),
        ("tree decompositions", c4_tree_decompositions),
        ("far path pairs", c5_far_pair),
        ("no small separator", c6_no_small_separator),
        ("fat-minor machinery", c7_fat_minor),
        ("path connectivity", c8_path_connectivity),
        ("quasi-isometry suite", c9_quasi_isometry),
        ("minor extraction pipeline", c10_pipeline),
        ("trap machinery", c11_trap),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name} ({elapsed:.2}s): {detail}", i + 1);
    }
    println!("{} of 11 criteria pass", 11 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
