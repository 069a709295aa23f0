//! Quasi-isometry checks for vertex maps, the transfer properties for
//! connected sets and separators, and ball contraction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{Certificate, Mode, Verdict, Witness};
use crate::error::{Error, Result};
use crate::graph::{ball_mask, bfs_distances, is_connected_set, separates, Graph, Vertex, VertexSet};

const UNREACHED: u32 = u32::MAX;

/// A total map from the vertices of `source` to those of `target`.
#[derive(Clone, Copy, Debug)]
pub struct VertexMap<'a> {
    pub source: &'a Graph,
    pub target: &'a Graph,
    pub assignment: &'a [Vertex],
}

#[derive(Serialize, Deserialize)]
struct MapJson {
    assignment: Vec<Vertex>,
}

impl<'a> VertexMap<'a> {
    pub fn new(source: &'a Graph, target: &'a Graph, assignment: &'a [Vertex]) -> Result<Self> {
        if assignment.len() != source.vertex_count() {
            return Err(Error::InvalidParams(format!(
                "map assigns {} vertices but the source has {}",
                assignment.len(),
                source.vertex_count()
            )));
        }
        if let Some(&v) = assignment.iter().find(|&&v| v >= target.vertex_count()) {
            return Err(Error::VertexOutOfRange {
                vertex: v,
                n: target.vertex_count(),
            });
        }
        Ok(Self {
            source,
            target,
            assignment,
        })
    }

    pub fn apply(&self, v: Vertex) -> Vertex {
        self.assignment[v]
    }

    pub fn image(&self, set: &VertexSet) -> VertexSet {
        set.iter().map(|v| self.assignment[v]).collect()
    }
}

pub fn map_to_json(assignment: &[Vertex]) -> Result<String> {
    Ok(serde_json::to_string(&MapJson {
        assignment: assignment.to_vec(),
    })?)
}

pub fn map_from_json(text: &str) -> Result<Vec<Vertex>> {
    Ok(serde_json::from_str::<MapJson>(text)?.assignment)
}

/// The identity map of `g` onto itself.
pub fn identity_map(g: &Graph) -> Vec<Vertex> {
    g.vertices().collect()
}

/// Every vertex of the source sent to `target_vertex`.
pub fn constant_map(source: &Graph, target_vertex: Vertex) -> Vec<Vertex> {
    vec![target_vertex; source.vertex_count()]
}

/// The full edge subdivision of `g`: original vertices keep their ids and
/// edge `i` (in sorted order) gets the new vertex `n + i`. Returns the
/// subdivided graph and the inclusion of `g`.
pub fn subdivide(g: &Graph) -> (Graph, Vec<Vertex>) {
    let n = g.vertex_count();
    let mut edges = Vec::with_capacity(2 * g.edge_count());
    for (i, (u, v)) in g.edges().enumerate() {
        edges.push((u, n + i));
        edges.push((n + i, v));
    }
    let sub = Graph::from_edges(n + g.edge_count(), edges).expect("subdivision is simple");
    (sub, identity_map(g))
}

/// `M²(3A+1) + 2A + M`, the separator-transfer radius for `(M, A)`.
pub fn r_of(m: u64, a: u64) -> Result<u64> {
    if m == 0 {
        return Err(Error::InvalidParams("M must be positive".into()));
    }
    let overflow = || Error::InvalidParams(format!("r({m},{a}) overflows"));
    let r = m
        .checked_mul(m)
        .and_then(|mm| a.checked_mul(3)?.checked_add(1).and_then(|x| mm.checked_mul(x)))
        .and_then(|x| x.checked_add(a.checked_mul(2)?))
        .and_then(|x| x.checked_add(m))
        .ok_or_else(overflow)?;
    Ok(r)
}

fn qi_params(cert: Certificate, m: u64, a: u64) -> Certificate {
    cert.param("M", m).param("A", a)
}

fn fail_with(mut cert: Certificate, detail: String) -> Certificate {
    cert.verdict = Verdict::Fail;
    cert.witness(Witness::Violation { detail })
}

fn fmt_dist(d: u32) -> String {
    if d == UNREACHED {
        "inf".into()
    } else {
        d.to_string()
    }
}

/// Checks both quasi-isometry conditions: `M·d_H + M·A ≥ d_G` and
/// `d_H ≤ M·d_G + A` for all source pairs, and every target vertex within
/// `A` of the image. The first violation in vertex order is reported.
pub fn check_qi(f: &VertexMap, m: u64, a: u64) -> Result<Certificate> {
    if m == 0 {
        return Err(Error::InvalidParams("M must be positive".into()));
    }
    let (g, h) = (f.source, f.target);
    let n = g.vertex_count();
    let cert = qi_params(Certificate::new("quasi-isometry", Mode::Exhaustive, Verdict::Pass), m, a)
        .param("source_vertices", n)
        .param("target_vertices", h.vertex_count())
        .stats((n * n.saturating_sub(1) / 2) as u64 + h.vertex_count() as u64, 0);

    let violation = (0..n).into_par_iter().find_map_first(|u| {
        let dg = bfs_distances(g, &[u], None);
        let dh = bfs_distances(h, &[f.apply(u)], None);
        (u + 1..n).find_map(|v| {
            let (x, y) = (dg[v], dh[f.apply(v)]);
            let lower_ok = match (x, y) {
                (UNREACHED, UNREACHED) => true,
                (UNREACHED, _) => false,
                (_, UNREACHED) => true,
                _ => m * y as u64 + m * a >= x as u64,
            };
            let upper_ok = match (x, y) {
                (_, UNREACHED) => x == UNREACHED,
                (UNREACHED, _) => true,
                _ => y as u64 <= m * x as u64 + a,
            };
            let bound = if !lower_ok {
                "lower distortion bound"
            } else if !upper_ok {
                "upper distortion bound"
            } else {
                return None;
            };
            Some(format!(
                "{bound} fails for {u},{v}: source distance {}, target distance {}",
                fmt_dist(x),
                fmt_dist(y)
            ))
        })
    });
    if let Some(detail) = violation {
        return Ok(fail_with(cert, detail));
    }

    let dist = bfs_distances(h, f.assignment, None);
    if let Some(w) = (0..h.vertex_count()).find(|&w| dist[w] == UNREACHED || dist[w] as u64 > a) {
        return Ok(fail_with(
            cert,
            format!("target vertex {w} is {} from the image, more than {a}", fmt_dist(dist[w])),
        ));
    }
    Ok(cert)
}

/// Checks that `ball(f(u), M + A)` is connected in the target for a
/// connected source set `u`.
pub fn check_conn_image(f: &VertexMap, m: u64, a: u64, u: &VertexSet) -> Result<Certificate> {
    f.source.check_set(u)?;
    if u.is_empty() || !is_connected_set(f.source, u) {
        return Err(Error::Precondition("the source set must be nonempty and connected".into()));
    }
    let radius = radius_u32(m + a)?;
    let centers = f.image(u).to_vec();
    let ball = VertexSet::from_mask(&ball_mask(f.target, &centers, radius));
    let cert = qi_params(Certificate::new("connected-image", Mode::Exhaustive, Verdict::Pass), m, a)
        .param("radius", radius)
        .param("set_size", u.len());
    Ok(if is_connected_set(f.target, &ball) {
        cert
    } else {
        fail_with(cert, format!("ball of radius {radius} around the image is disconnected"))
    })
}

fn radius_u32(r: u64) -> Result<u32> {
    u32::try_from(r).map_err(|_| Error::InvalidParams(format!("radius {r} is too large")))
}

/// The source vertex whose image is nearest to `w`, smallest id on ties,
/// with that distance.
pub fn nearest_preimage(f: &VertexMap, w: Vertex) -> Option<(Vertex, u32)> {
    let dist = bfs_distances(f.target, &[w], None);
    f.source
        .vertices()
        .map(|u| (dist[f.apply(u)], u))
        .filter(|&(d, _)| d != UNREACHED)
        .min()
        .map(|(d, u)| (u, d))
}

/// For a connected target set `w`, picks a preimage `u_w` within `A` of each
/// `w` and checks that `ball(U, M(3A+1))` is connected in the source.
pub fn check_conn_preimage(f: &VertexMap, m: u64, a: u64, w: &VertexSet) -> Result<Certificate> {
    f.target.check_set(w)?;
    if w.is_empty() || !is_connected_set(f.target, w) {
        return Err(Error::Precondition("the target set must be nonempty and connected".into()));
    }
    let radius = radius_u32(m * (3 * a + 1))?;
    let cert = qi_params(Certificate::new("connected-preimage", Mode::Exhaustive, Verdict::Pass), m, a)
        .param("radius", radius)
        .param("set_size", w.len());
    let mut picks = Vec::with_capacity(w.len());
    for x in w.iter() {
        match nearest_preimage(f, x) {
            Some((u, d)) if d as u64 <= a => picks.push(u),
            _ => {
                return Ok(fail_with(
                    cert,
                    format!("target vertex {x} has no image vertex within {a}"),
                ))
            }
        }
    }
    let ball = VertexSet::from_mask(&ball_mask(f.source, &picks, radius));
    Ok(if is_connected_set(f.source, &ball) {
        cert
    } else {
        fail_with(cert, format!("ball of radius {radius} around the chosen preimages is disconnected"))
    })
}

/// Given that `x` separates `y` from `z` in the source, checks that
/// `ball(f(x), r(M, A))` separates `f(y)` from `f(z)` in the target.
pub fn check_separator_transfer(
    f: &VertexMap,
    m: u64,
    a: u64,
    x: &VertexSet,
    y: &VertexSet,
    z: &VertexSet,
) -> Result<Certificate> {
    if !separates(f.source, x, y, z)? {
        return Err(Error::Precondition("x does not separate y from z in the source".into()));
    }
    let r = radius_u32(r_of(m, a)?)?;
    let ball = VertexSet::from_mask(&ball_mask(f.target, &f.image(x).to_vec(), r));
    let cert = qi_params(Certificate::new("separator-transfer", Mode::Exhaustive, Verdict::Pass), m, a)
        .param("radius", r);
    Ok(if separates(f.target, &ball, &f.image(y), &f.image(z))? {
        cert
    } else {
        fail_with(cert, format!("ball of radius {r} around the image of x does not separate"))
    })
}

/// The result of contracting disjoint balls.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contraction {
    pub quotient: Graph,
    /// Image of every original vertex in the quotient.
    pub assignment: Vec<Vertex>,
    /// Quotient vertex of each contracted ball, in center order.
    pub ball_vertices: Vec<Vertex>,
    pub balls: Vec<VertexSet>,
}

impl Contraction {
    pub fn map<'a>(&'a self, original: &'a Graph) -> VertexMap<'a> {
        VertexMap {
            source: original,
            target: &self.quotient,
            assignment: &self.assignment,
        }
    }
}

/// Contracts the radius-`r` ball around each center set to a single vertex.
/// Quotient vertices are numbered by the first original vertex they contain.
pub fn contract_balls(h: &Graph, centers: &[VertexSet], r: u32) -> Result<Contraction> {
    let n = h.vertex_count();
    let mut owner = vec![usize::MAX; n];
    let mut balls = Vec::with_capacity(centers.len());
    for (i, c) in centers.iter().enumerate() {
        h.check_set(c)?;
        if c.is_empty() {
            return Err(Error::EmptySet("contraction center"));
        }
        let ball = ball_mask(h, &c.to_vec(), r);
        for v in (0..n).filter(|&v| ball[v]) {
            if owner[v] != usize::MAX {
                return Err(Error::Precondition(format!(
                    "balls around centers {} and {i} overlap at vertex {v}",
                    owner[v]
                )));
            }
            owner[v] = i;
        }
        balls.push(VertexSet::from_mask(&ball));
    }
    let mut ball_vertices = vec![usize::MAX; centers.len()];
    let mut assignment = vec![0; n];
    let mut next = 0;
    for v in 0..n {
        if owner[v] == usize::MAX {
            assignment[v] = next;
            next += 1;
        } else {
            let b = owner[v];
            if ball_vertices[b] == usize::MAX {
                ball_vertices[b] = next;
                next += 1;
            }
            assignment[v] = ball_vertices[b];
        }
    }
    let quotient = Graph::from_edges_simplified(next, h.edges().map(|(u, v)| (assignment[u], assignment[v])))?;
    Ok(Contraction {
        quotient,
        assignment,
        ball_vertices,
        balls,
    })
}
