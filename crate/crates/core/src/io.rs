//! JSON exchange formats and DOT export.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use crate::construction::LabeledGraph;
use crate::error::Result;
use crate::graph::{Graph, Vertex};

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<[Vertex; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Value>,
}

impl GraphJson {
    fn plain(g: &Graph) -> Self {
        Self {
            n: g.vertex_count(),
            edges: g.edges().map(|(u, v)| [u, v]).collect(),
            labels: None,
        }
    }
}

impl Serialize for Graph {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GraphJson::plain(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Graph {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = GraphJson::deserialize(d)?;
        Graph::from_edges(raw.n, raw.edges.into_iter().map(|[u, v]| (u, v)))
            .map_err(serde::de::Error::custom)
    }
}

fn keyed<K: std::fmt::Display, V: Serialize>(items: impl Iterator<Item = (K, V)>) -> Value {
    let map: BTreeMap<String, Value> = items
        .map(|(k, v)| (k.to_string(), serde_json::to_value(v).expect("plain data")))
        .collect();
    json!(map)
}

/// The landmark block attached to a labeled graph's JSON.
pub fn labels_json(lg: &LabeledGraph) -> Value {
    json!({
        "params": lg.params,
        "root": lg.root,
        "S": lg.s_set,
        "T": lg.t_set,
        "V": keyed(lg.v_sets.iter().map(|((j, i), s)| (format!("{j},{i}"), s))),
        "copies": keyed(lg.copies.iter().map(|((j, i), s)| (format!("{j},{i}"), s))),
        "tree": keyed(lg.tree_nodes.iter().map(|((l, p), v)| (format!("{l},{p}"), v))),
        "spines": lg.spines.iter().map(|s| json!({
            "leaf": s.leaf,
            "target": s.target,
            "path": s.path,
        })).collect::<Vec<_>>(),
    })
}

pub fn graph_to_json(g: &Graph) -> Result<String> {
    Ok(serde_json::to_string(&serde_json::to_value(GraphJson::plain(g))?)?)
}

pub fn labeled_graph_to_json(lg: &LabeledGraph) -> Result<String> {
    let mut raw = GraphJson::plain(&lg.graph);
    raw.labels = Some(labels_json(lg));
    Ok(serde_json::to_string(&serde_json::to_value(raw)?)?)
}

/// Parses the graph JSON format; any `labels` block is ignored.
pub fn graph_from_json(text: &str) -> Result<Graph> {
    Ok(serde_json::from_str(text)?)
}

/// Deterministic DOT text. Labeled graphs color the root black, `S` and `T`
/// blue and the remaining V-set vertices red.
pub fn to_dot(g: &Graph, labels: Option<&LabeledGraph>) -> String {
    let mut color: BTreeMap<Vertex, &str> = BTreeMap::new();
    if let Some(lg) = labels {
        for set in lg.v_sets.values() {
            for v in set.iter() {
                color.insert(v, "red");
            }
        }
        for &v in lg.s_set.iter().chain(&lg.t_set) {
            color.insert(v, "blue");
        }
        color.insert(lg.root, "black");
    }
    let mut out = String::from("graph G {\n  node [shape=circle, label=\"\"];\n");
    for v in g.vertices() {
        match color.get(&v) {
            Some(c) => writeln!(out, "  {v} [style=filled, fillcolor={c}];").unwrap(),
            None => writeln!(out, "  {v};").unwrap(),
        }
    }
    for (u, v) in g.edges() {
        writeln!(out, "  {u} -- {v};").unwrap();
    }
    out.push_str("}\n");
    out
}
