//! Machine-readable records of verification runs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fatminor::FatModel;
use crate::graph::{Distance, Vertex};
use crate::treedec::TreeDecomposition;

/// Version of the certificate JSON layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Found,
    ExhaustedNone,
    BudgetExceeded,
}

impl Verdict {
    /// Whether a witness payload is meaningful for this verdict.
    pub fn carries_witness(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::Fail | Verdict::Found)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Mode {
    Exhaustive,
    Sampled { count: u64, seed: u64 },
    Budgeted { node_limit: u64 },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    /// Search-tree nodes or elementary checks performed.
    pub nodes: u64,
    /// Candidates examined (pairs, separator sets, subset pairs, ...).
    pub candidates: u64,
    /// Wall-clock time; only filled on request so output stays reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// Paths from `sources` to `targets`, pairwise at distance at least
    /// `min_separation` and avoiding every vertex of `avoided`.
    PathSystem {
        sources: Vec<Vertex>,
        targets: Vec<Vertex>,
        paths: Vec<Vec<Vertex>>,
        min_separation: u32,
        avoided: Vec<Vertex>,
    },
    VertexPair {
        u: Vertex,
        v: Vertex,
        distance: Distance,
    },
    Vertices {
        role: String,
        vertices: Vec<Vertex>,
    },
    SubsetPair {
        a: Vec<Vertex>,
        b: Vec<Vertex>,
    },
    FatModel(FatModel),
    TreeDecomposition(TreeDecomposition),
    Violation {
        detail: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub version: u32,
    pub claim: String,
    pub params: BTreeMap<String, Value>,
    pub mode: Mode,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub stats: Stats,
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn new(claim: impl Into<String>, mode: Mode, verdict: Verdict) -> Self {
        Self {
            version: SCHEMA_VERSION,
            claim: claim.into(),
            params: BTreeMap::new(),
            mode,
            verdict,
            witness: None,
            stats: Stats::default(),
            notes: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_owned(), value.into());
        self
    }

    pub fn witness(mut self, witness: Witness) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn stats(mut self, nodes: u64, candidates: u64) -> Self {
        self.stats.nodes = nodes;
        self.stats.candidates = candidates;
        self
    }

    pub fn passed(&self) -> bool {
        matches!(self.verdict, Verdict::Pass | Verdict::Found | Verdict::ExhaustedNone)
    }

    /// Checks the structural rules: witness only on verdicts that carry one.
    pub fn check_shape(&self) -> Result<()> {
        if self.witness.is_some() && !self.verdict.carries_witness() {
            return Err(Error::Precondition(format!(
                "verdict {:?} cannot carry a witness",
                self.verdict
            )));
        }
        Ok(())
    }

    /// Canonical JSON: object keys sorted, two-space indentation.
    pub fn to_canonical_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cert: Certificate = serde_json::from_str(text)?;
        cert.check_shape()?;
        Ok(cert)
    }
}
