//! Construction and verification toolkit for the graph family `G_{h,d,m}`:
//! exact builders with a landmark registry, tree-decompositions, fat-minor
//! and path-system searches, Menger computations, quasi-isometry checks and
//! `K_n` model extraction, each reporting a machine-readable certificate.

pub mod certificate;
pub mod construction;
pub mod error;
pub mod fatminor;
pub mod graph;
pub mod io;
pub mod knx;
pub mod menger;
pub mod qi;
pub mod treedec;

pub use certificate::{Certificate, Mode, Stats, Verdict, Witness};
pub use error::{Error, Result};
pub use graph::{Distance, Graph, Separation, Vertex, VertexSet};
