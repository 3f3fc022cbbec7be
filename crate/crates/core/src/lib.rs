//! Simulator and exact analytics for verifying measurement-only blind
//! quantum computation by stabilizer testing.
//!
//! A client receives `2k+1` copies of a bipartite graph state from an
//! untrusted server, tests `2k` of them against the graph's stabilizers and
//! keeps the last one. This crate provides:
//!
//! - [`gf2`]: packed GF(2) vectors and matrices,
//! - [`graphs`]: bipartite graph states and built-in lattices,
//! - [`reduction`]: the local conversion to entangled pairs and the
//!   resulting parity checks,
//! - [`pauli`]: syndromes and block classes of Pauli attacks,
//! - [`protocol`]: Monte Carlo runs of the full protocol,
//! - [`analytics`]: exact pass/fidelity probabilities, the fidelity bound
//!   and a brute-force oracle.
//!
//! Trial loops run on rayon when the default `parallel` feature is on.

pub mod analytics;
pub mod gf2;
pub mod graphs;
pub mod pauli;
pub mod protocol;
pub mod reduction;

pub use analytics::{ClassCounts, ClassDistribution, Rational};
pub use gf2::{BitMatrix, BitVector};
pub use graphs::{BipartiteGraphState, GraphSpec};
pub use pauli::{BlockClass, BlockPauli};
pub use protocol::{AdversaryModel, Estimate, Transcript};
pub use reduction::{CheckRelation, Reduction, TestGroup};
