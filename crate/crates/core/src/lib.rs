//! Construction, analysis and tiling of k-partite k-uniform hypergraphs:
//! slack-based denseness verdicts, extremal host generators with structural
//! verifiers, exact and greedy pattern tilings, reachability/absorption
//! machinery, and a desk-scale weak-regularity pipeline. All randomized
//! procedures are driven by counter-based seeds and reproduce bit-identically
//! at any worker count.

pub mod absorption;
pub mod denseness;
pub mod embed;
pub mod error;
pub mod generators;
pub mod hypergraph;
pub mod io;
pub mod lattice;
pub mod partition;
pub mod rng;
pub mod tiling;
pub mod weakreg;

pub use error::{Error, Result};
pub use hypergraph::{Embedding, KPartiteHypergraph, PatternGraph, Tiling};
pub use partition::{IndexVector, RefinedPartition};
