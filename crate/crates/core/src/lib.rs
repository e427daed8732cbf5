//! Connectivity-c mimicking networks.
//!
//! Given an undirected graph with integer capacities and a terminal set, the
//! pipeline in [`partition::build_network`] produces a minor `H` in which every
//! terminal min-cut agrees with the input after capping at `c`. The pieces:
//!
//! - [`graph`]: multigraphs, pendant terminals, contraction and partition pieces;
//! - [`flow`]: bounded unit-capacity edge and vertex cuts;
//! - [`field`]: prime-field linear algebra;
//! - [`matroid`]: uniform and gammoid representations, truncation, representative sets;
//! - [`cutcover`]: the split-graph reduction and the contraction loop producing a cut cover;
//! - [`partition`]: terminal-cut refinement and the end-to-end pipeline;
//! - [`verify`]: exhaustive oracles used by the tests and the CLI.

pub mod cutcover;
pub mod error;
pub mod field;
pub mod flow;
pub mod graph;
pub mod io;
pub mod matroid;
pub mod partition;
pub mod rng;
pub mod selftest;
pub mod verify;

pub use error::{Error, Result, Stage};
pub use graph::{EdgeId, Multigraph, TerminalSet, VertexId};
