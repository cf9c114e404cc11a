//! Spectral sparsification of hypergraphs by oblivious vertex sampling.
//!
//! Static (resistance sampling or spanner bundles), online, fully dynamic and
//! linear-sketch execution modes share one level skeleton: recover a set of
//! important hyperedges, keep them at weight 2^i, halve the rest, repeat.

pub mod config;
pub mod dynamic;
pub mod error;
pub mod generate;
pub mod hypergraph;
pub mod io;
pub mod multigraph;
pub mod online;
pub mod output;
pub mod plan;
pub mod report;
pub mod recovery;
pub mod resistance;
pub mod rng;
pub mod sketch;
pub mod spanner;
pub mod sparsify;
pub mod verify;

pub use config::SparsifyConfig;
pub use error::{Error, Result};
pub use hypergraph::{EdgeId, Hyperedge, Hypergraph, VertexId};
pub use output::{KeptEdge, SparsifierOutput};
pub use sparsify::{sparsify, sparsify_static, Engine};
