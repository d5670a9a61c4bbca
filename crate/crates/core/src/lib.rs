//! Lossless compression of unfolded structured convolutional models.
//!
//! Models such as GCN, GraphSAGE, GIN, graphlet templates and knowledge-base
//! embedders are unfolded over each input sample into an explicit
//! [`graph::ComputationGraph`] with weights shared through edge labels. The
//! [`compress`] module then detects equivalent nodes and merges them, either
//! from value fingerprints alone (fast, possibly lossy at low precision) or with
//! an additional structural check that guarantees the compressed graph computes
//! the same function for every weight assignment.

pub mod graph;
mod rng;
pub mod templates;
pub mod compress;
pub mod oracle;
pub mod data;
pub mod train;
pub mod cli;
