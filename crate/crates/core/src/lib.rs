//! Self-supervised pre-training for hyperedge classification.

pub mod autodiff;
pub mod error;
pub mod gnn;
pub mod harness;
pub mod hypergraph;
pub mod partition;
pub mod sampling;
pub mod training;

pub use error::{Error, Result};
