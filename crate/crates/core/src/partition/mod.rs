//! Cluster self-labels for hyperedges.
//!
//! Hyperedges are clustered on the graph whose edge weights count shared
//! nodes. When no two hyperedges overlap, k-means on mean-pooled member
//! features is used instead.

mod graph;
mod kmeans;
mod multilevel;

use std::fs;
use std::path::Path;

pub use graph::{balance_cap, build_hyperedge_graph, HyperedgeGraph, PartitionResult};
pub use kmeans::{hyperedge_mean_features, kmeans};
pub use multilevel::partition_multilevel;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::hypergraph::{build_hyperedge_adjacency, build_incidence, Hypergraph};

/// `m x q` one-hot matrix of cluster memberships.
pub fn cluster_label_vectors(result: &PartitionResult) -> Tensor {
    let mut t = Tensor::zeros(result.labels.len(), result.q);
    for (i, &l) in result.labels.iter().enumerate() {
        t.data_mut()[i * result.q + l] = 1.0;
    }
    t
}

/// Partition the hyperedges of `hg` into `q` clusters.
pub fn partition_hypergraph(hg: &Hypergraph, q: usize, seed: u64) -> Result<PartitionResult> {
    let a = build_hyperedge_adjacency(&build_incidence(hg), true);
    let g = build_hyperedge_graph(&a)?;
    if g.num_edges() == 0 {
        let m = hg.num_hyperedges();
        if q == 0 || q > m {
            return Err(Error::InvalidArgument(format!("q = {q} must lie in [1, {m}]")));
        }
        let labels = kmeans(&hyperedge_mean_features(hg), hg.feature_dim(), q, seed)?;
        return Ok(PartitionResult {
            q,
            labels,
            edge_cut: 0.0,
            seed,
        });
    }
    partition_multilevel(&g, q, seed)
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidArgument("labelings must be non-empty and of equal length".into()));
    }
    let ka = a.iter().max().expect("nonempty") + 1;
    let kb = b.iter().max().expect("nonempty") + 1;
    let mut table = vec![0u64; ka * kb];
    let mut ra = vec![0u64; ka];
    let mut rb = vec![0u64; kb];
    for (&x, &y) in a.iter().zip(b) {
        table[x * kb + y] += 1;
        ra[x] += 1;
        rb[y] += 1;
    }
    let c2 = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.iter().map(|&x| c2(x)).sum();
    let sa: f64 = ra.iter().map(|&x| c2(x)).sum();
    let sb: f64 = rb.iter().map(|&x| c2(x)).sum();
    let expected = sa * sb / c2(a.len() as u64);
    let max = 0.5 * (sa + sb);
    if (max - expected).abs() < 1e-300 {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

pub fn save_partition(result: &PartitionResult, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string(result)?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn load_partition(path: impl AsRef<Path>) -> Result<PartitionResult> {
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let r: PartitionResult = serde_json::from_str(&text).map_err(|e| Error::Data(format!("partition cache: {e}")))?;
    if r.labels.iter().any(|&l| l >= r.q) {
        return Err(Error::Data("partition cache has a label outside [0, q)".into()));
    }
    Ok(r)
}
