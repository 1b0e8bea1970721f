//! Hypergraph data model, incidence/adjacency construction, expansions,
//! ego-network construction and train/validation/test splits.

mod ego;
mod expansion;
pub mod io;
mod sparse;
mod split;

pub use ego::{ego_network_hypergraphs, CitationGraph, EgoMode};
pub use expansion::{clique_expand, tree_expand, tree_root_feature, ExpandedHyperedge};
pub use sparse::SparseMatrix;
pub use split::{split_dataset, DatasetSplit};

use crate::error::{Error, Result};

/// A hypergraph with node features and optional hyperedge labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    num_nodes: usize,
    hyperedges: Vec<Vec<usize>>,
    feature_dim: usize,
    /// Row-major `num_nodes x feature_dim`.
    features: Vec<f64>,
    labels: Option<Vec<usize>>,
    node_names: Option<Vec<String>>,
    hyperedge_names: Option<Vec<String>>,
}

impl Hypergraph {
    /// Validate and build a hypergraph.
    ///
    /// `features` is row-major with `num_nodes` rows of `feature_dim` values.
    pub fn new(
        num_nodes: usize,
        hyperedges: Vec<Vec<usize>>,
        feature_dim: usize,
        features: Vec<f64>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if features.len() != num_nodes * feature_dim {
            return Err(Error::Data(format!(
                "feature buffer has {} values, expected {} x {}",
                features.len(),
                num_nodes,
                feature_dim
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("node features contain non-finite values".into()));
        }
        let mut seen = vec![usize::MAX; num_nodes];
        for (i, e) in hyperedges.iter().enumerate() {
            if e.is_empty() {
                return Err(Error::Data(format!("hyperedge {i} is empty")));
            }
            for &v in e {
                if v >= num_nodes {
                    return Err(Error::Data(format!(
                        "hyperedge {i} references node {v} but there are {num_nodes} nodes"
                    )));
                }
                if seen[v] == i {
                    return Err(Error::Data(format!("hyperedge {i} contains node {v} twice")));
                }
                seen[v] = i;
            }
        }
        if let Some(l) = &labels {
            if l.len() != hyperedges.len() {
                return Err(Error::Data(format!(
                    "{} labels for {} hyperedges",
                    l.len(),
                    hyperedges.len()
                )));
            }
        }
        Ok(Hypergraph {
            num_nodes,
            hyperedges,
            feature_dim,
            features,
            labels,
            node_names: None,
            hyperedge_names: None,
        })
    }

    pub fn with_node_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_nodes {
            return Err(Error::Data("node name count differs from node count".into()));
        }
        self.node_names = Some(names);
        Ok(self)
    }

    pub fn with_hyperedge_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.hyperedges.len() {
            return Err(Error::Data("hyperedge name count differs from hyperedge count".into()));
        }
        self.hyperedge_names = Some(names);
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_hyperedges(&self) -> usize {
        self.hyperedges.len()
    }

    pub fn hyperedges(&self) -> &[Vec<usize>] {
        &self.hyperedges
    }

    pub fn hyperedge(&self, i: usize) -> &[usize] {
        &self.hyperedges[i]
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn feature_row(&self, v: usize) -> &[f64] {
        &self.features[v * self.feature_dim..(v + 1) * self.feature_dim]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn node_names(&self) -> Option<&[String]> {
        self.node_names.as_deref()
    }

    pub fn hyperedge_names(&self) -> Option<&[String]> {
        self.hyperedge_names.as_deref()
    }

    /// Number of label categories (`max label + 1`), zero when unlabeled.
    pub fn num_classes(&self) -> usize {
        self.labels
            .as_ref()
            .and_then(|l| l.iter().max().map(|m| m + 1))
            .unwrap_or(0)
    }

    /// Sizes `(min, max)` over all hyperedges.
    pub fn size_range(&self) -> Option<(usize, usize)> {
        let min = self.hyperedges.iter().map(Vec::len).min()?;
        let max = self.hyperedges.iter().map(Vec::len).max()?;
        Some((min, max))
    }

    /// Node features as a sparse matrix (most citation features are sparse).
    pub fn sparse_features(&self) -> SparseMatrix {
        SparseMatrix::from_dense(self.num_nodes, self.feature_dim, &self.features)
    }

    /// Hypergraph restricted to the listed hyperedges, same node set.
    pub fn restrict(&self, keep: &[usize]) -> Hypergraph {
        Hypergraph {
            num_nodes: self.num_nodes,
            hyperedges: keep.iter().map(|&i| self.hyperedges[i].clone()).collect(),
            feature_dim: self.feature_dim,
            features: self.features.clone(),
            labels: self.labels.as_ref().map(|l| keep.iter().map(|&i| l[i]).collect()),
            node_names: self.node_names.clone(),
            hyperedge_names: self
                .hyperedge_names
                .as_ref()
                .map(|n| keep.iter().map(|&i| n[i].clone()).collect()),
        }
    }
}

/// Incidence matrix `M` (`n x m`): `M(i, j) = 1` iff node `i` is in hyperedge `j`.
pub fn build_incidence(hg: &Hypergraph) -> SparseMatrix {
    build_incidence_for(hg.num_nodes(), hg.hyperedges())
}

pub(crate) fn build_incidence_for(num_nodes: usize, hyperedges: &[Vec<usize>]) -> SparseMatrix {
    let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); num_nodes];
    for (j, e) in hyperedges.iter().enumerate() {
        for &v in e {
            per_row[v].push((j, 1.0));
        }
    }
    SparseMatrix::from_row_lists(num_nodes, hyperedges.len(), per_row)
}

/// Hyperedge adjacency `A = M^T M`. Off-diagonal entries count shared nodes,
/// the diagonal holds hyperedge sizes unless `zero_diagonal` is set.
pub fn build_hyperedge_adjacency(incidence: &SparseMatrix, zero_diagonal: bool) -> SparseMatrix {
    let a = incidence
        .transpose()
        .matmul(incidence)
        .expect("M^T M dimensions always agree");
    if zero_diagonal {
        a.without_diagonal()
    } else {
        a
    }
}

/// Symmetric degree normalization `D^-1/2 A D^-1/2` with the diagonal removed.
/// Rows of isolated hyperedges stay zero.
pub fn normalize_adjacency(adjacency: &SparseMatrix) -> SparseMatrix {
    let a = adjacency.without_diagonal();
    let deg = a.row_sums();
    a.map_values(|r, c, v| v / (deg[r] * deg[c]).sqrt())
}
