use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::SparseMatrix;

/// Weighted undirected graph with one vertex per hyperedge.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperedgeGraph {
    adj: Vec<Vec<(usize, f64)>>,
}

impl HyperedgeGraph {
    /// Build from `(u, v, w)` edges; repeated pairs are summed, self-loops ignored.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut triplets = Vec::with_capacity(edges.len() * 2);
        for &(u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidArgument(format!("edge ({u}, {v}) outside {n} vertices")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidArgument(format!("edge weight {w} must be positive")));
            }
            if u != v {
                triplets.push((u, v, w));
                triplets.push((v, u, w));
            }
        }
        build_hyperedge_graph(&SparseMatrix::from_triplets(n, n, triplets)?)
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Neighbours of `v` with edge weights, sorted by neighbour id.
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Total weight of edges whose endpoints carry different labels.
    pub fn edge_cut(&self, labels: &[usize]) -> f64 {
        let mut cut = 0.0;
        for (u, row) in self.adj.iter().enumerate() {
            for &(v, w) in row {
                if u < v && labels[u] != labels[v] {
                    cut += w;
                }
            }
        }
        cut
    }

    pub(crate) fn adjacency(&self) -> &[Vec<(usize, f64)>] {
        &self.adj
    }
}

/// Off-diagonal positive entries of a symmetric adjacency become weighted edges.
pub fn build_hyperedge_graph(a: &SparseMatrix) -> Result<HyperedgeGraph> {
    if a.rows() != a.cols() {
        return Err(Error::shape("build_hyperedge_graph", format!("{}x{} is not square", a.rows(), a.cols())));
    }
    if !a.is_symmetric(0.0) {
        return Err(Error::InvalidArgument("hyperedge adjacency must be symmetric".into()));
    }
    let adj = (0..a.rows())
        .map(|r| {
            let (cols, vals) = a.row(r);
            cols.iter()
                .zip(vals)
                .filter(|&(&c, &v)| c != r && v > 0.0)
                .map(|(&c, &v)| (c, v))
                .collect()
        })
        .collect();
    Ok(HyperedgeGraph { adj })
}

/// Cluster assignment of every hyperedge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub q: usize,
    pub labels: Vec<usize>,
    pub edge_cut: f64,
    pub seed: u64,
}

impl PartitionResult {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.q];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }
}

/// Largest allowed cluster: `ceil(1.1 * m / q)`.
pub fn balance_cap(m: usize, q: usize) -> usize {
    ((1.1 * m as f64 / q as f64) - 1e-9).ceil().max(1.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_from_adjacency() {
        let a = SparseMatrix::from_dense(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 3.0, 0.0, 3.0, 2.0]);
        let g = build_hyperedge_graph(&a).unwrap();
        assert_eq!(g.neighbors(0), &[(1, 1.0)]);
        assert_eq!(g.neighbors(1), &[(0, 1.0), (2, 3.0)]);
        assert_eq!(g.num_edges(), 2);
        let z = build_hyperedge_graph(&SparseMatrix::zeros(4, 4)).unwrap();
        assert_eq!(z.num_edges(), 0);
    }

    #[test]
    fn cap_values() {
        assert_eq!(balance_cap(40, 2), 22);
        assert_eq!(balance_cap(8, 2), 5);
        assert_eq!(balance_cap(10, 10), 2);
        assert_eq!(balance_cap(100, 10), 11);
    }
}
