use super::Hypergraph;

/// Pairwise expansion of one hyperedge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandedHyperedge {
    pub node_ids: Vec<usize>,
    /// Undirected pairs, each listed once.
    pub pair_edges: Vec<(usize, usize)>,
    /// Synthetic root node (tree expansion only). Its id is
    /// `num_nodes + hyperedge_index`, so it never collides with a real node.
    pub virtual_root: Option<usize>,
}

/// Complete graph over the members of hyperedge `i`.
pub fn clique_expand(hg: &Hypergraph, i: usize) -> ExpandedHyperedge {
    let e = hg.hyperedge(i);
    let mut pairs = Vec::with_capacity(e.len() * e.len().saturating_sub(1) / 2);
    for a in 0..e.len() {
        for b in a + 1..e.len() {
            pairs.push((e[a], e[b]));
        }
    }
    ExpandedHyperedge {
        node_ids: e.to_vec(),
        pair_edges: pairs,
        virtual_root: None,
    }
}

/// Star graph with a synthetic root connected to every member of hyperedge `i`.
pub fn tree_expand(hg: &Hypergraph, i: usize) -> ExpandedHyperedge {
    let e = hg.hyperedge(i);
    let root = hg.num_nodes() + i;
    ExpandedHyperedge {
        node_ids: e.to_vec(),
        pair_edges: e.iter().map(|&v| (root, v)).collect(),
        virtual_root: Some(root),
    }
}

/// Feature vector of the tree-expansion root: mean of the member features.
pub fn tree_root_feature(hg: &Hypergraph, i: usize) -> Vec<f64> {
    let e = hg.hyperedge(i);
    let mut out = vec![0.0; hg.feature_dim()];
    for &v in e {
        for (o, x) in out.iter_mut().zip(hg.feature_row(v)) {
            *o += x;
        }
    }
    let k = e.len() as f64;
    out.iter_mut().for_each(|o| *o /= k);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hg_with(edges: Vec<Vec<usize>>, n: usize) -> Hypergraph {
        Hypergraph::new(n, edges, 0, vec![], None).unwrap()
    }

    #[test]
    fn clique_of_three() {
        let hg = hg_with(vec![vec![4, 7, 9]], 10);
        let x = clique_expand(&hg, 0);
        assert_eq!(x.pair_edges, vec![(4, 7), (4, 9), (7, 9)]);
        assert_eq!(x.virtual_root, None);
    }

    #[test]
    fn clique_of_two_and_ten() {
        let hg = hg_with(vec![vec![2, 5], (0..10).collect()], 10);
        assert_eq!(clique_expand(&hg, 0).pair_edges, vec![(2, 5)]);
        assert_eq!(clique_expand(&hg, 1).pair_edges.len(), 45);
    }

    #[test]
    fn clique_pair_count_is_binomial() {
        for k in 1..=50usize {
            let hg = hg_with(vec![(0..k).collect()], 50);
            assert_eq!(clique_expand(&hg, 0).pair_edges.len(), k * (k - 1) / 2);
        }
    }

    #[test]
    fn tree_is_a_star() {
        let hg = hg_with(vec![vec![4, 7, 9], vec![3]], 10);
        let x = tree_expand(&hg, 0);
        assert_eq!(x.virtual_root, Some(10));
        assert_eq!(x.pair_edges, vec![(10, 4), (10, 7), (10, 9)]);
        let single = tree_expand(&hg, 1);
        assert_eq!(single.pair_edges, vec![(11, 3)]);
    }

    #[test]
    fn root_feature_is_member_mean() {
        let hg = Hypergraph::new(2, vec![vec![0, 1]], 2, vec![1.0, 0.0, 0.0, 1.0], None).unwrap();
        assert_eq!(tree_root_feature(&hg, 0), vec![0.5, 0.5]);
    }
}
