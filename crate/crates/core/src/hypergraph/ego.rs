//! Hyperedges from ego networks of a labeled citation graph.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::Hypergraph;
use crate::error::{Error, Result};

/// Undirected simple graph with per-node labels and features.
#[derive(Debug, Clone)]
pub struct CitationGraph {
    pub num_nodes: usize,
    pub edges: Vec<(usize, usize)>,
    /// `None` marks a node whose label is missing; such inputs are rejected.
    pub labels: Vec<Option<usize>>,
    pub feature_dim: usize,
    pub features: Vec<f64>,
    pub node_names: Vec<String>,
    pub label_names: Vec<String>,
}

impl CitationGraph {
    /// Neighbor lists of the undirected simple graph (self-loops and
    /// repeated edges removed, neighbors sorted).
    pub fn neighbors(&self) -> Result<Vec<Vec<usize>>> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.num_nodes];
        for &(a, b) in &self.edges {
            if a >= self.num_nodes || b >= self.num_nodes {
                return Err(Error::Data(format!("edge ({a}, {b}) references an unknown node")));
            }
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for n in &mut adj {
            n.sort_unstable();
            n.dedup();
        }
        Ok(adj)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EgoMode {
    /// Keep every ego network, labeled by the majority label.
    Noisy,
    /// Keep only label-homogeneous ego networks.
    Clean,
}

impl std::str::FromStr for EgoMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noisy" => Ok(EgoMode::Noisy),
            "clean" => Ok(EgoMode::Clean),
            other => Err(Error::Config(format!("unknown ego mode '{other}'"))),
        }
    }
}

/// One hyperedge per node: the node itself plus its 1-hop neighbors.
///
/// Singleton ego networks are dropped. When `dedupe` is set, an ego network
/// whose node set equals an earlier one is dropped too (the earlier center
/// keeps it). Noisy labels use the majority label with ties going to the
/// center's label; clean mode keeps only hyperedges whose members share one
/// label.
pub fn ego_network_hypergraphs(graph: &CitationGraph, mode: EgoMode, dedupe: bool) -> Result<Hypergraph> {
    if graph.labels.len() != graph.num_nodes {
        return Err(Error::Data("label count differs from node count".into()));
    }
    let labels: Vec<usize> = graph
        .labels
        .iter()
        .enumerate()
        .map(|(v, l)| l.ok_or_else(|| Error::Data(format!("node {v} has no label"))))
        .collect::<Result<_>>()?;
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let adj = graph.neighbors()?;

    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut hyperedges = Vec::new();
    let mut hyperedge_labels = Vec::new();
    let mut names = Vec::new();
    let mut counts = vec![0usize; num_classes];
    for center in 0..graph.num_nodes {
        if adj[center].is_empty() {
            continue;
        }
        let mut members = Vec::with_capacity(adj[center].len() + 1);
        members.push(center);
        members.extend_from_slice(&adj[center]);

        counts.iter_mut().for_each(|c| *c = 0);
        for &v in &members {
            counts[labels[v]] += 1;
        }
        let label = match mode {
            EgoMode::Clean => {
                if counts[labels[center]] != members.len() {
                    continue;
                }
                labels[center]
            }
            EgoMode::Noisy => majority_label(&counts, labels[center]),
        };
        if dedupe {
            let mut key = members.clone();
            key.sort_unstable();
            if !seen.insert(key) {
                continue;
            }
        }
        hyperedges.push(members);
        hyperedge_labels.push(label);
        names.push(
            graph
                .node_names
                .get(center)
                .cloned()
                .unwrap_or_else(|| center.to_string()),
        );
    }
    let hg = Hypergraph::new(
        graph.num_nodes,
        hyperedges,
        graph.feature_dim,
        graph.features.clone(),
        Some(hyperedge_labels),
    )?
    .with_hyperedge_names(names)?;
    if graph.node_names.len() == graph.num_nodes {
        hg.with_node_names(graph.node_names.clone())
    } else {
        Ok(hg)
    }
}

fn majority_label(counts: &[usize], center_label: usize) -> usize {
    let best = counts.iter().copied().max().unwrap_or(0);
    if counts[center_label] == best {
        center_label
    } else {
        counts.iter().position(|&c| c == best).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Star a-b, a-c with labels a:0, b:0, c:1.
    fn star() -> CitationGraph {
        CitationGraph {
            num_nodes: 3,
            edges: vec![(0, 1), (0, 2)],
            labels: vec![Some(0), Some(0), Some(1)],
            feature_dim: 1,
            features: vec![1.0, 2.0, 3.0],
            node_names: vec!["a".into(), "b".into(), "c".into()],
            label_names: vec!["x".into(), "y".into()],
        }
    }

    #[test]
    fn noisy_uses_majority() {
        let hg = ego_network_hypergraphs(&star(), EgoMode::Noisy, true).unwrap();
        assert_eq!(hg.hyperedge(0), &[0, 1, 2]);
        assert_eq!(hg.labels().unwrap()[0], 0);
        // ego(c) = {c, a} with labels {1, 0}: tie goes to the center.
        assert_eq!(hg.hyperedge(2), &[2, 0]);
        assert_eq!(hg.labels().unwrap()[2], 1);
    }

    #[test]
    fn clean_keeps_homogeneous_only() {
        let hg = ego_network_hypergraphs(&star(), EgoMode::Clean, true).unwrap();
        assert_eq!(hg.num_hyperedges(), 1);
        assert_eq!(hg.hyperedge(0), &[1, 0]);
        assert_eq!(hg.labels().unwrap(), &[0]);
        assert_eq!(hg.hyperedge_names().unwrap(), &["b".to_string()]);
    }

    #[test]
    fn singletons_dropped_and_duplicates_merged() {
        let g = CitationGraph {
            num_nodes: 3,
            edges: vec![(0, 1), (1, 0), (2, 2)],
            labels: vec![Some(0), Some(0), Some(0)],
            feature_dim: 0,
            features: vec![],
            node_names: vec![],
            label_names: vec![],
        };
        let deduped = ego_network_hypergraphs(&g, EgoMode::Noisy, true).unwrap();
        assert_eq!(deduped.hyperedges(), &[vec![0, 1]]);
        let kept = ego_network_hypergraphs(&g, EgoMode::Noisy, false).unwrap();
        assert_eq!(kept.num_hyperedges(), 2);
    }

    #[test]
    fn missing_label_rejected() {
        let mut g = star();
        g.labels[1] = None;
        assert!(matches!(
            ego_network_hypergraphs(&g, EgoMode::Noisy, true),
            Err(Error::Data(_))
        ));
    }
}
