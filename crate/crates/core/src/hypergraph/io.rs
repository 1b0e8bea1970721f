//! File formats: hypergraph JSON and tab-separated citation graphs.
//!
//! Hypergraph JSON:
//! `{"num_nodes": n, "features": [[..]], "hyperedges": [[..]], "labels": [..]}`
//! with 0-based indices and `labels` optional.
//!
//! Citation graphs come as two TSV files. The edge file has one
//! `source<TAB>target` pair of node ids per line. The node file has one
//! `id<TAB>label<TAB>f1<TAB>f2...` row per node; the LINQS layout
//! `id<TAB>f1...<TAB>label` (label last, as in `cora.content`) is detected
//! automatically.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CitationGraph, Hypergraph};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct HypergraphFile {
    num_nodes: usize,
    features: Vec<Vec<f64>>,
    hyperedges: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<usize>>,
}

pub fn hypergraph_from_json(text: &str) -> Result<Hypergraph> {
    let file: HypergraphFile = serde_json::from_str(text).map_err(|e| Error::Data(e.to_string()))?;
    if file.features.len() != file.num_nodes {
        return Err(Error::Data(format!(
            "{} feature rows for {} nodes",
            file.features.len(),
            file.num_nodes
        )));
    }
    let dim = file.features.first().map_or(0, Vec::len);
    if file.features.iter().any(|r| r.len() != dim) {
        return Err(Error::Data("feature rows have unequal lengths".into()));
    }
    let features = file.features.into_iter().flatten().collect();
    Hypergraph::new(file.num_nodes, file.hyperedges, dim, features, file.labels)
}

pub fn hypergraph_to_json(hg: &Hypergraph) -> Result<String> {
    let dim = hg.feature_dim();
    let file = HypergraphFile {
        num_nodes: hg.num_nodes(),
        features: (0..hg.num_nodes())
            .map(|v| hg.features()[v * dim..(v + 1) * dim].to_vec())
            .collect(),
        hyperedges: hg.hyperedges().to_vec(),
        labels: hg.labels().map(<[usize]>::to_vec),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn read_hypergraph(path: impl AsRef<Path>) -> Result<Hypergraph> {
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    hypergraph_from_json(&text)
}

pub fn write_hypergraph(hg: &Hypergraph, path: impl AsRef<Path>) -> Result<()> {
    let text = hypergraph_to_json(hg)?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Parse a citation graph from the contents of its edge and node files.
pub fn citation_graph_from_tsv(edges_text: &str, nodes_text: &str) -> Result<CitationGraph> {
    let rows: Vec<Vec<&str>> = nodes_text
        .lines()
        .map(str::trim_end)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split('\t').collect())
        .collect();
    if rows.is_empty() {
        return Err(Error::Data("node file is empty".into()));
    }
    let width = rows[0].len();
    if width < 2 {
        return Err(Error::Data("node rows need at least an id and a label".into()));
    }
    if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
        return Err(Error::Data(format!("node row {} has a different column count", i + 1)));
    }
    // Label last when the second column is numeric but the last one is not.
    let label_last = width > 2
        && rows[0][1].parse::<f64>().is_ok()
        && rows[0][width - 1].parse::<f64>().is_err();

    let mut ids: HashMap<&str, usize> = HashMap::with_capacity(rows.len());
    let mut raw_labels = Vec::with_capacity(rows.len());
    let feature_dim = width - 2;
    let mut features = Vec::with_capacity(rows.len() * feature_dim);
    for (v, r) in rows.iter().enumerate() {
        if ids.insert(r[0], v).is_some() {
            return Err(Error::Data(format!("duplicate node id '{}'", r[0])));
        }
        let (label, feats) = if label_last {
            (r[width - 1], &r[1..width - 1])
        } else {
            (r[1], &r[2..])
        };
        raw_labels.push(label.trim());
        for f in feats {
            let x: f64 = f
                .trim()
                .parse()
                .map_err(|_| Error::Data(format!("node '{}': bad feature value '{f}'", r[0])))?;
            features.push(x);
        }
    }

    let (labels, label_names) = encode_labels(&raw_labels);

    let mut edges = Vec::new();
    for (ln, line) in edges_text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (a, b) = match (parts.next(), parts.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Data(format!("edge line {} needs two node ids", ln + 1))),
        };
        let lookup = |id: &str| {
            ids.get(id)
                .copied()
                .ok_or_else(|| Error::Data(format!("edge line {} references unknown node '{id}'", ln + 1)))
        };
        edges.push((lookup(a)?, lookup(b)?));
    }

    Ok(CitationGraph {
        num_nodes: rows.len(),
        edges,
        labels,
        feature_dim,
        features,
        node_names: rows.iter().map(|r| r[0].to_string()).collect(),
        label_names,
    })
}

/// Integer labels are kept as given; anything else is mapped to the index of
/// the label in sorted order. Empty labels count as missing.
fn encode_labels(raw: &[&str]) -> (Vec<Option<usize>>, Vec<String>) {
    let present: Vec<&str> = raw.iter().copied().filter(|s| !s.is_empty()).collect();
    if present.iter().all(|s| s.parse::<usize>().is_ok()) {
        let labels: Vec<Option<usize>> = raw.iter().map(|s| s.parse().ok()).collect();
        let k = labels.iter().flatten().max().map_or(0, |m| m + 1);
        return (labels, (0..k).map(|i| i.to_string()).collect());
    }
    let names: Vec<String> = present
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect();
    let labels = raw
        .iter()
        .map(|s| names.iter().position(|n| n == s))
        .collect();
    (labels, names)
}

pub fn read_citation_graph(edges: impl AsRef<Path>, nodes: impl AsRef<Path>) -> Result<CitationGraph> {
    let e = fs::read_to_string(&edges).map_err(|err| Error::io(&edges, err))?;
    let n = fs::read_to_string(&nodes).map_err(|err| Error::io(&nodes, err))?;
    citation_graph_from_tsv(&e, &n)
}
