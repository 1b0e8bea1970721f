use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::io::{read_citation_graph, read_hypergraph};
use crate::hypergraph::{ego_network_hypergraphs, EgoMode, Hypergraph};
use crate::training::TrainConfig;

/// Environment variable that replaces the configured seed.
pub const SEED_ENV: &str = "HYPERGENE_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    /// A hypergraph JSON file.
    HypergraphJson { path: PathBuf },
    /// Ego-network hyperedges built from a citation graph in two TSV files.
    CitationEgo {
        edges: PathBuf,
        nodes: PathBuf,
        mode: EgoMode,
        #[serde(default = "default_true")]
        dedupe: bool,
    },
}

fn default_true() -> bool {
    true
}

impl DatasetConfig {
    fn files(&self) -> Vec<&Path> {
        match self {
            DatasetConfig::HypergraphJson { path } => vec![path],
            DatasetConfig::CitationEgo { edges, nodes, .. } => vec![edges, nodes],
        }
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            DatasetConfig::HypergraphJson { path } => fix(path),
            DatasetConfig::CitationEgo { edges, nodes, .. } => {
                fix(edges);
                fix(nodes);
            }
        }
    }
}

/// Read and convert the configured dataset.
pub fn load_dataset(config: &DatasetConfig) -> Result<Hypergraph> {
    let hg = match config {
        DatasetConfig::HypergraphJson { path } => read_hypergraph(path)?,
        DatasetConfig::CitationEgo {
            edges,
            nodes,
            mode,
            dedupe,
        } => ego_network_hypergraphs(&read_citation_graph(edges, nodes)?, *mode, *dedupe)?,
    };
    if hg.labels().is_none() {
        return Err(Error::Data("the dataset has no hyperedge labels".into()));
    }
    Ok(hg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    PrAuc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Every repeat draws its own split from its own seed.
    PerSeed,
    /// All repeats share the split drawn from the base seed.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub ratios: [f64; 3],
    pub mode: SplitMode,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratios: [0.6, 0.2, 0.2],
            mode: SplitMode::PerSeed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub save_checkpoints: bool,
}

fn default_metrics() -> Vec<Metric> {
    vec![Metric::Accuracy, Metric::PrAuc]
}

fn default_repeats() -> usize {
    10
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetConfig) -> Self {
        ExperimentConfig {
            dataset,
            train: TrainConfig::default(),
            metrics: default_metrics(),
            repeats: default_repeats(),
            split: SplitConfig::default(),
            output_dir: None,
            save_checkpoints: true,
        }
    }

    /// Parse a JSON config. Relative paths are taken relative to `base`.
    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let mut c: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("cannot parse config: {e}")))?;
        c.dataset.resolve(base);
        if let Some(out) = &mut c.output_dir {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        Ok(c)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    /// Replace the seed with the value of `HYPERGENE_SEED`, if given.
    pub fn apply_seed_override(&mut self, value: Option<&str>) -> Result<()> {
        if let Some(v) = value {
            self.train.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got '{v}'")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        let [a, b, c] = self.split.ratios;
        if a <= 0.0 || b < 0.0 || c <= 0.0 || ((a + b + c) - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split ratios {:?} must be positive and sum to 1", self.split.ratios)));
        }
        if self.metrics.is_empty() {
            return Err(Error::Config("at least one metric is required".into()));
        }
        for f in self.dataset.files() {
            if !f.is_file() {
                return Err(Error::Config(format!("dataset file {} does not exist", f.display())));
            }
        }
        Ok(())
    }
}
