//! Pretext objectives, pre-training strategies, fine-tuning and joint training.

mod losses;
mod procedures;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use losses::{
    cross_entropy, hyperedge_pretext_loss, node_pretext_loss, variant_cosine_loss, variant_regression_loss, NORM_EPS,
};
pub use procedures::{
    adapt, finetune, hyperedge_targets, joint_train, make_batches, predict_logits, predict_proba, pretrain_hyperedge,
    pretrain_node, regression_target, Classifier, HyperedgeTargets, JointStep, LogRow, PhaseOutcome, TrainLog,
};

use crate::autodiff::{ParamId, ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::gnn::{Encoder, GnnConfig, ModuleMode};
use crate::sampling::SamplingConfig;

/// Which phases run before (or instead of) plain fine-tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Node pretext, then hyperedge pretext on the training split, then fine-tuning.
    Traditional,
    /// Node pretext, then a few hyperedge-pretext steps on the test hyperedges.
    AdaptationAware,
    /// One loop on the weighted sum of all three objectives.
    Joint,
    NoPretrain,
    NodeOnly,
    /// Hyperedge-pretext adaptation steps from a random initialization.
    HyperedgeOnly,
}

impl Strategy {
    /// Test hyperedges take part in pre-training.
    pub fn is_transductive(self) -> bool {
        matches!(self, Strategy::AdaptationAware | Strategy::HyperedgeOnly)
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Traditional => "traditional",
            Strategy::AdaptationAware => "adaptation_aware",
            Strategy::Joint => "joint",
            Strategy::NoPretrain => "no_pretrain",
            Strategy::NodeOnly => "node_only",
            Strategy::HyperedgeOnly => "hyperedge_only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeObjective {
    /// Binary cross-entropy on inner products.
    Bce,
    /// Cosine embedding loss.
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperedgeObjective {
    /// Cluster-membership classification.
    Clustering,
    /// Gram matrix regression onto powers of the hyperedge adjacency.
    Regression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs_node: usize,
    pub epochs_hyperedge: usize,
    /// Upper bound on fine-tuning epochs; early stopping usually ends sooner.
    pub epochs_finetune: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub adaptation_steps: usize,
    /// Number of clusters; `None` uses the number of label categories.
    pub clusters: Option<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub strategy: Strategy,
    pub sampling: SamplingConfig,
    /// `None` picks two GNNs for inductive strategies and one otherwise.
    pub module_mode: Option<ModuleMode>,
    pub gnn: GnnConfig,
    pub node_objective: NodeObjective,
    pub cosine_margin: f64,
    pub hyperedge_objective: HyperedgeObjective,
    /// Power of the adjacency used as the regression target.
    pub regression_power: u32,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs_node: 50,
            epochs_hyperedge: 50,
            epochs_finetune: 200,
            patience: 10,
            batch_size: 64,
            lr: 0.001,
            adaptation_steps: 5,
            clusters: None,
            alpha: 1.0,
            beta: 1.0,
            strategy: Strategy::AdaptationAware,
            sampling: SamplingConfig::default(),
            module_mode: None,
            gnn: GnnConfig::default(),
            node_objective: NodeObjective::Bce,
            cosine_margin: 0.5,
            hyperedge_objective: HyperedgeObjective::Clustering,
            regression_power: 1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.gnn.validate()?;
        self.sampling.validate()?;
        if self.epochs_node == 0 || self.epochs_hyperedge == 0 || self.epochs_finetune == 0 {
            return Err(Error::Config("epoch counts must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite() && self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Config("alpha and beta must be finite and non-negative".into()));
        }
        if self.clusters == Some(0) {
            return Err(Error::Config("clusters must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.cosine_margin) {
            return Err(Error::Config(format!("cosine_margin {} not in [0, 1)", self.cosine_margin)));
        }
        if self.regression_power == 0 {
            return Err(Error::Config("regression_power must be at least 1".into()));
        }
        Ok(())
    }

    pub fn resolved_module_mode(&self) -> ModuleMode {
        self.module_mode.unwrap_or(match self.strategy {
            Strategy::Traditional => ModuleMode::TwoGnn,
            _ => ModuleMode::OneGnn,
        })
    }

    /// Cluster count for a dataset with `num_classes` label categories.
    pub fn resolved_clusters(&self, num_classes: usize) -> usize {
        self.clusters.unwrap_or(num_classes.max(2))
    }
}

/// Independent random streams, one per use, all derived from the run seed.
pub mod streams {
    pub const INIT_ENCODER: u64 = 1;
    pub const INIT_HEAD_NODE: u64 = 2;
    pub const INIT_HEAD_HYPEREDGE: u64 = 3;
    pub const INIT_HEAD_TASK: u64 = 4;
    pub const NODE_PHASE: u64 = 5;
    pub const HYPEREDGE_PHASE: u64 = 6;
    pub const ADAPT: u64 = 7;
    pub const FINETUNE: u64 = 8;
    pub const FINETUNE_DROPOUT: u64 = 9;
    pub const JOINT_SAMPLING: u64 = 10;
    pub const PARTITION: u64 = 11;
    pub const SPLIT: u64 = 12;
}

/// Generator for stream `stream` of run seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    RandomInit,
    Pretrained,
}

/// GNN parameters plus every head created so far.
#[derive(Debug, Clone)]
pub struct ModelState {
    pub store: ParamStore,
    pub encoder: Encoder,
    pub provenance: Provenance,
}

impl ModelState {
    /// Seeded random initialization of the GNN module.
    pub fn new(config: &TrainConfig, input_dim: usize) -> Result<Self> {
        let mut store = ParamStore::new();
        let mut rng = stream_rng(config.seed, streams::INIT_ENCODER);
        let encoder = Encoder::new(&mut store, &config.gnn, input_dim, config.resolved_module_mode(), &mut rng)?;
        Ok(ModelState {
            store,
            encoder,
            provenance: Provenance::RandomInit,
        })
    }

    /// Current values of the GNN parameters.
    pub fn theta(&self) -> Vec<(ParamId, Tensor)> {
        self.snapshot(&self.encoder.params())
    }

    pub fn snapshot(&self, ids: &[ParamId]) -> Vec<(ParamId, Tensor)> {
        ids.iter().map(|&id| (id, self.store.get(id).clone())).collect()
    }

    pub fn restore(&mut self, snapshot: &[(ParamId, Tensor)]) {
        for (id, t) in snapshot {
            self.store.set(*id, t.clone());
        }
    }
}
