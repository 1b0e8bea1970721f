//! Message passing inside expanded hyperedges, pooling and MLP heads.

mod encoder;
mod head;
mod layer;

use serde::{Deserialize, Serialize};

pub use encoder::{hyperedge_readouts, Encoder, Readout};
pub use head::Head;
pub use layer::{aggregation, local_adjacency, message_pass_layer, Layer};

use crate::autodiff::{Tape, Var};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Gin,
    Gcn,
    Sage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModuleMode {
    OneGnn,
    TwoGnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expansion {
    Clique,
    Tree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GnnConfig {
    pub layer_kind: LayerKind,
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub gin_eps: f64,
    pub expansion: Expansion,
    pub head_dropout: f64,
}

impl Default for GnnConfig {
    fn default() -> Self {
        GnnConfig {
            layer_kind: LayerKind::Gin,
            num_layers: 1,
            hidden_dim: 64,
            gin_eps: 0.0,
            expansion: Expansion::Clique,
            head_dropout: 0.5,
        }
    }
}

impl GnnConfig {
    pub fn validate(&self) -> Result<()> {
        use crate::error::Error;
        if self.num_layers == 0 {
            return Err(Error::Config("num_layers must be at least 1".into()));
        }
        if self.hidden_dim == 0 {
            return Err(Error::Config("hidden_dim must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.head_dropout) {
            return Err(Error::Config("head_dropout must lie in [0, 1)".into()));
        }
        if !self.gin_eps.is_finite() {
            return Err(Error::Config("gin_eps must be finite".into()));
        }
        Ok(())
    }
}

/// Arithmetic mean of the rows of `rows`.
pub fn mean_pool(tape: &mut Tape, rows: Var) -> Result<Var> {
    tape.row_mean(rows)
}
