use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Hypergraph;
use crate::error::{Error, Result};

/// Disjoint train/validation/test hyperedge index sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Seeded shuffle of the labeled hyperedges followed by a contiguous cut.
///
/// Validation and test sizes are `floor(ratio * m)` (at least one each); the
/// remainder goes to training, so 11 hyperedges split 7/2/2.
pub fn split_dataset(hg: &Hypergraph, ratios: (f64, f64, f64), seed: u64) -> Result<DatasetSplit> {
    if hg.labels().is_none() {
        return Err(Error::Data("cannot split an unlabeled hypergraph".into()));
    }
    let (tr, va, te) = ratios;
    if tr <= 0.0 || va < 0.0 || te < 0.0 || ((tr + va + te) - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios {ratios:?} must be positive and sum to 1")));
    }
    let m = hg.num_hyperedges();
    if m < 3 {
        return Err(Error::Data(format!("need at least 3 labeled hyperedges, got {m}")));
    }
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let n_val = ((va * m as f64 + 1e-9).floor() as usize).max(1);
    let n_test = ((te * m as f64 + 1e-9).floor() as usize).max(1);
    let n_train = m - n_val - n_test;
    let val = order[n_train..n_train + n_val].to_vec();
    let test = order[n_train + n_val..].to_vec();
    order.truncate(n_train);
    Ok(DatasetSplit {
        train: order,
        val,
        test,
        seed,
    })
}
