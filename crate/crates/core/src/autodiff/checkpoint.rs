//! Versioned JSON checkpoints of named parameter tensors.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ParamStore, Tensor};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: [usize; 2],
    data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    format_version: u32,
    tensors: Vec<Entry>,
}

pub fn checkpoint_to_json(store: &ParamStore) -> Result<String> {
    let ck = Checkpoint {
        format_version: CHECKPOINT_VERSION,
        tensors: store
            .ids()
            .map(|id| Entry {
                name: store.name(id).to_string(),
                shape: store.get(id).shape(),
                data: store.get(id).data().to_vec(),
            })
            .collect(),
    };
    Ok(serde_json::to_string(&ck)?)
}

pub fn checkpoint_from_json(text: &str) -> Result<ParamStore> {
    let ck: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Data(format!("checkpoint: {e}")))?;
    if ck.format_version != CHECKPOINT_VERSION {
        return Err(Error::Data(format!("unsupported checkpoint version {}", ck.format_version)));
    }
    let mut store = ParamStore::new();
    for e in ck.tensors {
        let t = Tensor::new(e.shape[0], e.shape[1], e.data).map_err(|_| Error::Data(format!("checkpoint tensor '{}' has wrong length", e.name)))?;
        store.add(e.name, t);
    }
    Ok(store)
}

pub fn save_checkpoint(store: &ParamStore, path: impl AsRef<Path>) -> Result<()> {
    let text = checkpoint_to_json(store)?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ParamStore> {
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    checkpoint_from_json(&text)
}
