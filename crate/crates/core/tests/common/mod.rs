#![allow(dead_code)]

use hypergene::hypergraph::Hypergraph;
use hypergene::training::TrainConfig;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Labeled hypergraph with `classes` node communities. Node features carry a
/// noisy class indicator, hyperedges draw most members from one community
/// and take its label.
pub fn planted(seed: u64, classes: usize, nodes_per_class: usize, edges_per_class: usize) -> Hypergraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = classes * nodes_per_class;
    let dim = classes + 4;
    let mut features = vec![0.0; n * dim];
    for v in 0..n {
        let c = v / nodes_per_class;
        for k in 0..dim {
            let on = if k == c { rng.gen::<f64>() < 0.7 } else { rng.gen::<f64>() < 0.15 };
            if on {
                features[v * dim + k] = 1.0;
            }
        }
    }
    let mut edges = Vec::new();
    let mut labels = Vec::new();
    for c in 0..classes {
        let members: Vec<usize> = (c * nodes_per_class..(c + 1) * nodes_per_class).collect();
        for _ in 0..edges_per_class {
            let size = rng.gen_range(2..=5usize).min(nodes_per_class);
            let mut e: Vec<usize> = members.choose_multiple(&mut rng, size).copied().collect();
            if rng.gen::<f64>() < 0.3 {
                let v = rng.gen_range(0..n);
                if !e.contains(&v) {
                    e.push(v);
                }
            }
            edges.push(e);
            labels.push(c);
        }
    }
    Hypergraph::new(n, edges, dim, features, Some(labels)).unwrap()
}

/// Small, fast training configuration.
pub fn quick_config(seed: u64) -> TrainConfig {
    let mut c = TrainConfig::default();
    c.epochs_node = 3;
    c.epochs_hyperedge = 3;
    c.epochs_finetune = 30;
    c.gnn.hidden_dim = 16;
    c.batch_size = 16;
    c.lr = 0.01;
    c.seed = seed;
    c
}
