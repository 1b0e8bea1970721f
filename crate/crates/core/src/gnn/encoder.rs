//! Batched GNN forward pass over independent expanded hyperedges.
//!
//! A batch is a list of groups (node lists). Every group is expanded on its
//! own, so a node shared by two groups gets one embedding per group. The
//! first layer sees constant features, so its aggregated input is formed as
//! a sparse product and identical input rows are evaluated once.

use std::collections::HashMap;
use std::rc::Rc;

use rand::Rng;

use super::layer::{local_adjacency, ChannelInput, Layer};
use super::{Expansion, GnnConfig, LayerKind, ModuleMode};
use crate::autodiff::{ParamId, ParamStore, Tape, Var};
use crate::error::{Error, Result};
use crate::hypergraph::SparseMatrix;

/// Mean of the embeddings at the listed `(group, member position)` slots.
pub type Readout = Vec<(usize, usize)>;

/// One mean-over-all-members readout per group.
pub fn hyperedge_readouts(groups: &[&[usize]]) -> Vec<Readout> {
    groups
        .iter()
        .enumerate()
        .map(|(g, e)| (0..e.len()).map(|p| (g, p)).collect())
        .collect()
}

/// GNN parameters Θ: one stack of layers per branch.
#[derive(Debug, Clone)]
pub struct Encoder {
    config: GnnConfig,
    input_dim: usize,
    branches: Vec<Vec<Layer>>,
}

impl Encoder {
    pub fn new(
        store: &mut ParamStore,
        config: &GnnConfig,
        input_dim: usize,
        mode: ModuleMode,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        config.validate()?;
        if input_dim == 0 {
            return Err(Error::Config("node features must have at least one column".into()));
        }
        let count = match mode {
            ModuleMode::OneGnn => 1,
            ModuleMode::TwoGnn => 2,
        };
        let branches = (0..count)
            .map(|b| {
                (0..config.num_layers)
                    .map(|l| {
                        let din = if l == 0 { input_dim } else { config.hidden_dim };
                        Layer::new(
                            store,
                            &format!("gnn{b}.layer{l}"),
                            config.layer_kind,
                            config.gin_eps,
                            din,
                            config.hidden_dim,
                            rng,
                        )
                    })
                    .collect()
            })
            .collect();
        Ok(Encoder {
            config: config.clone(),
            input_dim,
            branches,
        })
    }

    pub fn config(&self) -> &GnnConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn layers(&self, branch: usize) -> &[Layer] {
        &self.branches[branch]
    }

    /// Width of one branch's node embeddings.
    pub fn hidden_dim(&self) -> usize {
        self.config.hidden_dim
    }

    /// Width of the hyperedge representation (branches concatenated).
    pub fn representation_dim(&self) -> usize {
        self.config.hidden_dim * self.branches.len()
    }

    pub fn branch_params(&self, branch: usize) -> Vec<ParamId> {
        self.branches[branch].iter().flat_map(Layer::params).collect()
    }

    pub fn params(&self) -> Vec<ParamId> {
        (0..self.branches.len()).flat_map(|b| self.branch_params(b)).collect()
    }

    /// Run `branch` over every group and return one row per readout.
    pub fn embed(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        features: &SparseMatrix,
        branch: usize,
        groups: &[&[usize]],
        readouts: &[Readout],
    ) -> Result<Var> {
        let layers = self
            .branches
            .get(branch)
            .ok_or_else(|| Error::InvalidArgument(format!("no GNN branch {branch}")))?;
        if features.cols() != self.input_dim {
            return Err(Error::shape(
                "embed",
                format!("{} feature columns, encoder expects {}", features.cols(), self.input_dim),
            ));
        }
        if readouts.is_empty() {
            return Err(Error::InvalidArgument("no readouts requested".into()));
        }
        let tree = self.config.expansion == Expansion::Tree;
        let mut offsets = Vec::with_capacity(groups.len() + 1);
        offsets.push(0);
        let mut owner = Vec::new();
        for (g, e) in groups.iter().enumerate() {
            if e.is_empty() {
                return Err(Error::InvalidArgument(format!("group {g} is empty")));
            }
            if let Some(&v) = e.iter().find(|&&v| v >= features.rows()) {
                return Err(Error::InvalidArgument(format!("node {v} outside feature matrix")));
            }
            let local = e.len() + usize::from(tree);
            owner.extend(std::iter::repeat_n(g, local));
            offsets.push(offsets[g] + local);
        }
        let total = offsets[groups.len()];
        for ro in readouts {
            if ro.is_empty() {
                return Err(Error::InvalidArgument("empty readout".into()));
            }
            for &(g, p) in ro {
                if g >= groups.len() || p >= groups[g].len() {
                    return Err(Error::InvalidArgument(format!("readout slot ({g}, {p}) out of range")));
                }
            }
        }
        let mut final_rows: Vec<usize> = readouts
            .iter()
            .flat_map(|ro| ro.iter().map(|&(g, p)| offsets[g] + p))
            .collect();
        final_rows.sort_unstable();
        final_rows.dedup();

        let mut adj_cache: HashMap<usize, Vec<Vec<usize>>> = HashMap::new();
        for e in groups {
            adj_cache
                .entry(e.len())
                .or_insert_with(|| local_adjacency(self.config.expansion, e.len()));
        }
        let nl = layers.len();

        // Layer 1 on constant inputs.
        let first = &layers[0];
        let l1_rows: Vec<usize> = if nl == 1 { final_rows.clone() } else { (0..total).collect() };
        let channels = if first.kind() == LayerKind::Sage { 2 } else { 1 };
        let mut lists: Vec<Vec<Vec<(usize, f64)>>> = vec![Vec::with_capacity(l1_rows.len()); channels];
        for &r in &l1_rows {
            let g = owner[r];
            let e = groups[g];
            let k = e.len();
            let agg = first.aggregation(&adj_cache[&k], &[r - offsets[g]]);
            for (c, mut ch) in agg.into_iter().enumerate() {
                let mut row = Vec::new();
                for (b, w) in ch.pop().expect("one row") {
                    if b < k {
                        row.push((e[b], w));
                    } else {
                        let share = w / k as f64;
                        row.extend(e.iter().map(|&v| (v, share)));
                    }
                }
                lists[c].push(row);
            }
        }
        let agg_feats: Vec<SparseMatrix> = lists
            .into_iter()
            .map(|l| SparseMatrix::from_row_lists(l1_rows.len(), features.rows(), l).matmul(features))
            .collect::<Result<_>>()?;

        let mut key_index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut unique = Vec::new();
        let mut slot = Vec::with_capacity(l1_rows.len());
        for i in 0..l1_rows.len() {
            let mut key = Vec::new();
            for m in &agg_feats {
                let (idx, val) = m.row(i);
                key.push(idx.len() as u64);
                key.extend(idx.iter().map(|&c| c as u64));
                key.extend(val.iter().map(|v| v.to_bits()));
            }
            let next = unique.len();
            let u = *key_index.entry(key).or_insert(next);
            if u == next {
                unique.push(i);
            }
            slot.push(u);
        }
        let inputs = agg_feats
            .iter()
            .map(|m| ChannelInput::Const(Rc::new(m.select_rows(&unique))))
            .collect();
        let mut h = first.apply(tape, store, inputs)?;

        // Readout rows refer to positions in `h`.
        let mut position: Vec<usize>;
        if nl == 1 {
            position = vec![usize::MAX; total];
            for (i, &r) in l1_rows.iter().enumerate() {
                position[r] = slot[i];
            }
        } else {
            if unique.len() < l1_rows.len() {
                h = tape.gather_rows(h, Rc::new(slot))?;
            }
            for l in 1..nl {
                if first.kind() == LayerKind::Gin {
                    h = tape.relu(h)?;
                }
                let layer = &layers[l];
                let rows: Vec<usize> = if l == nl - 1 { final_rows.clone() } else { (0..total).collect() };
                let mut lists: Vec<Vec<Vec<(usize, f64)>>> = vec![Vec::with_capacity(rows.len()); channels];
                for &r in &rows {
                    let g = owner[r];
                    let agg = layer.aggregation(&adj_cache[&groups[g].len()], &[r - offsets[g]]);
                    for (c, mut ch) in agg.into_iter().enumerate() {
                        let row = ch
                            .pop()
                            .expect("one row")
                            .into_iter()
                            .map(|(b, w)| (offsets[g] + b, w))
                            .collect();
                        lists[c].push(row);
                    }
                }
                let mut inputs = Vec::with_capacity(channels);
                for l in lists {
                    let s = Rc::new(SparseMatrix::from_row_lists(rows.len(), total, l));
                    inputs.push(ChannelInput::Var(tape.spmm(s, h)?));
                }
                h = layer.apply(tape, store, inputs)?;
            }
            position = vec![usize::MAX; total];
            for (i, &r) in final_rows.iter().enumerate() {
                position[r] = i;
            }
        }

        let width = tape.value(h).rows();
        let pool: Vec<Vec<(usize, f64)>> = readouts
            .iter()
            .map(|ro| {
                let w = 1.0 / ro.len() as f64;
                ro.iter().map(|&(g, p)| (position[offsets[g] + p], w)).collect()
            })
            .collect();
        let pool = SparseMatrix::from_row_lists(readouts.len(), width, pool);
        tape.spmm(Rc::new(pool), h)
    }

    /// Mean-pooled hyperedge representations, branches concatenated.
    pub fn hyperedge_embeddings(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        features: &SparseMatrix,
        groups: &[&[usize]],
    ) -> Result<Var> {
        let readouts = hyperedge_readouts(groups);
        let mut out = self.embed(tape, store, features, 0, groups, &readouts)?;
        for b in 1..self.branches.len() {
            let other = self.embed(tape, store, features, b, groups, &readouts)?;
            out = tape.concat(out, other)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use crate::gnn::message_pass_layer;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn features(n: usize, d: usize, seed: u64) -> SparseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * d)
            .map(|_| if rng.gen::<f64>() < 0.4 { rng.gen_range(-1.0..1.0) } else { 0.0 })
            .collect();
        SparseMatrix::from_dense(n, d, &data)
    }

    fn encoder(kind: LayerKind, layers: usize, expansion: Expansion, eps: f64) -> (ParamStore, Encoder) {
        let mut store = ParamStore::new();
        let cfg = GnnConfig {
            layer_kind: kind,
            num_layers: layers,
            hidden_dim: 5,
            gin_eps: eps,
            expansion,
            head_dropout: 0.5,
        };
        let enc = Encoder::new(&mut store, &cfg, 4, ModuleMode::OneGnn, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        (store, enc)
    }

    /// Node embeddings of one group computed layer by layer on the explicit expansion.
    fn reference(enc: &Encoder, store: &ParamStore, f: &SparseMatrix, group: &[usize]) -> Vec<Vec<f64>> {
        let k = group.len();
        let d = f.cols();
        let dense = f.to_dense();
        let mut x: Vec<f64> = group.iter().flat_map(|&v| dense[v * d..(v + 1) * d].to_vec()).collect();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut rows = k;
        match enc.config().expansion {
            Expansion::Clique => {
                for a in 0..k {
                    for b in a + 1..k {
                        edges.push((a, b));
                    }
                }
            }
            Expansion::Tree => {
                let mut root = vec![0.0; d];
                for r in x.chunks(d) {
                    root.iter_mut().zip(r).for_each(|(o, v)| *o += v / k as f64);
                }
                x.extend(root);
                edges.extend((0..k).map(|a| (a, k)));
                rows += 1;
            }
        }
        let mut t = Tape::eval();
        let mut h = t.constant(Tensor::new(rows, d, x).unwrap()).unwrap();
        let layers = enc.layers(0);
        for (l, layer) in layers.iter().enumerate() {
            h = message_pass_layer(&mut t, store, layer, h, &edges).unwrap();
            if layer.kind() == LayerKind::Gin && l + 1 < layers.len() {
                h = t.relu(h).unwrap();
            }
        }
        (0..k).map(|a| t.value(h).row(a).to_vec()).collect()
    }

    #[test]
    fn batched_matches_per_group_reference() {
        let f = features(9, 4, 11);
        let groups: Vec<Vec<usize>> = vec![vec![0, 1, 2], vec![2, 3], vec![4], vec![5, 6, 7, 8, 0]];
        let refs: Vec<&[usize]> = groups.iter().map(Vec::as_slice).collect();
        for kind in [LayerKind::Gin, LayerKind::Gcn, LayerKind::Sage] {
            for expansion in [Expansion::Clique, Expansion::Tree] {
                for layers in 1..=3 {
                    for eps in [0.0, 0.25] {
                        let (store, enc) = encoder(kind, layers, expansion, eps);
                        let readouts: Vec<Readout> = refs
                            .iter()
                            .enumerate()
                            .flat_map(|(g, e)| (0..e.len()).map(move |p| vec![(g, p)]))
                            .collect();
                        let mut t = Tape::eval();
                        let out = enc.embed(&mut t, &store, &f, 0, &refs, &readouts).unwrap();
                        let mut row = 0;
                        for e in &refs {
                            for want in reference(&enc, &store, &f, e) {
                                let got = t.value(out).row(row);
                                for (a, b) in got.iter().zip(&want) {
                                    assert!((a - b).abs() < 1e-12, "{kind:?} {expansion:?} L={layers}");
                                }
                                row += 1;
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn order_within_hyperedge_irrelevant() {
        let f = features(6, 4, 5);
        for kind in [LayerKind::Gin, LayerKind::Gcn, LayerKind::Sage] {
            let (store, enc) = encoder(kind, 2, Expansion::Clique, 0.1);
            let a: &[usize] = &[0, 3, 5, 1];
            let b: &[usize] = &[5, 1, 0, 3];
            let mut t = Tape::eval();
            let x = enc.hyperedge_embeddings(&mut t, &store, &f, &[a, b]).unwrap();
            let v = t.value(x);
            for (p, q) in v.row(0).iter().zip(v.row(1)) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identical_features_identical_embeddings() {
        let f = SparseMatrix::from_dense(3, 4, &[1.0, 0.0, 2.0, 0.0].repeat(3));
        let (store, enc) = encoder(LayerKind::Sage, 2, Expansion::Clique, 0.0);
        let g: &[usize] = &[0, 1, 2];
        let mut t = Tape::eval();
        let out = enc.embed(&mut t, &store, &f, 0, &[g], &[vec![(0, 0)], vec![(0, 1)], vec![(0, 2)]]).unwrap();
        let v = t.value(out);
        assert_eq!(v.row(0), v.row(1));
        assert_eq!(v.row(1), v.row(2));
    }

    #[test]
    fn gin_hand_example() {
        let mut store = ParamStore::new();
        let cfg = GnnConfig { hidden_dim: 1, ..GnnConfig::default() };
        let enc = Encoder::new(&mut store, &cfg, 1, ModuleMode::OneGnn, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for id in enc.params() {
            let [r, c] = store.get(id).shape();
            let v = if store.name(id).ends_with('b') { 0.0 } else { 1.0 };
            store.set(id, Tensor::new(r, c, vec![v; r * c]).unwrap());
        }
        let f = SparseMatrix::from_dense(2, 1, &[1.0, 2.0]);
        let g: &[usize] = &[0, 1];
        let mut t = Tape::eval();
        let out = enc.embed(&mut t, &store, &f, 0, &[g], &[vec![(0, 0)], vec![(0, 1)]]).unwrap();
        assert_eq!(t.value(out).data(), &[3.0, 3.0]);
    }

    #[test]
    fn two_branch_representation_width() {
        let mut store = ParamStore::new();
        let cfg = GnnConfig { hidden_dim: 3, ..GnnConfig::default() };
        let enc = Encoder::new(&mut store, &cfg, 4, ModuleMode::TwoGnn, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(enc.representation_dim(), 6);
        let p0 = enc.branch_params(0);
        assert!(enc.branch_params(1).iter().all(|p| !p0.contains(p)));
        let f = features(4, 4, 2);
        let g: &[usize] = &[0, 1, 2];
        let mut t = Tape::eval();
        let h = enc.hyperedge_embeddings(&mut t, &store, &f, &[g]).unwrap();
        assert_eq!(t.value(h).shape(), [1, 6]);
    }

    #[test]
    fn bad_readout_rejected() {
        let (store, enc) = encoder(LayerKind::Gin, 1, Expansion::Clique, 0.0);
        let f = features(3, 4, 1);
        let g: &[usize] = &[0, 1];
        let mut t = Tape::eval();
        assert!(enc.embed(&mut t, &store, &f, 0, &[g], &[vec![(0, 2)]]).is_err());
        assert!(enc.embed(&mut t, &store, &f, 0, &[g], &[vec![]]).is_err());
        assert!(enc.embed(&mut t, &store, &f, 1, &[g], &[vec![(0, 0)]]).is_err());
    }
}
