use std::rc::Rc;

use rand::Rng;

use super::{Expansion, LayerKind};
use crate::autodiff::{ParamId, ParamStore, Tape, Var};
use crate::error::{Error, Result};
use crate::hypergraph::SparseMatrix;

/// One message-passing layer.
///
/// GIN: `MLP((1 + eps) h_v + sum_{w in N(v)} h_w)` with a two-layer MLP.
/// GCN: `relu(W sum_{w in N(v) + v} h_w / sqrt(d_v d_w))` with self-loops in the degrees.
/// SAGE: `relu(W_self h_v + W_neigh mean_{w in N(v)} h_w + b)`.
#[derive(Debug, Clone)]
pub struct Layer {
    kind: LayerKind,
    eps: f64,
    weights: Vec<ParamId>,
    bias: ParamId,
    second: Option<(ParamId, ParamId)>,
    in_dim: usize,
    out_dim: usize,
}

pub(crate) enum ChannelInput {
    Var(Var),
    Const(Rc<SparseMatrix>),
}

impl Layer {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        kind: LayerKind,
        eps: f64,
        in_dim: usize,
        out_dim: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let channels = if kind == LayerKind::Sage { 2 } else { 1 };
        let weights = (0..channels)
            .map(|c| store.add_glorot(format!("{name}.w{c}"), in_dim, out_dim, rng))
            .collect();
        let bias = store.add_zeros(format!("{name}.b"), 1, out_dim);
        let second = (kind == LayerKind::Gin).then(|| {
            (
                store.add_glorot(format!("{name}.mlp_w"), out_dim, out_dim, rng),
                store.add_zeros(format!("{name}.mlp_b"), 1, out_dim),
            )
        });
        Layer {
            kind,
            eps,
            weights,
            bias,
            second,
            in_dim,
            out_dim,
        }
    }

    pub fn kind(&self) -> LayerKind {
        self.kind
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// Weight matrices, one per aggregation channel.
    pub fn weights(&self) -> &[ParamId] {
        &self.weights
    }

    pub fn bias(&self) -> ParamId {
        self.bias
    }

    /// Second linear map of the GIN MLP.
    pub fn mlp_output(&self) -> Option<(ParamId, ParamId)> {
        self.second
    }

    pub fn params(&self) -> Vec<ParamId> {
        let mut p = self.weights.clone();
        p.push(self.bias);
        if let Some((w, b)) = self.second {
            p.extend([w, b]);
        }
        p
    }

    /// Per-channel aggregation rows for the listed output rows.
    pub fn aggregation(&self, adj: &[Vec<usize>], rows: &[usize]) -> Vec<Vec<Vec<(usize, f64)>>> {
        aggregation(self.kind, self.eps, adj, rows)
    }

    pub(crate) fn apply(&self, tape: &mut Tape, store: &ParamStore, inputs: Vec<ChannelInput>) -> Result<Var> {
        if inputs.len() != self.weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} channel inputs for a layer with {}",
                inputs.len(),
                self.weights.len()
            )));
        }
        let mut pre: Option<Var> = None;
        for (input, &w) in inputs.into_iter().zip(&self.weights) {
            let wv = tape.param(store, w)?;
            let proj = match input {
                ChannelInput::Var(x) => tape.matmul(x, wv)?,
                ChannelInput::Const(s) => tape.spmm(s, wv)?,
            };
            pre = Some(match pre {
                None => proj,
                Some(p) => tape.add(p, proj)?,
            });
        }
        let b = tape.param(store, self.bias)?;
        let pre = tape.add(pre.expect("at least one channel"), b)?;
        let hidden = tape.relu(pre)?;
        match self.second {
            Some((w2, b2)) => {
                let w2 = tape.param(store, w2)?;
                let b2 = tape.param(store, b2)?;
                let out = tape.matmul(hidden, w2)?;
                tape.add(out, b2)
            }
            None => Ok(hidden),
        }
    }
}

/// Local neighbour lists for an expanded hyperedge of `k` members. Tree
/// expansion adds the virtual root as local node `k`.
pub fn local_adjacency(expansion: Expansion, k: usize) -> Vec<Vec<usize>> {
    match expansion {
        Expansion::Clique => (0..k).map(|a| (0..k).filter(|&b| b != a).collect()).collect(),
        Expansion::Tree => {
            let mut adj: Vec<Vec<usize>> = (0..k).map(|_| vec![k]).collect();
            adj.push((0..k).collect());
            adj
        }
    }
}

/// Aggregation coefficients per channel: `out[c][i]` lists `(source, weight)`
/// for output row `rows[i]`.
pub fn aggregation(kind: LayerKind, eps: f64, adj: &[Vec<usize>], rows: &[usize]) -> Vec<Vec<Vec<(usize, f64)>>> {
    match kind {
        LayerKind::Gin => vec![rows
            .iter()
            .map(|&a| {
                let mut r = Vec::with_capacity(adj[a].len() + 1);
                r.push((a, 1.0 + eps));
                r.extend(adj[a].iter().map(|&b| (b, 1.0)));
                r
            })
            .collect()],
        LayerKind::Gcn => vec![rows
            .iter()
            .map(|&a| {
                let da = (adj[a].len() + 1) as f64;
                let mut r = Vec::with_capacity(adj[a].len() + 1);
                r.push((a, 1.0 / da));
                r.extend(adj[a].iter().map(|&b| (b, 1.0 / (da * (adj[b].len() + 1) as f64).sqrt())));
                r
            })
            .collect()],
        LayerKind::Sage => {
            let own = rows.iter().map(|&a| vec![(a, 1.0)]).collect();
            let neigh = rows
                .iter()
                .map(|&a| {
                    let d = adj[a].len() as f64;
                    adj[a].iter().map(|&b| (b, 1.0 / d)).collect()
                })
                .collect();
            vec![own, neigh]
        }
    }
}

/// Apply `layer` to node embeddings `h` over an undirected edge list.
pub fn message_pass_layer(
    tape: &mut Tape,
    store: &ParamStore,
    layer: &Layer,
    h: Var,
    edges: &[(usize, usize)],
) -> Result<Var> {
    let n = tape.value(h).rows();
    if tape.value(h).cols() != layer.in_dim {
        return Err(Error::shape(
            "message_pass_layer",
            format!("{} input columns for layer of width {}", tape.value(h).cols(), layer.in_dim),
        ));
    }
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        if u >= n || v >= n {
            return Err(Error::InvalidArgument(format!("edge ({u}, {v}) outside {n} nodes")));
        }
        if u != v && !adj[u].contains(&v) {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    let rows: Vec<usize> = (0..n).collect();
    let mut inputs = Vec::new();
    for ch in layer.aggregation(&adj, &rows) {
        let s = Rc::new(SparseMatrix::from_row_lists(n, n, ch));
        inputs.push(ChannelInput::Var(tape.spmm(s, h)?));
    }
    layer.apply(tape, store, inputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity_layer(kind: LayerKind, dim: usize) -> (ParamStore, Layer) {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let layer = Layer::new(&mut store, "l", kind, 0.0, dim, dim, &mut rng);
        for &w in layer.weights() {
            store.set(w, Tensor::identity(dim));
        }
        if let Some((w, _)) = layer.mlp_output() {
            store.set(w, Tensor::identity(dim));
        }
        (store, layer)
    }

    fn run(kind: LayerKind, h: Tensor, edges: &[(usize, usize)]) -> Vec<f64> {
        let (store, layer) = identity_layer(kind, h.cols());
        let mut t = Tape::eval();
        let x = t.constant(h).unwrap();
        let out = message_pass_layer(&mut t, &store, &layer, x, edges).unwrap();
        t.value(out).data().to_vec()
    }

    #[test]
    fn gin_single_node_is_identity() {
        assert_eq!(run(LayerKind::Gin, Tensor::row_vector(vec![2.5]), &[]), vec![2.5]);
    }

    #[test]
    fn gin_two_nodes_sum() {
        let h = Tensor::new(2, 1, vec![1.0, 3.0]).unwrap();
        assert_eq!(run(LayerKind::Gin, h, &[(0, 1)]), vec![4.0, 4.0]);
    }

    #[test]
    fn gcn_k2_symmetric() {
        let h = Tensor::new(2, 2, vec![1.0, 2.0, 1.0, 2.0]).unwrap();
        let out = run(LayerKind::Gcn, h, &[(0, 1)]);
        assert_eq!(out[..2], out[2..]);
    }

    #[test]
    fn sage_self_plus_mean() {
        let h = Tensor::new(3, 1, vec![1.0, 2.0, 4.0]).unwrap();
        let out = run(LayerKind::Sage, h, &[(0, 1), (0, 2)]);
        assert_eq!(out, vec![1.0 + 3.0, 2.0 + 1.0, 4.0 + 1.0]);
    }

    #[test]
    fn tree_adjacency_is_star() {
        let adj = local_adjacency(Expansion::Tree, 3);
        assert_eq!(adj, vec![vec![3], vec![3], vec![3], vec![0, 1, 2]]);
        let clique = local_adjacency(Expansion::Clique, 3);
        assert_eq!(clique[1], vec![0, 2]);
    }
}
