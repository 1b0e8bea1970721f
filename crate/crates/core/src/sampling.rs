//! Seed/context pairs and negative sampling.
//!
//! Exponential sampling first draws a negative hyperedge `j != i` with
//! probability proportional to `exp(-gamma * Ak[i][j])`, where `Ak` is the
//! `path_k`-th power of the normalized hyperedge adjacency, and then a
//! uniform member of that hyperedge. Uniform sampling draws a uniform
//! `(hyperedge, member)` slot among the other hyperedges of the batch.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{build_hyperedge_adjacency, build_incidence, normalize_adjacency, Hypergraph, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingStrategy {
    Uniform,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    pub strategy: SamplingStrategy,
    pub gamma: f64,
    pub path_k: u32,
    pub num_negatives: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            strategy: SamplingStrategy::Exponential,
            gamma: 1.0,
            path_k: 2,
            num_negatives: 5,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.path_k == 0 {
            return Err(Error::Config("path_k must be at least 1".into()));
        }
        if self.num_negatives == 0 {
            return Err(Error::Config("num_negatives must be at least 1".into()));
        }
        Ok(())
    }
}

/// A uniformly drawn member of a hyperedge and the remaining members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedContextPair {
    pub hyperedge: usize,
    pub seed: usize,
    /// Position of the seed inside the hyperedge's member list.
    pub seed_position: usize,
    pub context: Vec<usize>,
}

impl SeedContextPair {
    /// Member positions of the context.
    pub fn context_positions(&self) -> impl Iterator<Item = usize> + '_ {
        let k = self.context.len() + 1;
        (0..k).filter(move |&p| p != self.seed_position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NegativeSample {
    pub node: usize,
    pub hyperedge: usize,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeSampleSet {
    pub anchor: usize,
    pub negatives: Vec<NegativeSample>,
}

/// `None` when the hyperedge has fewer than two members.
pub fn draw_seed_context(hg: &Hypergraph, i: usize, rng: &mut impl Rng) -> Result<Option<SeedContextPair>> {
    if i >= hg.num_hyperedges() {
        return Err(Error::InvalidArgument(format!("hyperedge {i} out of {}", hg.num_hyperedges())));
    }
    let e = hg.hyperedge(i);
    if e.len() < 2 {
        return Ok(None);
    }
    let p = rng.gen_range(0..e.len());
    Ok(Some(SeedContextPair {
        hyperedge: i,
        seed: e[p],
        seed_position: p,
        context: e.iter().enumerate().filter(|&(q, _)| q != p).map(|(_, &v)| v).collect(),
    }))
}

/// `a^k` by repeated sparse products.
pub fn path_count_matrix(a: &SparseMatrix, path_k: u32) -> Result<SparseMatrix> {
    if a.rows() != a.cols() {
        return Err(Error::shape("path_count_matrix", format!("{}x{} is not square", a.rows(), a.cols())));
    }
    if path_k == 0 {
        return Err(Error::InvalidArgument("path_k must be at least 1".into()));
    }
    let mut out = a.clone();
    for _ in 1..path_k {
        out = out.matmul(a)?;
    }
    Ok(out)
}

/// `Ak` for a hypergraph: the `path_k`-th power of its normalized hyperedge adjacency.
pub fn hypergraph_path_matrix(hg: &Hypergraph, path_k: u32) -> Result<SparseMatrix> {
    let a = build_hyperedge_adjacency(&build_incidence(hg), true);
    path_count_matrix(&normalize_adjacency(&a), path_k)
}

/// Sampling distribution over hyperedges for anchor `i`; entry `i` is zero.
pub fn exp_sampling_probs(ak: &SparseMatrix, i: usize, gamma: f64) -> Result<Vec<f64>> {
    let m = ak.rows();
    if i >= m {
        return Err(Error::InvalidArgument(format!("row {i} out of {m}")));
    }
    if m < 2 {
        return Err(Error::InvalidArgument("need at least two hyperedges to sample negatives".into()));
    }
    let mut w = vec![1.0; m];
    w[i] = 0.0;
    let (cols, vals) = ak.row(i);
    for (&j, &v) in cols.iter().zip(vals) {
        if j != i {
            w[j] = (-gamma * v).exp();
        }
    }
    let z: f64 = w.iter().sum();
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::NonFinite("exp_sampling_probs"));
    }
    Ok(w.into_iter().map(|x| x / z).collect())
}

/// Draws negative hyperedges from the exponential distribution without
/// materializing dense rows. Columns absent from a sparse row share the
/// weight `exp(0) = 1` and are drawn by rejection.
#[derive(Debug, Clone)]
pub struct ExpSampler {
    m: usize,
    gamma: f64,
    ak: SparseMatrix,
    /// Per row: cumulative weights of stored off-diagonal entries.
    cumulative: Vec<Vec<(usize, f64)>>,
    zero_count: Vec<usize>,
}

impl ExpSampler {
    pub fn new(ak: SparseMatrix, gamma: f64) -> Result<Self> {
        if ak.rows() != ak.cols() {
            return Err(Error::shape("ExpSampler", "matrix must be square"));
        }
        let m = ak.rows();
        let mut cumulative = Vec::with_capacity(m);
        let mut zero_count = Vec::with_capacity(m);
        for i in 0..m {
            let (cols, vals) = ak.row(i);
            let mut acc = 0.0;
            let mut row = Vec::with_capacity(cols.len());
            for (&j, &v) in cols.iter().zip(vals) {
                if j != i {
                    acc += (-gamma * v).exp();
                    row.push((j, acc));
                }
            }
            zero_count.push(m.saturating_sub(1 + row.len()));
            cumulative.push(row);
        }
        Ok(ExpSampler {
            m,
            gamma,
            ak,
            cumulative,
            zero_count,
        })
    }

    pub fn for_hypergraph(hg: &Hypergraph, config: &SamplingConfig) -> Result<Self> {
        Self::new(hypergraph_path_matrix(hg, config.path_k)?, config.gamma)
    }

    pub fn num_hyperedges(&self) -> usize {
        self.m
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.ak
    }

    pub fn probs(&self, i: usize) -> Result<Vec<f64>> {
        exp_sampling_probs(&self.ak, i, self.gamma)
    }

    /// One negative hyperedge for anchor `i`.
    pub fn sample_hyperedge(&self, i: usize, rng: &mut impl Rng) -> Result<usize> {
        if i >= self.m {
            return Err(Error::InvalidArgument(format!("anchor {i} out of {}", self.m)));
        }
        if self.m < 2 {
            return Err(Error::InvalidArgument("need at least two hyperedges to sample negatives".into()));
        }
        let row = &self.cumulative[i];
        let stored = row.last().map_or(0.0, |&(_, c)| c);
        let total = stored + self.zero_count[i] as f64;
        let u = rng.gen::<f64>() * total;
        if u < stored {
            let k = row.partition_point(|&(_, c)| c <= u).min(row.len() - 1);
            return Ok(row[k].0);
        }
        let (cols, _) = self.ak.row(i);
        loop {
            let j = rng.gen_range(0..self.m);
            if j != i && cols.binary_search(&j).is_err() {
                return Ok(j);
            }
        }
    }
}

/// `num` negatives for `pair`: exponential draw of a hyperedge, then a uniform member.
pub fn sample_negatives_exponential(
    hg: &Hypergraph,
    pair: &SeedContextPair,
    sampler: &ExpSampler,
    num: usize,
    rng: &mut impl Rng,
) -> Result<NegativeSampleSet> {
    if sampler.num_hyperedges() != hg.num_hyperedges() {
        return Err(Error::shape(
            "sample_negatives_exponential",
            format!("sampler covers {} hyperedges, hypergraph has {}", sampler.num_hyperedges(), hg.num_hyperedges()),
        ));
    }
    let mut negatives = Vec::with_capacity(num);
    for _ in 0..num {
        let j = sampler.sample_hyperedge(pair.hyperedge, rng)?;
        let e = hg.hyperedge(j);
        let p = rng.gen_range(0..e.len());
        negatives.push(NegativeSample {
            node: e[p],
            hyperedge: j,
            position: p,
        });
    }
    Ok(NegativeSampleSet {
        anchor: pair.hyperedge,
        negatives,
    })
}

/// `num` negatives drawn uniformly over the member slots of the other batch hyperedges.
pub fn sample_negatives_uniform_batch(
    hg: &Hypergraph,
    batch: &[usize],
    pair: &SeedContextPair,
    num: usize,
    rng: &mut impl Rng,
) -> Result<NegativeSampleSet> {
    let others: Vec<usize> = batch.iter().copied().filter(|&j| j != pair.hyperedge).collect();
    if others.is_empty() {
        return Err(Error::InvalidArgument("uniform batch sampling needs at least two hyperedges in the batch".into()));
    }
    if let Some(&j) = others.iter().find(|&&j| j >= hg.num_hyperedges()) {
        return Err(Error::InvalidArgument(format!("batch hyperedge {j} out of range")));
    }
    let mut cumulative = Vec::with_capacity(others.len());
    let mut total = 0;
    for &j in &others {
        total += hg.hyperedge(j).len();
        cumulative.push(total);
    }
    let mut negatives = Vec::with_capacity(num);
    for _ in 0..num {
        let u = rng.gen_range(0..total);
        let k = cumulative.partition_point(|&c| c <= u);
        let j = others[k];
        let p = u - if k == 0 { 0 } else { cumulative[k - 1] };
        negatives.push(NegativeSample {
            node: hg.hyperedge(j)[p],
            hyperedge: j,
            position: p,
        });
    }
    Ok(NegativeSampleSet {
        anchor: pair.hyperedge,
        negatives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hg(edges: Vec<Vec<usize>>, n: usize) -> Hypergraph {
        Hypergraph::new(n, edges, 0, vec![], None).unwrap()
    }

    #[test]
    fn seed_context_split() {
        let h = hg(vec![vec![0, 1, 2], vec![3]], 4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = draw_seed_context(&h, 0, &mut rng).unwrap().unwrap();
        assert_eq!(p.context.len(), 2);
        assert!(!p.context.contains(&p.seed));
        assert_eq!(h.hyperedge(0)[p.seed_position], p.seed);
        assert!(draw_seed_context(&h, 1, &mut rng).unwrap().is_none());
        let again = draw_seed_context(&h, 0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap().unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn seed_uniform_over_two() {
        let h = hg(vec![vec![0, 1]], 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 10_000;
        let zeros = (0..n)
            .filter(|_| draw_seed_context(&h, 0, &mut rng).unwrap().unwrap().seed == 0)
            .count();
        let sd = (n as f64 * 0.25).sqrt();
        assert!((zeros as f64 - n as f64 / 2.0).abs() < 4.0 * sd);
    }

    #[test]
    fn path_matrix_examples() {
        let a = SparseMatrix::from_dense(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(path_count_matrix(&a, 2).unwrap().to_dense(), vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(path_count_matrix(&a, 1).unwrap(), a);
        assert_eq!(path_count_matrix(&SparseMatrix::zeros(3, 3), 3).unwrap().nnz(), 0);
    }

    #[test]
    fn probs_hand_example() {
        let g = 1.7;
        let ak = SparseMatrix::from_dense(3, 3, &[0.0, 0.0, 2f64.ln() / g, 0.0, 0.0, 0.0, 2f64.ln() / g, 0.0, 0.0]);
        let p = exp_sampling_probs(&ak, 0, g).unwrap();
        assert!((p[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p[2] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(p[0], 0.0);
    }

    #[test]
    fn equal_entries_give_uniform() {
        let ak = SparseMatrix::from_dense(4, 4, &[0.5; 16]);
        let p = exp_sampling_probs(&ak, 2, 1.0).unwrap();
        for (j, x) in p.iter().enumerate() {
            let want = if j == 2 { 0.0 } else { 1.0 / 3.0 };
            assert!((x - want).abs() < 1e-15);
        }
        assert!(exp_sampling_probs(&SparseMatrix::zeros(1, 1), 0, 1.0).is_err());
    }

    #[test]
    fn disjoint_pair_samples_other() {
        let h = hg(vec![vec![0, 1], vec![2, 3]], 4);
        let s = ExpSampler::for_hypergraph(&h, &SamplingConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = draw_seed_context(&h, 0, &mut rng).unwrap().unwrap();
        let neg = sample_negatives_exponential(&h, &p, &s, 20, &mut rng).unwrap();
        assert!(neg.negatives.iter().all(|n| n.hyperedge == 1 && (n.node == 2 || n.node == 3)));
    }

    #[test]
    fn sampler_matches_probs() {
        let ak = SparseMatrix::from_dense(4, 4, &[0.3, 2.0, 0.0, 0.7, 2.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.7, 0.0, 0.0, 0.1]);
        let s = ExpSampler::new(ak.clone(), 1.0).unwrap();
        let p = exp_sampling_probs(&ak, 0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 40_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[s.sample_hyperedge(0, &mut rng).unwrap()] += 1;
        }
        assert_eq!(counts[0], 0);
        for j in 1..4 {
            let sd = (n as f64 * p[j] * (1.0 - p[j])).sqrt();
            assert!((counts[j] as f64 - n as f64 * p[j]).abs() < 4.0 * sd, "{j}");
        }
    }

    #[test]
    fn uniform_batch_rules() {
        let h = hg(vec![vec![0, 1], vec![1, 2], vec![3]], 4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = draw_seed_context(&h, 0, &mut rng).unwrap().unwrap();
        let neg = sample_negatives_uniform_batch(&h, &[0, 1], &p, 10_000, &mut rng).unwrap();
        assert!(neg.negatives.iter().all(|n| n.hyperedge == 1));
        let ones = neg.negatives.iter().filter(|n| n.node == 1).count();
        assert!((ones as f64 - 5000.0).abs() < 3.0 * 50.0);
        assert!(sample_negatives_uniform_batch(&h, &[0], &p, 1, &mut rng).is_err());
    }
}
