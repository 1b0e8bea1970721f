//! Training loops for the pretext phases, fine-tuning and joint training.

use std::collections::HashMap;
use std::path::Path;
use std::rc::Rc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::losses::{cross_entropy, hyperedge_pretext_loss, node_pretext_loss, variant_cosine_loss, variant_regression_loss};
use super::{stream_rng, streams, HyperedgeObjective, ModelState, NodeObjective, Provenance, TrainConfig};
use crate::autodiff::{sgd_step, Adam, ParamId, PlateauScheduler, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::gnn::{Head, Readout};
use crate::hypergraph::{build_hyperedge_adjacency, build_incidence, Hypergraph, SparseMatrix};
use crate::partition::partition_hypergraph;
use crate::sampling::{
    draw_seed_context, path_count_matrix, sample_negatives_exponential, sample_negatives_uniform_batch, ExpSampler,
    NegativeSampleSet, SamplingStrategy, SeedContextPair,
};

type Snapshot = Vec<(ParamId, Tensor)>;

const EVAL_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRow {
    pub epoch: usize,
    pub phase: String,
    pub loss: f64,
    pub val_accuracy: Option<f64>,
    pub lr: f64,
    pub wall_ms: f64,
}

/// Per-epoch (or per-step) training records.
#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
}

impl TrainLog {
    fn push(&mut self, epoch: usize, phase: &str, loss: f64, val_accuracy: Option<f64>, lr: f64, start: Instant) {
        self.rows.push(LogRow {
            epoch,
            phase: phase.to_string(),
            loss,
            val_accuracy,
            lr,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }

    pub fn phase(&self, phase: &str) -> impl Iterator<Item = &LogRow> {
        let phase = phase.to_string();
        self.rows.iter().filter(move |r| r.phase == phase)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(&path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(&path, io),
            other => Error::Data(format!("{other:?}")),
        })?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }
}

/// Result of a pretext phase: the fresh head it trained and its loss curve.
#[derive(Debug, Clone)]
pub struct PhaseOutcome {
    pub head: Head,
    /// Mean loss per epoch, or the loss of each step for adaptation.
    pub losses: Vec<f64>,
    /// Epoch whose parameters were kept, when the phase keeps the best one.
    pub best_epoch: Option<usize>,
}

/// Downstream classifier produced by fine-tuning or joint training.
#[derive(Debug, Clone)]
pub struct Classifier {
    pub head: Head,
    pub num_classes: usize,
    pub best_epoch: usize,
    pub best_val_accuracy: Option<f64>,
    pub epochs_run: usize,
    /// Training loss of every optimizer step.
    pub step_losses: Vec<f64>,
}

impl Classifier {
    pub fn predict(&self, state: &ModelState, features: &SparseMatrix, hg: &Hypergraph, ids: &[usize]) -> Result<Vec<usize>> {
        let logits = predict_logits(state, &self.head, features, hg, ids)?;
        Ok((0..logits.rows()).map(|r| argmax(logits.row(r))).collect())
    }

    pub fn predict_proba(&self, state: &ModelState, features: &SparseMatrix, hg: &Hypergraph, ids: &[usize]) -> Result<Tensor> {
        predict_proba(state, &self.head, features, hg, ids)
    }
}

/// Loss components of one joint-training step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointStep {
    pub total: f64,
    pub task: f64,
    pub node: Option<f64>,
    pub hyperedge: Option<f64>,
}

/// Self-labels for the hyperedge-level pretext on one hyperedge set.
#[derive(Debug, Clone)]
pub enum HyperedgeTargets {
    Clusters { labels: Vec<usize>, q: usize },
    /// Adjacency power of the set, diagonal kept.
    Regression { power: SparseMatrix },
}

impl HyperedgeTargets {
    pub fn len(&self) -> usize {
        match self {
            HyperedgeTargets::Clusters { labels, .. } => labels.len(),
            HyperedgeTargets::Regression { power } => power.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn output_dim(&self, hidden: usize) -> usize {
        match self {
            HyperedgeTargets::Clusters { q, .. } => *q,
            HyperedgeTargets::Regression { .. } => hidden,
        }
    }
}

/// `A^k` for the hyperedges of `hg`, with hyperedge sizes on the diagonal.
pub fn regression_target(hg: &Hypergraph, power: u32) -> Result<SparseMatrix> {
    let a = build_hyperedge_adjacency(&build_incidence(hg), false);
    path_count_matrix(&a, power)
}

/// Targets for the configured hyperedge objective over all hyperedges of `hg`.
pub fn hyperedge_targets(hg: &Hypergraph, config: &TrainConfig, q: usize) -> Result<HyperedgeTargets> {
    match config.hyperedge_objective {
        HyperedgeObjective::Clustering => {
            let seed = stream_rng(config.seed, streams::PARTITION).gen::<u64>();
            let p = partition_hypergraph(hg, q, seed)?;
            Ok(HyperedgeTargets::Clusters { labels: p.labels, q })
        }
        HyperedgeObjective::Regression => Ok(HyperedgeTargets::Regression {
            power: regression_target(hg, config.regression_power)?,
        }),
    }
}

/// Shuffled index batches. A trailing batch of one is merged into the previous
/// batch so every batch offers in-batch negatives.
pub fn make_batches(n: usize, batch_size: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut batches: Vec<Vec<usize>> = order.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect();
    if batches.len() >= 2 && batches.last().is_some_and(|b| b.len() == 1) {
        let last = batches.pop().expect("checked");
        batches.last_mut().expect("checked").extend(last);
    }
    batches
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Eval-mode logits of `head` over the hyperedges `ids` of `hg`.
pub fn predict_logits(state: &ModelState, head: &Head, features: &SparseMatrix, hg: &Hypergraph, ids: &[usize]) -> Result<Tensor> {
    let mut data = Vec::with_capacity(ids.len() * head.out_dim());
    for chunk in ids.chunks(EVAL_CHUNK) {
        let mut tape = Tape::eval();
        let groups: Vec<&[usize]> = chunk.iter().map(|&i| hg.hyperedge(i)).collect();
        let h = state.encoder.hyperedge_embeddings(&mut tape, &state.store, features, &groups)?;
        let z = head.forward(&mut tape, &state.store, h)?;
        data.extend_from_slice(tape.value(z).data());
    }
    Tensor::new(ids.len(), head.out_dim(), data)
}

/// Row-wise softmax of [`predict_logits`].
pub fn predict_proba(state: &ModelState, head: &Head, features: &SparseMatrix, hg: &Hypergraph, ids: &[usize]) -> Result<Tensor> {
    let mut t = predict_logits(state, head, features, hg, ids)?;
    let c = t.cols();
    for row in t.data_mut().chunks_mut(c.max(1)) {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        row.iter_mut().for_each(|v| *v /= s);
    }
    Ok(t)
}

struct NodeBatch {
    pairs: Vec<SeedContextPair>,
    negatives: Vec<NegativeSampleSet>,
}

fn sample_node_batch(
    hg: &Hypergraph,
    batch: &[usize],
    config: &TrainConfig,
    sampler: Option<&ExpSampler>,
    rng: &mut impl Rng,
) -> Result<NodeBatch> {
    let j = config.sampling.num_negatives;
    let mut pairs = Vec::new();
    let mut negatives = Vec::new();
    for &i in batch {
        if let Some(pair) = draw_seed_context(hg, i, rng)? {
            let negs = match sampler {
                Some(s) => sample_negatives_exponential(hg, &pair, s, j, rng)?,
                None => sample_negatives_uniform_batch(hg, batch, &pair, j, rng)?,
            };
            pairs.push(pair);
            negatives.push(negs);
        }
    }
    Ok(NodeBatch { pairs, negatives })
}

fn node_sampler(hg: &Hypergraph, config: &TrainConfig) -> Result<Option<ExpSampler>> {
    match config.sampling.strategy {
        SamplingStrategy::Exponential => Ok(Some(ExpSampler::for_hypergraph(hg, &config.sampling)?)),
        SamplingStrategy::Uniform => Ok(None),
    }
}

/// Groups of one embedding call, each hyperedge added once.
struct GroupSet<'a> {
    hg: &'a Hypergraph,
    groups: Vec<&'a [usize]>,
    index: HashMap<usize, usize>,
}

impl<'a> GroupSet<'a> {
    fn new(hg: &'a Hypergraph) -> Self {
        GroupSet {
            hg,
            groups: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn id(&mut self, hyperedge: usize) -> usize {
        if let Some(&g) = self.index.get(&hyperedge) {
            return g;
        }
        self.groups.push(self.hg.hyperedge(hyperedge));
        self.index.insert(hyperedge, self.groups.len() - 1);
        self.groups.len() - 1
    }
}

fn rows(tape: &mut Tape, x: Var, start: usize, len: usize) -> Result<Var> {
    tape.gather_rows(x, Rc::new((start..start + len).collect()))
}

fn node_loss(
    tape: &mut Tape,
    state: &ModelState,
    head: &Head,
    features: &SparseMatrix,
    hg: &Hypergraph,
    nb: &NodeBatch,
    config: &TrainConfig,
) -> Result<Var> {
    let j = config.sampling.num_negatives;
    let p = nb.pairs.len();
    let store = &state.store;
    let mut pos = GroupSet::new(hg);
    let mut readouts: Vec<Readout> = Vec::with_capacity(2 * p + p * j);
    for pair in &nb.pairs {
        let g = pos.id(pair.hyperedge);
        readouts.push(vec![(g, pair.seed_position)]);
    }
    for pair in &nb.pairs {
        let g = pos.id(pair.hyperedge);
        readouts.push(pair.context_positions().map(|q| (g, q)).collect());
    }
    let (seed, context, negatives) = if state.encoder.num_branches() == 1 {
        for set in &nb.negatives {
            for n in &set.negatives {
                let g = pos.id(n.hyperedge);
                readouts.push(vec![(g, n.position)]);
            }
        }
        let emb = state.encoder.embed(tape, store, features, 0, &pos.groups, &readouts)?;
        let out = head.forward(tape, store, emb)?;
        (rows(tape, out, 0, p)?, rows(tape, out, p, p)?, rows(tape, out, 2 * p, p * j)?)
    } else {
        let emb = state.encoder.embed(tape, store, features, 0, &pos.groups, &readouts)?;
        let out = head.forward(tape, store, emb)?;
        let mut neg = GroupSet::new(hg);
        let mut neg_readouts: Vec<Readout> = Vec::with_capacity(p * j);
        for set in &nb.negatives {
            for n in &set.negatives {
                let g = neg.id(n.hyperedge);
                neg_readouts.push(vec![(g, n.position)]);
            }
        }
        let emb_n = state.encoder.embed(tape, store, features, 1, &neg.groups, &neg_readouts)?;
        let out_n = head.forward(tape, store, emb_n)?;
        (rows(tape, out, 0, p)?, rows(tape, out, p, p)?, out_n)
    };
    match config.node_objective {
        NodeObjective::Bce => node_pretext_loss(tape, seed, context, negatives, j),
        NodeObjective::Cosine => variant_cosine_loss(tape, seed, context, negatives, j, config.cosine_margin),
    }
}

fn hyperedge_loss_from(
    tape: &mut Tape,
    state: &ModelState,
    head: &Head,
    h: Var,
    batch: &[usize],
    targets: &HyperedgeTargets,
) -> Result<Var> {
    let z = head.forward(tape, &state.store, h)?;
    match targets {
        HyperedgeTargets::Clusters { labels, .. } => {
            let y: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            hyperedge_pretext_loss(tape, z, &y)
        }
        HyperedgeTargets::Regression { power } => {
            let sub = power.submatrix(batch);
            let target = Tensor::new(batch.len(), batch.len(), sub.to_dense())?;
            variant_regression_loss(tape, z, &target)
        }
    }
}

fn hyperedge_loss(
    tape: &mut Tape,
    state: &ModelState,
    head: &Head,
    features: &SparseMatrix,
    hg: &Hypergraph,
    batch: &[usize],
    targets: &HyperedgeTargets,
) -> Result<Var> {
    let groups: Vec<&[usize]> = batch.iter().map(|&i| hg.hyperedge(i)).collect();
    let h = state.encoder.hyperedge_embeddings(tape, &state.store, features, &groups)?;
    hyperedge_loss_from(tape, state, head, h, batch, targets)
}

fn check_targets(hg: &Hypergraph, targets: &HyperedgeTargets) -> Result<()> {
    if targets.len() != hg.num_hyperedges() {
        return Err(Error::shape(
            "hyperedge_targets",
            format!("{} targets for {} hyperedges", targets.len(), hg.num_hyperedges()),
        ));
    }
    if let HyperedgeTargets::Clusters { labels, q } = targets {
        if *q == 0 {
            return Err(Error::InvalidArgument("cluster count must be at least 1".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= *q) {
            return Err(Error::InvalidArgument(format!("cluster label {bad} out of range for q = {q}")));
        }
    }
    Ok(())
}

fn new_head(state: &mut ModelState, name: &str, in_dim: usize, out_dim: usize, config: &TrainConfig, stream: u64) -> Head {
    let mut rng = stream_rng(config.seed, stream);
    Head::new(
        &mut state.store,
        name,
        in_dim,
        config.gnn.hidden_dim,
        out_dim,
        config.gnn.head_dropout,
        &mut rng,
    )
}

/// Node-level pretext training over the hyperedges of `hg`.
///
/// Keeps the parameters from the epoch with the lowest mean loss.
pub fn pretrain_node(
    state: &mut ModelState,
    hg: &Hypergraph,
    features: &SparseMatrix,
    config: &TrainConfig,
    log: &mut TrainLog,
) -> Result<PhaseOutcome> {
    let d = state.encoder.hidden_dim();
    let head = new_head(state, "head_n", d, d, config, streams::INIT_HEAD_NODE);
    if config.epochs_node == 0 {
        return Ok(PhaseOutcome {
            head,
            losses: Vec::new(),
            best_epoch: None,
        });
    }
    if !hg.hyperedges().iter().any(|e| e.len() >= 2) {
        return Err(Error::Data("node-level pretext needs a hyperedge with at least two members".into()));
    }
    let sampler = node_sampler(hg, config)?;
    let mut rng = stream_rng(config.seed, streams::NODE_PHASE);
    let mut ids = state.encoder.params();
    ids.extend(head.params());
    let mut adam = Adam::new(config.lr);
    let mut sched = PlateauScheduler::new(config.lr);
    let mut best: Option<(f64, usize, Snapshot)> = None;
    let mut losses = Vec::with_capacity(config.epochs_node);
    for epoch in 1..=config.epochs_node {
        let start = Instant::now();
        let mut total = 0.0;
        let mut count = 0;
        for batch in make_batches(hg.num_hyperedges(), config.batch_size, &mut rng) {
            let nb = sample_node_batch(hg, &batch, config, sampler.as_ref(), &mut rng)?;
            if nb.pairs.is_empty() {
                continue;
            }
            let mut tape = Tape::new(rng.gen());
            let loss = node_loss(&mut tape, state, &head, features, hg, &nb, config)?;
            total += tape.value(loss).item();
            count += 1;
            let grads = tape.backward(loss)?;
            adam.step(&mut state.store, &grads)?;
        }
        let mean = total / count as f64;
        losses.push(mean);
        if best.as_ref().is_none_or(|b| mean < b.0) {
            best = Some((mean, epoch, state.snapshot(&ids)));
        }
        log.push(epoch, "node", mean, None, adam.lr, start);
        adam.lr = sched.step(mean);
    }
    let (_, best_epoch, snap) = best.expect("at least one epoch ran");
    state.restore(&snap);
    state.provenance = Provenance::Pretrained;
    Ok(PhaseOutcome {
        head,
        losses,
        best_epoch: Some(best_epoch),
    })
}

/// Hyperedge-level pretext trained to the epoch budget (inductive pre-training).
pub fn pretrain_hyperedge(
    state: &mut ModelState,
    hg: &Hypergraph,
    features: &SparseMatrix,
    targets: &HyperedgeTargets,
    config: &TrainConfig,
    log: &mut TrainLog,
) -> Result<PhaseOutcome> {
    check_targets(hg, targets)?;
    let rep = state.encoder.representation_dim();
    let out = targets.output_dim(config.gnn.hidden_dim);
    let head = new_head(state, "head_h", rep, out, config, streams::INIT_HEAD_HYPEREDGE);
    let mut losses = Vec::with_capacity(config.epochs_hyperedge);
    if config.epochs_hyperedge == 0 {
        return Ok(PhaseOutcome {
            head,
            losses,
            best_epoch: None,
        });
    }
    if hg.num_hyperedges() == 0 {
        return Err(Error::Data("hyperedge-level pretext over an empty hyperedge set".into()));
    }
    let mut rng = stream_rng(config.seed, streams::HYPEREDGE_PHASE);
    let mut adam = Adam::new(config.lr);
    let mut sched = PlateauScheduler::new(config.lr);
    for epoch in 1..=config.epochs_hyperedge {
        let start = Instant::now();
        let mut total = 0.0;
        let batches = make_batches(hg.num_hyperedges(), config.batch_size, &mut rng);
        let count = batches.len();
        for batch in batches {
            let mut tape = Tape::new(rng.gen());
            let loss = hyperedge_loss(&mut tape, state, &head, features, hg, &batch, targets)?;
            total += tape.value(loss).item();
            let grads = tape.backward(loss)?;
            adam.step(&mut state.store, &grads)?;
        }
        let mean = total / count as f64;
        losses.push(mean);
        log.push(epoch, "hyperedge", mean, None, adam.lr, start);
        adam.lr = sched.step(mean);
    }
    state.provenance = Provenance::Pretrained;
    Ok(PhaseOutcome {
        head,
        losses,
        best_epoch: None,
    })
}

/// `adaptation_steps` full-batch gradient steps of the hyperedge-level
/// pretext over every hyperedge of `hg` (the test hyperedges).
pub fn adapt(
    state: &mut ModelState,
    hg: &Hypergraph,
    features: &SparseMatrix,
    targets: &HyperedgeTargets,
    config: &TrainConfig,
    log: &mut TrainLog,
) -> Result<PhaseOutcome> {
    check_targets(hg, targets)?;
    let rep = state.encoder.representation_dim();
    let out = targets.output_dim(config.gnn.hidden_dim);
    let head = new_head(state, "head_h.adapt", rep, out, config, streams::INIT_HEAD_HYPEREDGE);
    let mut losses = Vec::with_capacity(config.adaptation_steps);
    if config.adaptation_steps > 0 && hg.num_hyperedges() == 0 {
        return Err(Error::Data("adaptation over an empty hyperedge set".into()));
    }
    let all: Vec<usize> = (0..hg.num_hyperedges()).collect();
    let mut rng = stream_rng(config.seed, streams::ADAPT);
    for step in 1..=config.adaptation_steps {
        let start = Instant::now();
        let mut tape = Tape::new(rng.gen());
        let loss = hyperedge_loss(&mut tape, state, &head, features, hg, &all, targets)?;
        let value = tape.value(loss).item();
        let grads = tape.backward(loss)?;
        sgd_step(&mut state.store, &grads, config.lr)?;
        losses.push(value);
        log.push(step, "adapt", value, None, config.lr, start);
    }
    if config.adaptation_steps > 0 {
        state.provenance = Provenance::Pretrained;
    }
    Ok(PhaseOutcome {
        head,
        losses,
        best_epoch: None,
    })
}

/// Pretext terms added to the supervised loss in joint training.
struct JointExtras<'a> {
    hg_train: Hypergraph,
    sampler: Option<ExpSampler>,
    targets: Option<&'a HyperedgeTargets>,
    head_n: Option<Head>,
    head_h: Option<Head>,
    rng: ChaCha8Rng,
}

fn check_labeled(pairs: &[(usize, usize)], hg: &Hypergraph, num_classes: usize, what: &str) -> Result<()> {
    for &(i, y) in pairs {
        if i >= hg.num_hyperedges() {
            return Err(Error::InvalidArgument(format!("{what} hyperedge {i} out of range")));
        }
        if y >= num_classes {
            return Err(Error::InvalidArgument(format!(
                "{what} label {y} outside [0, {num_classes})"
            )));
        }
    }
    Ok(())
}

fn accuracy_on(
    state: &ModelState,
    head: &Head,
    features: &SparseMatrix,
    hg: &Hypergraph,
    labeled: &[(usize, usize)],
) -> Result<f64> {
    let ids: Vec<usize> = labeled.iter().map(|&(i, _)| i).collect();
    let logits = predict_logits(state, head, features, hg, &ids)?;
    let correct = labeled
        .iter()
        .enumerate()
        .filter(|&(r, &(_, y))| argmax(logits.row(r)) == y)
        .count();
    Ok(correct as f64 / labeled.len() as f64)
}

#[allow(clippy::too_many_arguments)]
fn supervised_loop(
    state: &mut ModelState,
    hg: &Hypergraph,
    features: &SparseMatrix,
    train: &[(usize, usize)],
    val: &[(usize, usize)],
    num_classes: usize,
    config: &TrainConfig,
    log: &mut TrainLog,
    phase: &str,
    mut extras: Option<JointExtras>,
) -> Result<(Classifier, Vec<JointStep>)> {
    if num_classes == 0 {
        return Err(Error::InvalidArgument("downstream task needs at least one class".into()));
    }
    if train.is_empty() {
        return Err(Error::Data("no labeled training hyperedges".into()));
    }
    check_labeled(train, hg, num_classes, "training")?;
    check_labeled(val, hg, num_classes, "validation")?;
    let rep = state.encoder.representation_dim();
    let head = new_head(state, "head_t", rep, num_classes, config, streams::INIT_HEAD_TASK);
    let mut keep = state.encoder.params();
    keep.extend(head.params());
    let mut shuffle = stream_rng(config.seed, streams::FINETUNE);
    let mut dropout = stream_rng(config.seed, streams::FINETUNE_DROPOUT);
    let mut adam = Adam::new(config.lr);
    let mut sched = PlateauScheduler::new(config.lr);
    let mut steps = Vec::new();
    let mut best: Option<(f64, usize, Snapshot)> = None;
    let mut bad = 0;
    let mut epochs_run = 0;
    for epoch in 1..=config.epochs_finetune {
        let start = Instant::now();
        epochs_run = epoch;
        let batches = make_batches(train.len(), config.batch_size, &mut shuffle);
        let count = batches.len();
        let mut total = 0.0;
        for batch in batches {
            let mut tape = Tape::new(dropout.gen());
            let groups: Vec<&[usize]> = batch.iter().map(|&k| hg.hyperedge(train[k].0)).collect();
            let labels: Vec<usize> = batch.iter().map(|&k| train[k].1).collect();
            let h = state.encoder.hyperedge_embeddings(&mut tape, &state.store, features, &groups)?;
            let z = head.forward(&mut tape, &state.store, h)?;
            let task = cross_entropy(&mut tape, z, &labels)?;
            let mut loss = task;
            let mut step = JointStep {
                total: 0.0,
                task: tape.value(task).item(),
                node: None,
                hyperedge: None,
            };
            if let Some(x) = extras.as_mut() {
                if let Some(head_n) = &x.head_n {
                    let nb = sample_node_batch(&x.hg_train, &batch, config, x.sampler.as_ref(), &mut x.rng)?;
                    if !nb.pairs.is_empty() {
                        let ln = node_loss(&mut tape, state, head_n, features, &x.hg_train, &nb, config)?;
                        step.node = Some(tape.value(ln).item());
                        let w = tape.scale(ln, config.alpha)?;
                        loss = tape.add(loss, w)?;
                    }
                }
                if let (Some(head_h), Some(targets)) = (&x.head_h, x.targets) {
                    let lh = hyperedge_loss_from(&mut tape, state, head_h, h, &batch, targets)?;
                    step.hyperedge = Some(tape.value(lh).item());
                    let w = tape.scale(lh, config.beta)?;
                    loss = tape.add(loss, w)?;
                }
            }
            step.total = tape.value(loss).item();
            total += step.total;
            steps.push(step);
            let grads = tape.backward(loss)?;
            adam.step(&mut state.store, &grads)?;
        }
        let mean = total / count as f64;
        let val_acc = if val.is_empty() {
            None
        } else {
            Some(accuracy_on(state, &head, features, hg, val)?)
        };
        log.push(epoch, phase, mean, val_acc, adam.lr, start);
        adam.lr = sched.step(mean);
        match val_acc {
            None => best = Some((0.0, epoch, Vec::new())),
            Some(acc) => {
                if best.as_ref().is_none_or(|b| acc > b.0) {
                    best = Some((acc, epoch, state.snapshot(&keep)));
                    bad = 0;
                } else {
                    bad += 1;
                    if bad >= config.patience {
                        break;
                    }
                }
            }
        }
    }
    let (acc, best_epoch, snap) = best.expect("at least one epoch ran");
    state.restore(&snap);
    let classifier = Classifier {
        head,
        num_classes,
        best_epoch,
        best_val_accuracy: (!val.is_empty()).then_some(acc),
        epochs_run,
        step_losses: steps.iter().map(|s| s.total).collect(),
    };
    Ok((classifier, steps))
}

/// Supervised training of the GNN and a fresh classification head.
///
/// `train` and `val` list `(hyperedge, label)` pairs of `hg`. Stops after
/// `patience` epochs without a better validation accuracy and keeps the best
/// epoch's parameters.
#[allow(clippy::too_many_arguments)]
pub fn finetune(
    state: &mut ModelState,
    hg: &Hypergraph,
    features: &SparseMatrix,
    train: &[(usize, usize)],
    val: &[(usize, usize)],
    num_classes: usize,
    config: &TrainConfig,
    log: &mut TrainLog,
) -> Result<Classifier> {
    supervised_loop(state, hg, features, train, val, num_classes, config, log, "finetune", None).map(|r| r.0)
}

/// One optimization loop on `alpha * node + beta * hyperedge + task` losses.
///
/// Pretext terms use the training hyperedges only; `targets` indexes them in
/// `train` order and is required when `beta > 0`.
#[allow(clippy::too_many_arguments)]
pub fn joint_train(
    state: &mut ModelState,
    hg: &Hypergraph,
    features: &SparseMatrix,
    train: &[(usize, usize)],
    val: &[(usize, usize)],
    num_classes: usize,
    targets: Option<&HyperedgeTargets>,
    config: &TrainConfig,
    log: &mut TrainLog,
) -> Result<(Classifier, Vec<JointStep>)> {
    if config.alpha == 0.0 && config.beta == 0.0 {
        log::warn!("joint training with alpha = beta = 0 is plain supervised training");
    }
    let ids: Vec<usize> = train.iter().map(|&(i, _)| i).collect();
    let hg_train = hg.restrict(&ids);
    let head_n = if config.alpha > 0.0 {
        let d = state.encoder.hidden_dim();
        Some(new_head(state, "head_n", d, d, config, streams::INIT_HEAD_NODE))
    } else {
        None
    };
    let sampler = if config.alpha > 0.0 { node_sampler(&hg_train, config)? } else { None };
    let (head_h, targets) = if config.beta > 0.0 {
        let t = targets.ok_or_else(|| Error::InvalidArgument("joint training with beta > 0 needs hyperedge targets".into()))?;
        check_targets(&hg_train, t)?;
        let rep = state.encoder.representation_dim();
        let out = t.output_dim(config.gnn.hidden_dim);
        (Some(new_head(state, "head_h", rep, out, config, streams::INIT_HEAD_HYPEREDGE)), Some(t))
    } else {
        (None, None)
    };
    let extras = JointExtras {
        hg_train,
        sampler,
        targets,
        head_n,
        head_h,
        rng: stream_rng(config.seed, streams::JOINT_SAMPLING),
    };
    supervised_loop(state, hg, features, train, val, num_classes, config, log, "joint", Some(extras))
}
