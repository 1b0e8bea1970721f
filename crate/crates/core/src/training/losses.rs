//! Pretext and downstream objectives on tape variables.

use std::rc::Rc;

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Added to vector norms before dividing in cosine similarities.
pub const NORM_EPS: f64 = 1e-12;

fn check_pairs(tape: &Tape, seed: Var, context: Var, negatives: Var, num_negatives: usize) -> Result<usize> {
    let p = tape.value(seed).rows();
    if p == 0 {
        return Err(Error::InvalidArgument("node-level loss needs at least one seed/context pair".into()));
    }
    if num_negatives == 0 {
        return Err(Error::InvalidArgument("node-level loss needs at least one negative per pair".into()));
    }
    if tape.value(context).shape() != tape.value(seed).shape() {
        return Err(Error::shape(
            "node_loss",
            format!("seed {:?} vs context {:?}", tape.value(seed).shape(), tape.value(context).shape()),
        ));
    }
    let [nr, nc] = tape.value(negatives).shape();
    if nr != p * num_negatives || nc != tape.value(seed).cols() {
        return Err(Error::shape(
            "node_loss",
            format!("{nr}x{nc} negatives for {p} pairs with {num_negatives} negatives each"),
        ));
    }
    Ok(p)
}

/// Context row for every negative: row `i` repeated `num_negatives` times.
fn repeat_rows(tape: &mut Tape, x: Var, p: usize, num_negatives: usize) -> Result<Var> {
    let idx: Vec<usize> = (0..p).flat_map(|i| std::iter::repeat_n(i, num_negatives)).collect();
    tape.gather_rows(x, Rc::new(idx))
}

/// Binary cross-entropy node-level loss averaged over pairs.
///
/// `seed` and `context` hold one row per pair, `negatives` holds
/// `num_negatives` consecutive rows per pair. Per pair the loss is
/// `-sum_j [log s(<seed, ctx>) + log(1 - s(<neg_j, ctx>))]`.
pub fn node_pretext_loss(tape: &mut Tape, seed: Var, context: Var, negatives: Var, num_negatives: usize) -> Result<Var> {
    let p = check_pairs(tape, seed, context, negatives, num_negatives)?;
    let pos = tape.row_dot(seed, context)?;
    let ctx = repeat_rows(tape, context, p, num_negatives)?;
    let neg = tape.row_dot(negatives, ctx)?;
    let lp = tape.log_sigmoid(pos)?;
    let lp = tape.sum(lp)?;
    let lp = tape.scale(lp, num_negatives as f64)?;
    let nn = tape.scale(neg, -1.0)?;
    let ln = tape.log_sigmoid(nn)?;
    let ln = tape.sum(ln)?;
    let total = tape.add(lp, ln)?;
    tape.scale(total, -1.0 / p as f64)
}

/// Mean cross-entropy of `logits` (one row per item) against class indices.
pub fn cross_entropy(tape: &mut Tape, logits: Var, labels: &[usize]) -> Result<Var> {
    let [r, c] = tape.value(logits).shape();
    if labels.len() != r {
        return Err(Error::shape("cross_entropy", format!("{} labels for {r} rows", labels.len())));
    }
    if r == 0 {
        return Err(Error::InvalidArgument("cross-entropy over an empty batch".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
        return Err(Error::InvalidArgument(format!("label {bad} out of range for {c} classes")));
    }
    let ls = tape.log_softmax(logits)?;
    let picked = tape.pick(ls, Rc::new(labels.to_vec()))?;
    let m = tape.mean(picked)?;
    tape.scale(m, -1.0)
}

/// Cluster-membership cross-entropy averaged over the batch.
pub fn hyperedge_pretext_loss(tape: &mut Tape, logits: Var, clusters: &[usize]) -> Result<Var> {
    cross_entropy(tape, logits, clusters)
}

fn cosine(tape: &mut Tape, a: Var, b: Var) -> Result<Var> {
    let dot = tape.row_dot(a, b)?;
    let na = tape.row_dot(a, a)?;
    let na = tape.sqrt(na)?;
    let na = tape.add_scalar(na, NORM_EPS)?;
    let nb = tape.row_dot(b, b)?;
    let nb = tape.sqrt(nb)?;
    let nb = tape.add_scalar(nb, NORM_EPS)?;
    let den = tape.mul(na, nb)?;
    tape.div(dot, den)
}

/// Cosine embedding loss: `1 - cos` for each (seed, context) pair and
/// `max(0, cos - margin)` for each (negative, context) pair, averaged over pairs.
pub fn variant_cosine_loss(
    tape: &mut Tape,
    seed: Var,
    context: Var,
    negatives: Var,
    num_negatives: usize,
    margin: f64,
) -> Result<Var> {
    if !(0.0..1.0).contains(&margin) {
        return Err(Error::Config(format!("cosine margin {margin} not in [0, 1)")));
    }
    let p = check_pairs(tape, seed, context, negatives, num_negatives)?;
    let cp = cosine(tape, seed, context)?;
    let cp = tape.scale(cp, -1.0)?;
    let cp = tape.add_scalar(cp, 1.0)?;
    let pos = tape.sum(cp)?;
    let ctx = repeat_rows(tape, context, p, num_negatives)?;
    let cn = cosine(tape, negatives, ctx)?;
    let cn = tape.add_scalar(cn, -margin)?;
    let cn = tape.relu(cn)?;
    let neg = tape.sum(cn)?;
    let total = tape.add(pos, neg)?;
    tape.scale(total, 1.0 / p as f64)
}

/// Squared Frobenius distance between the Gram matrix `G G^T` of the rows
/// of `g` and a target similarity matrix.
pub fn variant_regression_loss(tape: &mut Tape, g: Var, target: &Tensor) -> Result<Var> {
    let b = tape.value(g).rows();
    if target.shape() != [b, b] {
        return Err(Error::shape(
            "variant_regression_loss",
            format!("target {:?} for {b} rows", target.shape()),
        ));
    }
    let gt = tape.transpose(g)?;
    let gram = tape.matmul(g, gt)?;
    let t = tape.constant(target.clone())?;
    let d = tape.sub(gram, t)?;
    let d = tape.square(d)?;
    tape.sum(d)
}
