use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;

const ITERATIONS: usize = 50;

/// Row-major `m x d` matrix of mean member features per hyperedge.
pub fn hyperedge_mean_features(hg: &Hypergraph) -> Vec<f64> {
    let d = hg.feature_dim();
    let mut out = vec![0.0; hg.num_hyperedges() * d];
    for (i, e) in hg.hyperedges().iter().enumerate() {
        let row = &mut out[i * d..(i + 1) * d];
        for &v in e {
            row.iter_mut().zip(hg.feature_row(v)).for_each(|(o, x)| *o += x);
        }
        row.iter_mut().for_each(|o| *o /= e.len() as f64);
    }
    out
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's k-means with seeded farthest-point initialization.
pub fn kmeans(points: &[f64], dim: usize, q: usize, seed: u64) -> Result<Vec<usize>> {
    let n = points.len().checked_div(dim).unwrap_or(0);
    if dim == 0 || points.len() != n * dim {
        return Err(Error::InvalidArgument("k-means needs a non-empty feature matrix".into()));
    }
    if q == 0 || q > n {
        return Err(Error::InvalidArgument(format!("q = {q} must lie in [1, {n}]")));
    }
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec<f64>> = vec![row(rng.gen_range(0..n)).to_vec()];
    let mut nearest: Vec<f64> = (0..n).map(|i| dist2(row(i), &centers[0])).collect();
    while centers.len() < q {
        let far = (0..n)
            .max_by(|&a, &b| nearest[a].total_cmp(&nearest[b]).then(b.cmp(&a)))
            .expect("n >= 1");
        centers.push(row(far).to_vec());
        for i in 0..n {
            nearest[i] = nearest[i].min(dist2(row(i), &centers[centers.len() - 1]));
        }
    }
    let mut labels = vec![0; n];
    for _ in 0..ITERATIONS {
        let mut changed = false;
        for i in 0..n {
            let best = (0..q)
                .min_by(|&a, &b| dist2(row(i), &centers[a]).total_cmp(&dist2(row(i), &centers[b])).then(a.cmp(&b)))
                .expect("q >= 1");
            if best != labels[i] {
                labels[i] = best;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; q];
        let mut counts = vec![0usize; q];
        for i in 0..n {
            counts[labels[i]] += 1;
            sums[labels[i]].iter_mut().zip(row(i)).for_each(|(s, x)| *s += x);
        }
        for c in 0..q {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    Ok(labels)
}
