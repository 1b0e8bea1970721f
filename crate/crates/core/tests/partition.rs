use hypergene::partition::{adjusted_rand_index, balance_cap, partition_multilevel, HyperedgeGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn planted(seed: u64, p_in: f64, p_out: f64) -> (HyperedgeGraph, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth: Vec<usize> = (0..40).map(|v| v / 20).collect();
    let mut edges = Vec::new();
    for u in 0..40 {
        for v in u + 1..40 {
            let same = truth[u] == truth[v];
            if rng.gen::<f64>() < if same { p_in } else { p_out } {
                edges.push((u, v, if same { 5.0 } else { 1.0 }));
            }
        }
    }
    (HyperedgeGraph::from_edges(40, &edges).unwrap(), truth)
}

/// Minimum cut over all bipartitions whose larger side respects the cap.
fn exhaustive_min_cut(g: &HyperedgeGraph) -> f64 {
    let n = g.num_vertices();
    let cap = balance_cap(n, 2);
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) - 1 {
        let labels: Vec<usize> = (0..n).map(|v| ((mask >> v) & 1) as usize).collect();
        let ones = labels.iter().sum::<usize>();
        if ones > cap || n - ones > cap {
            continue;
        }
        best = best.min(g.edge_cut(&labels));
    }
    best
}

#[test]
fn planted_blocks_recovered() {
    let mut good = 0;
    for seed in 0..10 {
        let (g, truth) = planted(100 + seed, 0.3, 0.1);
        let r = partition_multilevel(&g, 2, seed).unwrap();
        if adjusted_rand_index(&r.labels, &truth).unwrap() >= 0.9 {
            good += 1;
        }
    }
    assert!(good >= 9, "{good}/10");
}

#[test]
fn small_graphs_near_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..1000 {
        let n = rng.gen_range(2..=8);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen::<f64>() < 0.5 {
                    edges.push((u, v, rng.gen_range(1..=5) as f64));
                }
            }
        }
        let g = HyperedgeGraph::from_edges(n, &edges).unwrap();
        let opt = exhaustive_min_cut(&g);
        let r = partition_multilevel(&g, 2, trial).unwrap();
        assert!(r.edge_cut <= 1.1 * opt + 1e-9, "trial {trial}: {} vs {opt}", r.edge_cut);
    }
}

#[test]
fn balance_respected() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..40 {
        let n = rng.gen_range(10..80);
        let mut edges = Vec::new();
        for _ in 0..n * 2 {
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if u != v {
                edges.push((u, v, rng.gen_range(1..4) as f64));
            }
        }
        let g = HyperedgeGraph::from_edges(n, &edges).unwrap();
        for q in 1..=n / 2 {
            let r = partition_multilevel(&g, q, trial).unwrap();
            let cap = balance_cap(n, q);
            assert!(r.sizes().iter().all(|&s| s >= 1 && s <= cap), "n={n} q={q} {:?}", r.sizes());
            assert!((r.edge_cut - g.edge_cut(&r.labels)).abs() < 1e-9);
        }
    }
}

