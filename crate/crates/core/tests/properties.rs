use std::collections::HashSet;

use hypergene::autodiff::{Adam, ParamStore, Tape, Tensor};
use hypergene::gnn::{hyperedge_readouts, Encoder, Expansion, GnnConfig, LayerKind, ModuleMode};
use hypergene::harness::{pr_auc, Summary};
use hypergene::hypergraph::{
    build_hyperedge_adjacency, build_incidence, clique_expand, ego_network_hypergraphs, split_dataset, tree_expand,
    CitationGraph, EgoMode, Hypergraph,
};
use hypergene::partition::{balance_cap, partition_multilevel, HyperedgeGraph};
use hypergene::sampling::{
    draw_seed_context, exp_sampling_probs, hypergraph_path_matrix, sample_negatives_uniform_batch,
};
use hypergene::training::{cross_entropy, node_pretext_loss, variant_cosine_loss, variant_regression_loss};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn hyperedges(n: usize, max_m: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(
        prop::collection::btree_set(0..n, 1..=n.min(6)).prop_map(|s| s.into_iter().collect::<Vec<_>>()),
        1..=max_m,
    )
}

fn hypergraph(n: usize, max_m: usize, dim: usize) -> impl Strategy<Value = Hypergraph> {
    (hyperedges(n, max_m), prop::collection::vec(-1.0f64..1.0, n * dim)).prop_map(move |(edges, features)| {
        let m = edges.len();
        Hypergraph::new(n, edges, dim, features, Some((0..m).map(|i| i % 3).collect())).unwrap()
    })
}

fn matrix(r: usize, c: usize) -> impl Strategy<Value = Tensor> {
    prop::collection::vec(-3.0f64..3.0, r * c).prop_map(move |d| Tensor::new(r, c, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjacency_counts_intersections(hg in hypergraph(8, 20, 1)) {
        let a = build_hyperedge_adjacency(&build_incidence(&hg), true);
        let e = hg.hyperedges();
        for i in 0..e.len() {
            for j in 0..e.len() {
                let want = if i == j { 0.0 } else { e[i].iter().filter(|v| e[j].contains(v)).count() as f64 };
                prop_assert_eq!(a.get(i, j), want);
            }
        }
    }

    #[test]
    fn expansion_pair_counts(k in 1usize..=50) {
        let hg = Hypergraph::new(k, vec![(0..k).collect()], 1, vec![0.0; k], None).unwrap();
        prop_assert_eq!(clique_expand(&hg, 0).pair_edges.len(), k * (k - 1) / 2);
        let tree = tree_expand(&hg, 0);
        prop_assert_eq!(tree.pair_edges.len(), k);
        prop_assert!(tree.pair_edges.iter().all(|&(r, _)| Some(r) == tree.virtual_root));
    }

    #[test]
    fn splits_partition_the_hyperedges(hg in hypergraph(10, 40, 1), seed in any::<u64>()) {
        prop_assume!(hg.num_hyperedges() >= 3);
        let s = split_dataset(&hg, (0.6, 0.2, 0.2), seed).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..hg.num_hyperedges()).collect::<Vec<_>>());
        prop_assert_eq!(split_dataset(&hg, (0.6, 0.2, 0.2), seed).unwrap(), s);
    }

    #[test]
    fn clean_ego_networks_are_homogeneous(
        n in 3usize..20,
        raw in prop::collection::vec((0usize..20, 0usize..20), 1..60),
        labels in prop::collection::vec(0usize..3, 20),
    ) {
        let edges: Vec<(usize, usize)> = raw.into_iter().map(|(a, b)| (a % n, b % n)).collect();
        let graph = CitationGraph {
            num_nodes: n,
            edges,
            labels: labels[..n].iter().map(|&l| Some(l)).collect(),
            feature_dim: 1,
            features: vec![0.0; n],
            node_names: (0..n).map(|i| i.to_string()).collect(),
            label_names: vec!["a".into(), "b".into(), "c".into()],
        };
        if let Ok(hg) = ego_network_hypergraphs(&graph, EgoMode::Clean, true) {
            for (e, &y) in hg.hyperedges().iter().zip(hg.labels().unwrap()) {
                prop_assert!(e.len() >= 2);
                prop_assert!(e.iter().all(|&v| labels[v] == y));
            }
        }
    }

    #[test]
    fn sampling_probability_decreases_with_proximity(hg in hypergraph(6, 10, 1), k in 1u32..=3, gamma in 0.1f64..3.0) {
        prop_assume!(hg.num_hyperedges() >= 2);
        let ak = hypergraph_path_matrix(&hg, k).unwrap();
        for i in 0..hg.num_hyperedges() {
            let p = exp_sampling_probs(&ak, i, gamma).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert_eq!(p[i], 0.0);
            for a in 0..p.len() {
                for b in 0..p.len() {
                    if a != i && b != i && ak.get(i, a) > ak.get(i, b) {
                        prop_assert!(p[a] <= p[b]);
                    }
                }
            }
        }
    }

    #[test]
    fn uniform_negatives_avoid_the_anchor(hg in hypergraph(8, 12, 1), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let batch: Vec<usize> = (0..hg.num_hyperedges()).collect();
        for i in 0..hg.num_hyperedges() {
            if let Some(pair) = draw_seed_context(&hg, i, &mut rng).unwrap() {
                prop_assert!(!pair.context.is_empty());
                match sample_negatives_uniform_batch(&hg, &batch, &pair, 5, &mut rng) {
                    Ok(set) => {
                        prop_assert_eq!(set.negatives.len(), 5);
                        prop_assert!(set.negatives.iter().all(|n| n.hyperedge != i));
                    }
                    Err(_) => prop_assert!(batch.len() < 2),
                }
            }
        }
    }

    #[test]
    fn partitions_respect_balance(
        n in 4usize..40,
        raw in prop::collection::vec((0usize..40, 0usize..40, 1u32..5), 0..120),
        q in 2usize..5,
        seed in any::<u64>(),
    ) {
        prop_assume!(q <= n / 2);
        let edges: Vec<(usize, usize, f64)> = raw
            .into_iter()
            .map(|(a, b, w)| (a % n, b % n, w as f64))
            .filter(|(a, b, _)| a != b)
            .collect();
        let g = HyperedgeGraph::from_edges(n, &edges).unwrap();
        let r = partition_multilevel(&g, q, seed).unwrap();
        prop_assert!(r.sizes().iter().all(|&s| s <= balance_cap(n, q)));
        prop_assert_eq!(r.edge_cut, g.edge_cut(&r.labels));
    }

    #[test]
    fn dropout_is_identity_in_eval(x in matrix(3, 4), p in 0.0f64..0.9) {
        let mut t = Tape::eval();
        let v = t.input(x.clone()).unwrap();
        let y = t.dropout(v, p).unwrap();
        prop_assert_eq!(t.value(y), &x);
    }

    #[test]
    fn adam_is_deterministic(g in matrix(2, 3), lr in 1e-4f64..1e-1) {
        let run = || {
            let mut store = ParamStore::new();
            let id = store.add("w", Tensor::zeros(2, 3));
            let mut opt = Adam::new(lr);
            for _ in 0..3 {
                opt.step_with(&mut store, &[(id, g.clone())]).unwrap();
            }
            store.get(id).clone()
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn losses_are_nonnegative_and_finite(
        s in matrix(2, 3), c in matrix(2, 3), n in matrix(6, 3), z in matrix(3, 4),
        y in prop::collection::vec(0usize..4, 3), margin in 0.0f64..0.99,
    ) {
        let mut t = Tape::eval();
        let (sv, cv, nv, zv) = (t.input(s).unwrap(), t.input(c).unwrap(), t.input(n).unwrap(), t.input(z.clone()).unwrap());
        let target = Tensor::new(3, 3, z.data()[..9].to_vec()).unwrap();
        let losses = [
            node_pretext_loss(&mut t, sv, cv, nv, 3).unwrap(),
            variant_cosine_loss(&mut t, sv, cv, nv, 3, margin).unwrap(),
            cross_entropy(&mut t, zv, &y).unwrap(),
            variant_regression_loss(&mut t, zv, &target).unwrap(),
        ];
        for l in losses {
            let v = t.value(l).item();
            prop_assert!(v.is_finite() && v >= 0.0, "{}", v);
        }
    }

    #[test]
    fn embeddings_ignore_member_order(
        hg in hypergraph(7, 4, 3),
        kind in prop::sample::select(vec![LayerKind::Gin, LayerKind::Gcn, LayerKind::Sage]),
        tree in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let config = GnnConfig {
            layer_kind: kind,
            num_layers: 2,
            hidden_dim: 4,
            expansion: if tree { Expansion::Tree } else { Expansion::Clique },
            ..GnnConfig::default()
        };
        let mut store = ParamStore::new();
        let enc = Encoder::new(&mut store, &config, 3, ModuleMode::OneGnn, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let features = hg.sparse_features();
        let groups: Vec<&[usize]> = hg.hyperedges().iter().map(|e| e.as_slice()).collect();
        let reversed: Vec<Vec<usize>> = hg.hyperedges().iter().map(|e| e.iter().rev().copied().collect()).collect();
        let rgroups: Vec<&[usize]> = reversed.iter().map(|e| e.as_slice()).collect();
        let mut t = Tape::eval();
        let a = enc.embed(&mut t, &store, &features, 0, &groups, &hyperedge_readouts(&groups)).unwrap();
        let b = enc.embed(&mut t, &store, &features, 0, &rgroups, &hyperedge_readouts(&rgroups)).unwrap();
        for (x, y) in t.value(a).data().iter().zip(t.value(b).data()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn unused_branch_gets_no_gradient(hg in hypergraph(6, 4, 2), seed in any::<u64>()) {
        let config = GnnConfig { hidden_dim: 3, ..GnnConfig::default() };
        let mut store = ParamStore::new();
        let enc = Encoder::new(&mut store, &config, 2, ModuleMode::TwoGnn, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let features = hg.sparse_features();
        let groups: Vec<&[usize]> = hg.hyperedges().iter().map(|e| e.as_slice()).collect();
        let mut t = Tape::eval();
        let h = enc.embed(&mut t, &store, &features, 0, &groups, &hyperedge_readouts(&groups)).unwrap();
        let sq = t.square(h).unwrap();
        let l = t.sum(sq).unwrap();
        let grads = t.backward(l).unwrap();
        let other: HashSet<_> = enc.branch_params(1).into_iter().collect();
        for id in other {
            if let Some(g) = grads.param(id) {
                prop_assert!(g.data().iter().all(|&v| v == 0.0));
            }
        }
        prop_assert!(enc.branch_params(0).iter().all(|&id| !enc.branch_params(1).contains(&id)));
    }

    #[test]
    fn summary_std_is_sample_std(v in prop::collection::vec(0.0f64..1.0, 2..12)) {
        let s = Summary::of(&v).unwrap();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        prop_assert!((s.mean - mean).abs() < 1e-12);
        prop_assert!((s.std.unwrap() - var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pr_auc_in_unit_interval(pairs in prop::collection::vec((0.0f64..1.0, any::<bool>()), 2..30)) {
        let (scores, labels): (Vec<f64>, Vec<bool>) = pairs.into_iter().unzip();
        match pr_auc(&scores, &labels) {
            Ok(a) => prop_assert!((0.0..=1.0).contains(&a)),
            Err(_) => prop_assert!(labels.iter().all(|&l| l) || labels.iter().all(|&l| !l)),
        }
    }
}
