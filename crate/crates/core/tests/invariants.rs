use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use khop::datasets::kfold_split;
use khop::expressiveness::{lemma3_holds, MultisetEncoder};
use khop::graph::{
    gnp, is_bipartite, is_connected, is_triangle_free, random_permutation, random_regular, ring_decompose, Graph,
    GraphProperty,
};
use khop::harness::metrics;
use khop::model::{Architecture, Mode, Model, ModelConfig, Task};
use khop::nn::{Adam, Gradients, Matrix};

fn graph_from(seed: u64, n: usize, p: f64) -> Graph<f64> {
    gnp(n, p, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// All-pairs distances by repeated relaxation over the edge list.
fn floyd(g: &Graph<f64>) -> Vec<Vec<usize>> {
    let n = g.n();
    let inf = usize::MAX / 2;
    let mut d = vec![vec![inf; n]; n];
    for v in 0..n {
        d[v][v] = 0;
        for &u in g.neighbors(v) {
            d[v][u] = 1;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

fn with_random_features(g: Graph<f64>, seed: u64, dim: usize) -> Graph<f64> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.n();
    let f = Matrix::from_vec(n, dim, (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
    g.with_features(f).unwrap()
}

fn arch(khop: bool, depth: usize) -> Architecture {
    if khop {
        Architecture::KHop { k: depth, layers: 1 }
    } else {
        Architecture::Gnn { layers: depth, variant: Default::default() }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_levels_match_distances(seed in any::<u64>(), n in 1usize..14, p in 0.05f64..0.6, k in 1usize..5) {
        let g = graph_from(seed, n, p);
        let d = floyd(&g);
        let root = (seed % n as u64) as usize;
        let rd = ring_decompose(&g, root, k).unwrap();
        for v in 0..n {
            let expected = if d[root][v] <= k { Some(d[root][v]) } else { None };
            prop_assert_eq!(rd.level_of(v), expected);
            if let Some(l) = expected {
                for &u in g.neighbors(v) {
                    prop_assert_eq!(rd.across(v).contains(&u), d[root][u] == l + 1 && l < k);
                    prop_assert_eq!(rd.within(v).contains(&u), d[root][u] == l);
                }
            }
        }
    }

    #[test]
    fn oracles_invariant_under_relabeling(seed in any::<u64>(), n in 1usize..16, p in 0.0f64..0.5) {
        let g = graph_from(seed, n, p);
        let perm = random_permutation(n, &mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let h = g.permute(&perm).unwrap();
        prop_assert_eq!(is_connected(&g), is_connected(&h));
        prop_assert_eq!(is_bipartite(&g), is_bipartite(&h));
        prop_assert_eq!(is_triangle_free(&g), is_triangle_free(&h));
        for prop in GraphProperty::ALL {
            prop_assert_eq!(prop.holds(&g), prop.holds(&h));
        }
    }

    #[test]
    fn random_regular_is_simple_and_regular(seed in any::<u64>(), half in 3usize..15, d in 1usize..5) {
        let n = 2 * half;
        prop_assume!(d < n);
        let g: Graph<f64> = random_regular(n, d, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(g.n(), n);
        prop_assert_eq!(g.regular_degree(), Some(d));
        for v in 0..n {
            prop_assert!(!g.has_edge(v, v));
            let mut nb = g.neighbors(v).to_vec();
            nb.dedup();
            prop_assert_eq!(nb.len(), d);
        }
    }

    #[test]
    fn same_level_edge_iff_odd_cycle(seed in any::<u64>(), n in 1usize..12, p in 0.1f64..0.7, k in 1usize..5) {
        let g = graph_from(seed, n, p);
        for v in 0..n {
            prop_assert!(lemma3_holds(&g, v, k).unwrap());
        }
    }

    #[test]
    fn node_outputs_equivariant_readout_invariant(seed in any::<u64>(), n in 2usize..9, khop in any::<bool>(), depth in 1usize..4) {
        let g = with_random_features(graph_from(seed, n, 0.4), seed, 2);
        let perm = random_permutation(n, &mut ChaCha8Rng::seed_from_u64(seed ^ 7));
        let h = g.permute(&perm).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let node = Model::<f64>::new(
            ModelConfig { arch: arch(khop, depth), task: Task::Node, input_dim: 2, hidden: 5, classes: 3, readout: Default::default() },
            &mut rng,
        ).unwrap();
        let a = node.predict(&[&g]).unwrap();
        let b = node.predict(&[&h]).unwrap();
        for v in 0..n {
            for (x, y) in a.row(v).iter().zip(b.row(perm[v])) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
        let graph = Model::<f64>::new(
            ModelConfig { arch: arch(khop, depth), task: Task::Graph, input_dim: 2, hidden: 5, classes: 3, readout: Default::default() },
            &mut rng,
        ).unwrap();
        prop_assert!(graph.predict(&[&g]).unwrap().max_abs_diff(&graph.predict(&[&h]).unwrap()) < 1e-9);
    }

    #[test]
    fn compiled_plan_matches_reference(seed in any::<u64>(), n in 1usize..9, khop in any::<bool>(), depth in 1usize..4, train in any::<bool>()) {
        let g1 = with_random_features(graph_from(seed, n, 0.4), seed, 2);
        let g2 = with_random_features(graph_from(seed ^ 3, n + 1, 0.3), seed ^ 5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = Model::<f64>::new(
            ModelConfig { arch: arch(khop, depth), task: Task::Graph, input_dim: 2, hidden: 4, classes: 2, readout: Default::default() },
            &mut rng,
        ).unwrap();
        let mode = if train { Mode::Train } else { Mode::Eval };
        let plan = model.compile(&[&g1, &g2]).unwrap();
        let mut tape = khop::nn::Tape::new();
        let out = model.forward(&mut tape, &plan, mode).unwrap();
        let (_, reference) = model.reference_forward(&[&g1, &g2], mode).unwrap();
        prop_assert!(tape.value(out.logits).max_abs_diff(&reference) < 1e-9);
    }

    #[test]
    fn adam_with_zero_rate_is_identity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = Model::<f64>::new(
            ModelConfig { arch: arch(true, 2), task: Task::Graph, input_dim: 1, hidden: 3, classes: 2, readout: Default::default() },
            &mut rng,
        ).unwrap();
        let before = model.store.clone();
        let mut grads = Gradients::zeros_like(&model.store);
        for id in model.store.trainable_ids().collect::<Vec<_>>() {
            grads.accumulate(id, &model.store.value(id).map(|x| x + 1.0));
        }
        let mut adam = Adam::new(0.0);
        adam.step(&mut model.store, &grads).unwrap();
        for id in before.ids() {
            prop_assert_eq!(before.value(id), model.store.value(id));
        }
    }

    #[test]
    fn kfold_partitions_and_stratifies(seed in any::<u64>(), sizes in proptest::collection::vec(10usize..60, 1..5), folds in 2usize..11) {
        let labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &s)| std::iter::repeat_n(c, s)).collect();
        let split = kfold_split(&labels, folds, 0.1, seed).unwrap();
        let mut seen = vec![0usize; labels.len()];
        for f in &split {
            for &i in &f.test {
                seen[i] += 1;
            }
            let mut all: Vec<usize> = f.train.iter().chain(&f.val).chain(&f.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        for c in 0..sizes.len() {
            let counts: Vec<usize> = split.iter().map(|f| f.test.iter().filter(|&&i| labels[i] == c).count()).collect();
            prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
        let lens: Vec<usize> = split.iter().map(|f| f.test.len()).collect();
        prop_assert!(lens.iter().max().unwrap() - lens.iter().min().unwrap() <= 1);
    }

    #[test]
    fn metrics_ignore_sample_order(seed in any::<u64>(), pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..40)) {
        let pred: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let truth: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let perm = random_permutation(pairs.len(), &mut ChaCha8Rng::seed_from_u64(seed));
        let mut pp = vec![0; pairs.len()];
        let mut tp = vec![0; pairs.len()];
        for (i, &j) in perm.iter().enumerate() {
            pp[j] = pred[i];
            tp[j] = truth[i];
        }
        let a = metrics(&pred, &truth).unwrap();
        let b = metrics(&pp, &tp).unwrap();
        prop_assert!((a.accuracy - b.accuracy).abs() < 1e-12 && (a.macro_f1 - b.macro_f1).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a.accuracy) && (0.0..=1.0).contains(&a.macro_f1));
    }

    #[test]
    fn multiset_encoding_ignores_order(seed in any::<u64>(), xs in proptest::collection::vec(0usize..3, 0..4), i in 0usize..4, c in 0usize..3) {
        let enc = MultisetEncoder::new(&[0usize, 1, 2], 4, 3).unwrap();
        let mut ys = xs.clone();
        let perm = random_permutation(ys.len(), &mut ChaCha8Rng::seed_from_u64(seed));
        for (a, &b) in perm.iter().enumerate() {
            ys[b] = xs[a];
        }
        prop_assert_eq!(enc.encode(i, &c, &xs).unwrap(), enc.encode(i, &c, &ys).unwrap());
    }
}

/// Baseline node embeddings of two random d-regular graphs of equal size with
/// identical features all coincide, whatever the weights.
#[test]
fn baseline_collapses_random_regular_pairs() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let n = 2 * rng.gen_range(4..10);
        let d = rng.gen_range(2..5);
        let a: Graph<f64> = random_regular(n, d, &mut rng).unwrap();
        let b: Graph<f64> = random_regular(n, d, &mut rng).unwrap();
        for layers in 1..=3 {
            for _ in 0..50 {
                let model = Model::<f64>::new(
                    ModelConfig { arch: arch(false, layers), task: Task::Node, input_dim: 1, hidden: 6, classes: 2, readout: Default::default() },
                    &mut rng,
                ).unwrap();
                let (reprs, _) = model.reference_forward(&[&a, &b], Mode::Eval).unwrap();
                let first = reprs[0].row(0).to_vec();
                for m in &reprs {
                    for v in 0..n {
                        let dist = m.row(v).iter().zip(&first).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                        assert!(dist < 1e-6, "n={n} d={d} layers={layers}: {dist}");
                    }
                }
            }
        }
    }
}
