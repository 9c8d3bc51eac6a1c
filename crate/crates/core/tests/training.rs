use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use khop::datasets::{gen_property_dataset_sized, gen_shape_cycle, kfold_split, Fold, ShapeConfig};
use khop::graph::{cycle, gnp, Graph, GraphProperty};
use khop::harness::{
    cross_validate_graphs, cross_validate_nodes, summarize, train_graph_fold, train_node_fold, ExperimentConfig,
};
use khop::nn::Matrix;
use khop::plan::Plan;
use khop::Error;

fn compile(cfg: &ExperimentConfig, graphs: &[Graph<f64>]) -> Plan<f64> {
    let refs: Vec<&Graph<f64>> = graphs.iter().collect();
    Plan::compile(&refs, &cfg.arch().unwrap().layer_shapes()).unwrap()
}

/// Ten random graphs with random features and alternating labels.
fn toy_graphs() -> Vec<Graph<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    (0..10)
        .map(|i| {
            let n = 5 + i;
            let g: Graph<f64> = gnp(n, 0.35, &mut rng);
            let f = Matrix::from_vec(n, 2, (0..2 * n).map(|_| rng.gen_range(0.0..1.0)).collect());
            g.with_features(f).unwrap().with_graph_label(i % 2)
        })
        .collect()
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let graphs = toy_graphs();
    let cfg = ExperimentConfig { lr: 0.0, epochs: 5, batch_size: 64, ..ExperimentConfig::property("khop-2") };
    let plan = compile(&cfg, &graphs);
    let fold = Fold { train: (0..8).collect(), val: vec![8], test: vec![9] };
    let out = train_graph_fold(&cfg, &graphs, &plan, &fold, 3).unwrap();
    let fresh = train_graph_fold(&ExperimentConfig { epochs: 1, ..cfg.clone() }, &graphs, &plan, &fold, 3).unwrap();
    for id in out.model.store.trainable_ids() {
        assert_eq!(out.model.store.value(id), fresh.model.store.value(id));
    }
    assert!(out.losses.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12), "{:?}", out.losses);
}

#[test]
fn overfits_ten_graphs() {
    let graphs = toy_graphs();
    let cfg = ExperimentConfig {
        epochs: 500,
        batch_size: 10,
        hidden: 16,
        val_fraction: 0.0,
        selection: khop::harness::Selection::FinalEpoch,
        ..ExperimentConfig::property("khop-2")
    };
    let plan = compile(&cfg, &graphs);
    let fold = Fold { train: (0..10).collect(), val: vec![], test: (0..10).collect() };
    let out = train_graph_fold(&cfg, &graphs, &plan, &fold, 1).unwrap();
    assert_eq!(out.report.train_accuracy, 1.0);
}

#[test]
fn identical_seeds_give_identical_reports() {
    let ds = gen_property_dataset_sized(GraphProperty::Bipartiteness, 2, 20).unwrap();
    let cfg = ExperimentConfig { epochs: 3, seed: 9, ..ExperimentConfig::property("khop-2") };
    let strip = |mut r: Vec<khop::harness::ResultRecord>| {
        for x in &mut r {
            x.report.seconds = 0.0;
        }
        r
    };
    let a = strip(cross_validate_graphs(&cfg, "b", &ds.graphs).unwrap());
    let b = strip(cross_validate_graphs(&cfg, "b", &ds.graphs).unwrap());
    assert_eq!(a, b);
}

#[test]
fn non_finite_loss_aborts() {
    let g = cycle::<f64>(5).with_features(Matrix::filled(5, 1, f64::NAN)).unwrap();
    let graphs = vec![g.clone().with_graph_label(0), g.with_graph_label(1)];
    let cfg = ExperimentConfig { epochs: 2, val_fraction: 0.0, selection: khop::harness::Selection::FinalEpoch, ..ExperimentConfig::property("gnn-2") };
    let plan = compile(&cfg, &graphs);
    let fold = Fold { train: vec![0, 1], val: vec![], test: vec![0] };
    match train_graph_fold(&cfg, &graphs, &plan, &fold, 0) {
        Err(Error::NonFinite(msg)) => assert!(msg.contains("epoch 1"), "{msg}"),
        other => panic!("expected a non-finite loss error, got {:?}", other.map(|o| o.report)),
    }
}

#[test]
fn ten_folds_aggregate_to_their_mean() {
    let ds = gen_property_dataset_sized(GraphProperty::Connectivity, 5, 20).unwrap();
    let cfg = ExperimentConfig { epochs: 2, ..ExperimentConfig::property("gnn-2") };
    let recs = cross_validate_graphs(&cfg, "c", &ds.graphs).unwrap();
    assert_eq!(recs.len(), 10);
    let mean = recs.iter().map(|r| r.report.accuracy).sum::<f64>() / 10.0;
    let s = summarize(&recs);
    assert_eq!(s.len(), 1);
    assert!((s[0].accuracy_mean - mean).abs() < 1e-15);
    for r in &recs {
        assert!((0.0..=1.0).contains(&r.report.accuracy) && (0.0..=1.0).contains(&r.report.macro_f1));
    }
}

#[test]
fn baseline_sits_at_chance_on_regular_graphs() {
    let ds = gen_property_dataset_sized(GraphProperty::TriangleFreeness, 8, 20).unwrap();
    let cfg = ExperimentConfig { epochs: 5, ..ExperimentConfig::property("gnn-2") };
    let s = summarize(&cross_validate_graphs(&cfg, "t", &ds.graphs).unwrap());
    assert!((s[0].accuracy_mean - 0.5).abs() < 1e-12, "{}", s[0].accuracy_mean);
}

#[test]
fn node_task_learns_basic_roles() {
    let ds = gen_shape_cycle(ShapeConfig::Basic, 4).unwrap();
    let cfg = ExperimentConfig::roles("khop-2");
    let recs = cross_validate_nodes(&cfg, "basic", &ds.graph, &ds.roles).unwrap();
    assert_eq!(recs.len(), 10);
    assert!(summarize(&recs)[0].accuracy_mean > 0.95);
}

#[test]
fn node_fold_rejects_mismatched_labels() {
    let ds = gen_shape_cycle(ShapeConfig::Basic, 4).unwrap();
    let cfg = ExperimentConfig::roles("gnn-2");
    let plan = compile(&cfg, std::slice::from_ref(&ds.graph));
    assert!(train_node_fold(&cfg, &plan, &ds.roles[1..], &[0], &[1], 0).is_err());
    let folds = kfold_split(&ds.roles, 10, 0.0, 0).unwrap();
    assert!(train_node_fold(&cfg, &plan, &ds.roles, &folds[0].train, &[], 0).is_err());
}
