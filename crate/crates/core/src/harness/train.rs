use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{metrics, ExperimentConfig, FoldReport, Metrics, Selection};
use crate::datasets::Fold;
use crate::graph::Graph;
use crate::model::{Mode, Model, ModelConfig, Task};
use crate::nn::{argmax_rows, Adam, ParamStore, Tape};
use crate::plan::Plan;
use crate::{Error, Result};

pub struct TrainOutcome {
    pub model: Model<f64>,
    pub report: FoldReport,
    /// Mean training loss of every epoch.
    pub losses: Vec<f64>,
}

fn new_model(cfg: &ExperimentConfig, input_dim: usize, classes: usize, rng: &mut ChaCha8Rng) -> Result<Model<f64>> {
    cfg.validate()?;
    let config =
        ModelConfig { arch: cfg.arch()?, task: cfg.task, input_dim, hidden: cfg.hidden, classes, readout: cfg.readout };
    Model::new(config, rng)
}

fn check_loss(loss: f64, epoch: usize, step: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("training loss {loss} at epoch {} step {step}", epoch + 1)))
    }
}

fn apply_schedule(cfg: &ExperimentConfig, adam: &mut Adam<f64>, epoch: usize) {
    if let Some(d) = cfg.lr_decay {
        if epoch > 0 && epoch.is_multiple_of(d.period) {
            adam.lr *= d.factor;
        }
    }
}

/// Metrics of graph-level predictions over a compiled plan whose graphs are
/// labeled by `labels` in plan order.
pub fn evaluate_graphs(model: &Model<f64>, plan: &Plan<f64>, labels: &[usize]) -> Result<Metrics> {
    let pred = argmax_rows(&model.predict_plan(plan)?);
    metrics(&pred, labels)
}

/// Metrics on the listed nodes of a single-graph plan.
pub fn evaluate_nodes(model: &Model<f64>, plan: &Plan<f64>, labels: &[usize], nodes: &[usize]) -> Result<Metrics> {
    let pred = argmax_rows(&model.predict_plan(plan)?);
    let p: Vec<usize> = nodes.iter().map(|&v| pred[v]).collect();
    let t: Vec<usize> = nodes.iter().map(|&v| labels[v]).collect();
    metrics(&p, &t)
}

/// Trains a graph classifier on one fold. `plan` covers all of `graphs`;
/// batches, validation and test sets are restricted from it.
pub fn train_graph_fold(
    cfg: &ExperimentConfig,
    graphs: &[Graph<f64>],
    plan: &Plan<f64>,
    fold: &Fold,
    seed: u64,
) -> Result<TrainOutcome> {
    let start = Instant::now();
    if cfg.task != Task::Graph {
        return Err(Error::Config("graph training needs a graph task".into()));
    }
    if fold.train.is_empty() || fold.test.is_empty() {
        return Err(Error::Empty("fold has no training or test graphs".into()));
    }
    let labels: Vec<usize> = graphs
        .iter()
        .map(|g| g.graph_label().ok_or_else(|| Error::Dataset("unlabeled graph".into())))
        .collect::<Result<_>>()?;
    let classes = labels.iter().max().map_or(0, |&c| c + 1).max(2);
    let input_dim = graphs.first().map_or(0, |g| g.feature_dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = new_model(cfg, input_dim, classes, &mut rng)?;
    let mut adam = Adam::new(cfg.lr);

    let pick = |idx: &[usize]| -> Vec<usize> { idx.iter().map(|&i| labels[i]).collect() };
    let val = if fold.val.is_empty() { None } else { Some((plan.restrict(&fold.val)?, pick(&fold.val))) };
    let select_best = cfg.selection == Selection::BestValidation && val.is_some();

    let mut best: Option<(f64, usize, ParamStore<f64>)> = None;
    let mut losses = Vec::with_capacity(cfg.epochs);
    let mut order = fold.train.clone();
    for epoch in 0..cfg.epochs {
        apply_schedule(cfg, &mut adam, epoch);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (step, batch) in order.chunks(cfg.batch_size).enumerate() {
            let bp = plan.restrict(batch)?;
            let mut tape = Tape::new();
            let out = model.forward(&mut tape, &bp, Mode::Train)?;
            let loss = tape.softmax_cross_entropy(out.logits, pick(batch))?;
            let value = tape.value(loss)[(0, 0)];
            check_loss(value, epoch, step)?;
            total += value * batch.len() as f64;
            let back = tape.backward_scalar(loss)?;
            adam.step(&mut model.store, &back.params)?;
            let updates = tape.take_buffer_updates();
            model.store.apply_buffer_updates(updates);
        }
        losses.push(total / order.len() as f64);
        if select_best {
            let (vp, vl) = val.as_ref().unwrap();
            let acc = evaluate_graphs(&model, vp, vl)?.accuracy;
            if best.as_ref().is_none_or(|b| acc >= b.0) {
                best = Some((acc, epoch + 1, model.store.clone()));
            }
        }
    }
    let best_epoch = match best {
        Some((_, epoch, store)) => {
            model.store = store;
            epoch
        }
        None => cfg.epochs,
    };
    let val_accuracy = match &val {
        Some((vp, vl)) => Some(evaluate_graphs(&model, vp, vl)?.accuracy),
        None => None,
    };
    let train_plan = plan.restrict(&fold.train)?;
    let train_accuracy = evaluate_graphs(&model, &train_plan, &pick(&fold.train))?.accuracy;
    let test = evaluate_graphs(&model, &plan.restrict(&fold.test)?, &pick(&fold.test))?;
    let report = FoldReport {
        repeat: 0,
        fold: 0,
        accuracy: test.accuracy,
        macro_f1: test.macro_f1,
        train_accuracy,
        val_accuracy,
        hidden: cfg.hidden,
        batch_size: cfg.batch_size,
        best_epoch,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok(TrainOutcome { model, report, losses })
}

/// [`train_graph_fold`] for every combination of the configured grid (or
/// once without one), keeping the run with the highest validation accuracy.
/// Earlier combinations win ties. Every run starts from the same seed.
pub fn select_and_train_graph_fold(
    cfg: &ExperimentConfig,
    graphs: &[Graph<f64>],
    plan: &Plan<f64>,
    fold: &Fold,
    seed: u64,
) -> Result<TrainOutcome> {
    let Some(grid) = &cfg.grid else {
        return train_graph_fold(cfg, graphs, plan, fold, seed);
    };
    let start = Instant::now();
    let mut best: Option<TrainOutcome> = None;
    for &hidden in &grid.hidden {
        for &batch_size in &grid.batch_size {
            let c = ExperimentConfig { hidden, batch_size, grid: None, ..cfg.clone() };
            let out = train_graph_fold(&c, graphs, plan, fold, seed)?;
            let val = out.report.val_accuracy.unwrap_or(f64::NEG_INFINITY);
            if best.as_ref().is_none_or(|b| val > b.report.val_accuracy.unwrap_or(f64::NEG_INFINITY)) {
                best = Some(out);
            }
        }
    }
    let mut out = best.expect("grid is non-empty");
    out.report.seconds = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Trains a node classifier on one graph. Every epoch is one full-graph
/// forward pass with the loss over the training nodes; the final epoch is
/// kept.
pub fn train_node_fold(
    cfg: &ExperimentConfig,
    plan: &Plan<f64>,
    labels: &[usize],
    train: &[usize],
    test: &[usize],
    seed: u64,
) -> Result<TrainOutcome> {
    let start = Instant::now();
    if cfg.task != Task::Node {
        return Err(Error::Config("node training needs a node task".into()));
    }
    if plan.num_graphs() != 1 || labels.len() != plan.num_nodes() {
        return Err(Error::Shape("node training expects a one-graph plan with one label per node".into()));
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::Empty("fold has no training or test nodes".into()));
    }
    let classes = labels.iter().max().map_or(0, |&c| c + 1).max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = new_model(cfg, plan.leaf.cols(), classes, &mut rng)?;
    let mut adam = Adam::new(cfg.lr);
    let rows: Vec<usize> = train.iter().map(|&v| plan.final_class()[v] as usize).collect();
    let targets: Vec<usize> = train.iter().map(|&v| labels[v]).collect();

    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        apply_schedule(cfg, &mut adam, epoch);
        let mut tape = Tape::new();
        let out = model.forward(&mut tape, plan, Mode::Train)?;
        let picked = tape.gather(out.logits, rows.clone())?;
        let loss = tape.softmax_cross_entropy(picked, targets.clone())?;
        let value = tape.value(loss)[(0, 0)];
        check_loss(value, epoch, 0)?;
        losses.push(value);
        let back = tape.backward_scalar(loss)?;
        adam.step(&mut model.store, &back.params)?;
        let updates = tape.take_buffer_updates();
        model.store.apply_buffer_updates(updates);
    }
    let train_accuracy = evaluate_nodes(&model, plan, labels, train)?.accuracy;
    let m = evaluate_nodes(&model, plan, labels, test)?;
    let report = FoldReport {
        repeat: 0,
        fold: 0,
        accuracy: m.accuracy,
        macro_f1: m.macro_f1,
        train_accuracy,
        val_accuracy: None,
        hidden: cfg.hidden,
        batch_size: cfg.batch_size,
        best_epoch: cfg.epochs,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok(TrainOutcome { model, report, losses })
}
