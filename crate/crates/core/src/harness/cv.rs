use rayon::prelude::*;

use super::{select_and_train_graph_fold, train_node_fold, ExperimentConfig, ResultRecord};
use crate::datasets::{derive_seed, kfold_split, Fold};
use crate::graph::Graph;
use crate::model::Task;
use crate::plan::Plan;
use crate::{Error, Result};

/// Environment variable holding the number of worker threads.
pub const WORKERS_ENV: &str = "KHOP_WORKERS";

pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {s:?}"))),
        },
    }
}

/// Runs `f` on a pool of `workers` threads (the global pool when `None`).
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

// Repeat r splits with derive_seed(seed, 2r); fold f of that repeat
// initializes from derive_seed(derive_seed(seed, 2r + 1), f).
fn split_seed(seed: u64, repeat: usize) -> u64 {
    derive_seed(seed, 2 * repeat as u64)
}

fn fold_seed(seed: u64, repeat: usize, fold: usize) -> u64 {
    derive_seed(derive_seed(seed, 2 * repeat as u64 + 1), fold as u64)
}

fn audit_fold(f: &Fold) -> Result<()> {
    let test: std::collections::HashSet<usize> = f.test.iter().copied().collect();
    if f.train.iter().chain(&f.val).any(|i| test.contains(i)) {
        return Err(Error::Dataset("a test item leaked into training or validation".into()));
    }
    Ok(())
}

/// Repeated stratified k-fold cross-validation of graph classification.
/// Folds and repeats run in parallel; results come back in (repeat, fold)
/// order and do not depend on the number of workers.
pub fn cross_validate_graphs(cfg: &ExperimentConfig, dataset: &str, graphs: &[Graph<f64>]) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    if cfg.task != Task::Graph {
        return Err(Error::Config("graph cross-validation needs a graph task".into()));
    }
    let labels: Vec<usize> = graphs
        .iter()
        .map(|g| g.graph_label().ok_or_else(|| Error::Dataset("unlabeled graph".into())))
        .collect::<Result<_>>()?;
    let refs: Vec<&Graph<f64>> = graphs.iter().collect();
    let plan = Plan::compile(&refs, &cfg.arch()?.layer_shapes())?;
    let mut jobs = Vec::new();
    for r in 0..cfg.repeats {
        for (f, fold) in kfold_split(&labels, cfg.folds, cfg.val_fraction, split_seed(cfg.seed, r))?.into_iter().enumerate() {
            audit_fold(&fold)?;
            jobs.push((r, f, fold));
        }
    }
    jobs.into_par_iter()
        .map(|(r, f, fold)| {
            let mut report = select_and_train_graph_fold(cfg, graphs, &plan, &fold, fold_seed(cfg.seed, r, f))?.report;
            report.repeat = r;
            report.fold = f;
            Ok(ResultRecord { dataset: dataset.to_string(), graph: None, config: cfg.clone(), report })
        })
        .collect()
}

/// Repeated stratified k-fold cross-validation over the nodes of one graph.
pub fn cross_validate_nodes(
    cfg: &ExperimentConfig,
    dataset: &str,
    graph: &Graph<f64>,
    labels: &[usize],
) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    if cfg.task != Task::Node {
        return Err(Error::Config("node cross-validation needs a node task".into()));
    }
    if labels.len() != graph.n() {
        return Err(Error::Shape(format!("{} labels for {} nodes", labels.len(), graph.n())));
    }
    let plan = Plan::compile(&[graph], &cfg.arch()?.layer_shapes())?;
    let mut jobs = Vec::new();
    for r in 0..cfg.repeats {
        for (f, fold) in kfold_split(labels, cfg.folds, 0.0, split_seed(cfg.seed, r))?.into_iter().enumerate() {
            audit_fold(&fold)?;
            jobs.push((r, f, fold));
        }
    }
    jobs.into_par_iter()
        .map(|(r, f, fold)| {
            let mut report = train_node_fold(cfg, &plan, labels, &fold.train, &fold.test, fold_seed(cfg.seed, r, f))?.report;
            report.repeat = r;
            report.fold = f;
            Ok(ResultRecord { dataset: dataset.to_string(), graph: None, config: cfg.clone(), report })
        })
        .collect()
}
