//! Training loops, cross-validation and result reporting.

mod cv;
mod metrics;
mod report;
mod train;

use serde::{Deserialize, Serialize};

use crate::baseline::Readout;
use crate::model::{Architecture, Task};
use crate::{Error, Result};

pub use cv::{cross_validate_graphs, cross_validate_nodes, with_workers, workers_from_env, WORKERS_ENV};
pub use metrics::{accuracy, macro_f1, metrics, Metrics};
pub use report::{read_jsonl, summarize, summary_csv, summary_markdown, write_jsonl, ResultRecord, Summary};
pub use train::{evaluate_graphs, evaluate_nodes, select_and_train_graph_fold, train_graph_fold, train_node_fold, TrainOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrDecay {
    pub factor: f64,
    pub period: usize,
}

/// Candidate values tried on every fold; the combination with the best
/// validation accuracy is kept.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub hidden: Vec<usize>,
    pub batch_size: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Keep the parameters after the last epoch.
    FinalEpoch,
    /// Keep the parameters of the epoch with the highest validation
    /// accuracy (earliest on ties).
    BestValidation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// `gnn-T` or `khop-k`.
    pub model: String,
    pub task: Task,
    pub hidden: usize,
    /// Graphs per optimizer step. Node tasks always train on the full graph.
    pub batch_size: usize,
    pub lr: f64,
    pub lr_decay: Option<LrDecay>,
    pub epochs: usize,
    pub folds: usize,
    pub repeats: usize,
    /// Share of each training fold held out for validation.
    pub val_fraction: f64,
    pub selection: Selection,
    pub readout: Readout,
    /// Graph tasks only: overrides `hidden` and `batch_size` per fold.
    #[serde(default)]
    pub grid: Option<HyperGrid>,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Node-role benchmark: hidden 8, Adam at 1e-2, 200 epochs, last epoch.
    pub fn roles(model: &str) -> Self {
        Self {
            model: model.into(),
            task: Task::Node,
            hidden: 8,
            batch_size: 1,
            lr: 1e-2,
            lr_decay: None,
            epochs: 200,
            folds: 10,
            repeats: 1,
            val_fraction: 0.0,
            selection: Selection::FinalEpoch,
            readout: Readout::Sum,
            grid: None,
            seed: 0,
        }
    }

    /// Regular-graph property datasets.
    pub fn property(model: &str) -> Self {
        Self {
            model: model.into(),
            task: Task::Graph,
            hidden: 16,
            batch_size: 32,
            lr: 1e-2,
            lr_decay: None,
            epochs: 100,
            folds: 10,
            repeats: 1,
            val_fraction: 0.1,
            selection: Selection::BestValidation,
            readout: Readout::Sum,
            grid: None,
            seed: 0,
        }
    }

    /// Benchmark graph classification: Adam at 1e-3 halved every 50 epochs,
    /// 500 epochs, best validation epoch.
    pub fn benchmark(model: &str) -> Self {
        Self {
            model: model.into(),
            task: Task::Graph,
            hidden: 32,
            batch_size: 32,
            lr: 1e-3,
            lr_decay: Some(LrDecay { factor: 0.5, period: 50 }),
            epochs: 500,
            folds: 10,
            repeats: 1,
            val_fraction: 0.1,
            selection: Selection::BestValidation,
            readout: Readout::Sum,
            grid: Some(HyperGrid { hidden: vec![16, 32, 64], batch_size: vec![32, 64, 128] }),
            seed: 0,
        }
    }

    pub fn arch(&self) -> Result<Architecture> {
        Architecture::preset(&self.model)
    }

    pub fn validate(&self) -> Result<()> {
        self.arch()?;
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if self.hidden == 0 {
            return bad("hidden width must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        if let Some(d) = self.lr_decay {
            if d.period == 0 || !(d.factor > 0.0 && d.factor.is_finite()) {
                return bad("learning-rate decay needs a positive factor and period");
            }
        }
        if self.epochs == 0 || self.repeats == 0 {
            return bad("epochs and repeats must be positive");
        }
        if self.folds < 2 {
            return bad("at least 2 folds are required");
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return bad("validation fraction must lie in [0, 1)");
        }
        if self.selection == Selection::BestValidation && self.val_fraction == 0.0 {
            return bad("best-validation selection needs a validation fraction");
        }
        if let Some(g) = &self.grid {
            if g.hidden.is_empty() || g.batch_size.is_empty() || g.hidden.contains(&0) || g.batch_size.contains(&0) {
                return bad("grid values must be non-empty and positive");
            }
            if self.val_fraction == 0.0 {
                return bad("grid selection needs a validation fraction");
            }
        }
        Ok(())
    }
}

/// Outcome of one fold of one repeat.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub repeat: usize,
    pub fold: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub train_accuracy: f64,
    /// Validation accuracy of the kept parameters, when a validation set
    /// exists.
    pub val_accuracy: Option<f64>,
    pub hidden: usize,
    pub batch_size: usize,
    /// Epoch whose parameters were kept (1-based).
    pub best_epoch: usize,
    pub seconds: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for m in ["gnn-2", "gnn-3", "khop-2", "khop-3"] {
            ExperimentConfig::roles(m).validate().unwrap();
            ExperimentConfig::property(m).validate().unwrap();
            ExperimentConfig::benchmark(m).validate().unwrap();
        }
    }

    #[test]
    fn rejects_bad_values() {
        let ok = ExperimentConfig::property("khop-2");
        let mut c = ok.clone();
        c.model = "mlp-2".into();
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.hidden = 0;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.val_fraction = 0.0;
        assert!(c.validate().is_err());
        let mut c = ok;
        c.lr = f64::NAN;
        assert!(c.validate().is_err());
    }
}
