//! Whole models: input encoder, aggregation layers with batch normalization,
//! and a classification head for node or graph tasks.

use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::{gnn_layer_forward, readout, GnnLayer, GnnVariant, Readout};
use crate::graph::Graph;
use crate::khop::{khop_layer_forward, KHopLayer};
use crate::nn::{BatchNorm, Checkpoint, Dense, Matrix, Mlp, ParamStore, Tape, Var, BN_EPS};
use crate::plan::{run_layer, LayerParams, LayerShape, Plan};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Node,
    Graph,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum Architecture {
    Gnn { layers: usize, variant: GnnVariant },
    KHop { k: usize, layers: usize },
}

impl Architecture {
    /// `gnn-T` (T baseline layers) or `khop-k` (one k-hop layer).
    pub fn preset(name: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown model {name:?}; expected gnn-<T> or khop-<k>"));
        let (family, num) = name.split_once('-').ok_or_else(bad)?;
        let num: usize = num.parse().map_err(|_| bad())?;
        if num == 0 {
            return Err(bad());
        }
        match family {
            "gnn" => Ok(Architecture::Gnn { layers: num, variant: GnnVariant::MeanMerge }),
            "khop" => Ok(Architecture::KHop { k: num, layers: 1 }),
            _ => Err(bad()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Architecture::Gnn { layers, .. } => format!("gnn-{layers}"),
            Architecture::KHop { k, layers: 1 } => format!("khop-{k}"),
            Architecture::KHop { k, layers } => format!("khop-{k}x{layers}"),
        }
    }

    pub fn num_layers(&self) -> usize {
        match self {
            Architecture::Gnn { layers, .. } | Architecture::KHop { layers, .. } => *layers,
        }
    }

    pub fn layer_shapes(&self) -> Vec<LayerShape> {
        match *self {
            Architecture::Gnn { layers, .. } => vec![LayerShape::Neighborhood; layers],
            Architecture::KHop { k, layers } => vec![LayerShape::KHop { k }; layers],
        }
    }
}

impl FromStr for Architecture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::preset(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub arch: Architecture,
    pub task: Task,
    pub input_dim: usize,
    pub hidden: usize,
    pub classes: usize,
    #[serde(default)]
    pub readout: Readout,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AggLayer {
    Gnn(GnnLayer),
    KHop(KHopLayer),
}

impl AggLayer {
    fn params(&self) -> LayerParams<'_> {
        match self {
            AggLayer::Gnn(l) => LayerParams::Gnn(l),
            AggLayer::KHop(l) => LayerParams::KHop(l),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics in normalization; running statistics are queued on
    /// the tape.
    Train,
    /// Running statistics.
    Eval,
}

/// Recorded outputs of a forward pass over a compiled plan.
#[derive(Clone, Debug)]
pub struct Output {
    /// Final representation, one row per distinct final class.
    pub repr: Var,
    /// Node task: logits per distinct final class. Graph task: logits per
    /// graph of the plan.
    pub logits: Var,
}

#[derive(Clone, Debug)]
pub struct Model<T> {
    pub config: ModelConfig,
    pub store: ParamStore<T>,
    pub encoder: Dense,
    pub layers: Vec<AggLayer>,
    pub norms: Vec<BatchNorm>,
    pub head: Mlp,
}

impl<T: Scalar> Model<T> {
    pub fn new<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        if config.input_dim == 0 || config.hidden == 0 || config.classes == 0 {
            return Err(Error::Config("input, hidden and class dimensions must be positive".into()));
        }
        if config.arch.num_layers() == 0 {
            return Err(Error::Config("at least one aggregation layer is required".into()));
        }
        let mut store = ParamStore::new();
        let h = config.hidden;
        let encoder = Dense::new(&mut store, "encoder", config.input_dim, h, rng);
        let mut layers = Vec::new();
        let mut norms = Vec::new();
        for t in 0..config.arch.num_layers() {
            let name = format!("layer{t}");
            layers.push(match config.arch {
                Architecture::Gnn { variant, .. } => AggLayer::Gnn(GnnLayer::new(&mut store, &name, variant, h, rng)),
                Architecture::KHop { k, .. } => AggLayer::KHop(KHopLayer::new(&mut store, &name, k, h, rng)?),
            });
            norms.push(BatchNorm::new(&mut store, &format!("{name}.bn"), h));
        }
        let head = Mlp::two_layer(&mut store, "head", h, h, config.classes, rng);
        Ok(Self { config, store, encoder, layers, norms, head })
    }

    /// Compiles the plan for `graphs`, checking the feature width.
    pub fn compile(&self, graphs: &[&Graph<T>]) -> Result<Plan<T>> {
        for g in graphs {
            if g.feature_dim() != self.config.input_dim {
                return Err(Error::Shape(format!(
                    "model expects {} input features, graph has {}",
                    self.config.input_dim,
                    g.feature_dim()
                )));
            }
        }
        Plan::compile(graphs, &self.config.arch.layer_shapes())
    }

    /// Records the model over a compiled plan.
    pub fn forward(&self, tape: &mut Tape<T>, plan: &Plan<T>, mode: Mode) -> Result<Output> {
        if plan.layers.len() != self.layers.len() {
            return Err(Error::Config("plan was compiled for a different depth".into()));
        }
        if plan.leaf.cols() != self.config.input_dim {
            return Err(Error::Shape("plan feature width differs from the model".into()));
        }
        let x = tape.leaf(plan.leaf.clone());
        let mut h = self.encoder.forward(tape, &self.store, x)?;
        for ((layer, norm), lp) in self.layers.iter().zip(&self.norms).zip(&plan.layers) {
            let pre = run_layer(tape, &self.store, layer.params(), lp, h)?;
            h = match mode {
                Mode::Train => {
                    let mut w = vec![T::zero(); lp.num_outputs()];
                    for &c in &lp.node_class {
                        w[c as usize] = w[c as usize] + T::one();
                    }
                    norm.forward_train(tape, &self.store, pre, Some(w))?
                }
                Mode::Eval => norm.forward_eval(tape, &self.store, pre)?,
            };
        }
        let logits = match self.config.task {
            Task::Node => self.head.forward(tape, &self.store, h)?,
            Task::Graph => {
                let pooled = self.readout_var(tape, plan, h)?;
                self.head.forward(tape, &self.store, pooled)?
            }
        };
        Ok(Output { repr: h, logits })
    }

    fn readout_var(&self, tape: &mut Tape<T>, plan: &Plan<T>, h: Var) -> Result<Var> {
        let classes = plan.final_class();
        let mut rows = Vec::new();
        let mut dst = Vec::new();
        let mut weights = Vec::new();
        for gi in 0..plan.num_graphs() {
            let range = plan.graph_offsets[gi]..plan.graph_offsets[gi + 1];
            if range.is_empty() {
                return Err(Error::Empty(format!("graph {gi} has no nodes")));
            }
            let n = T::from_usize(range.len()).unwrap();
            let mut counts: Vec<(u32, usize)> = Vec::new();
            let mut cls: Vec<u32> = classes[range].to_vec();
            cls.sort_unstable();
            for c in cls {
                match counts.last_mut() {
                    Some((last, cnt)) if *last == c => *cnt += 1,
                    _ => counts.push((c, 1)),
                }
            }
            for (c, cnt) in counts {
                rows.push(c as usize);
                dst.push(gi);
                let w = T::from_usize(cnt).unwrap();
                weights.push(match self.config.readout {
                    Readout::Sum => w,
                    Readout::Mean => w / n,
                });
            }
        }
        let gathered = tape.gather(h, rows)?;
        tape.scatter_add(gathered, dst, Some(weights), plan.num_graphs())
    }

    /// Logits per node (node task) or per graph (graph task) in inference
    /// mode.
    pub fn predict(&self, graphs: &[&Graph<T>]) -> Result<Matrix<T>> {
        let plan = self.compile(graphs)?;
        self.predict_plan(&plan)
    }

    /// Inference over a compiled plan: one row per node of the plan (node
    /// task) or per graph (graph task).
    pub fn predict_plan(&self, plan: &Plan<T>) -> Result<Matrix<T>> {
        let mut tape = Tape::new();
        let out = self.forward(&mut tape, plan, Mode::Eval)?;
        Ok(match self.config.task {
            Task::Graph => tape.value(out.logits).clone(),
            Task::Node => {
                let idx: Vec<usize> = plan.final_class().iter().map(|&c| c as usize).collect();
                let rows = tape.gather(out.logits, idx)?;
                tape.value(rows).clone()
            }
        })
    }

    /// Direct evaluation that visits every node (and, for k-hop layers,
    /// every root's neighborhood) separately. Returns the final node
    /// representations of each graph and the logits as in [`Model::predict`].
    /// In training mode normalization uses statistics over all nodes of all
    /// graphs.
    pub fn reference_forward(&self, graphs: &[&Graph<T>], mode: Mode) -> Result<(Vec<Matrix<T>>, Matrix<T>)> {
        let mut hs: Vec<Matrix<T>> = Vec::with_capacity(graphs.len());
        for g in graphs {
            if g.feature_dim() != self.config.input_dim {
                return Err(Error::Shape("feature width differs from the model".into()));
            }
            hs.push(self.encoder.apply(&self.store, g.features())?);
        }
        for (layer, norm) in self.layers.iter().zip(&self.norms) {
            let mut pre = Vec::with_capacity(graphs.len());
            for (g, h) in graphs.iter().zip(&hs) {
                pre.push(match layer {
                    AggLayer::Gnn(l) => gnn_layer_forward(l, &self.store, g, h)?,
                    AggLayer::KHop(l) => khop_layer_forward(l, &self.store, g, h)?,
                });
            }
            hs = match mode {
                Mode::Eval => pre.iter().map(|p| norm.apply_eval(&self.store, p)).collect(),
                Mode::Train => batch_normalize(norm, &self.store, &pre)?,
            };
        }
        let logits = match self.config.task {
            Task::Node => {
                let total: usize = hs.iter().map(Matrix::rows).sum();
                let mut all = Matrix::zeros(total, self.config.hidden);
                let mut r = 0;
                for h in &hs {
                    for i in 0..h.rows() {
                        all.row_mut(r).copy_from_slice(h.row(i));
                        r += 1;
                    }
                }
                self.head.apply(&self.store, &all)?
            }
            Task::Graph => {
                let pooled: Result<Vec<Vec<T>>> = hs.iter().map(|h| readout(h, self.config.readout)).collect();
                self.head.apply(&self.store, &Matrix::from_rows(&pooled?))?
            }
        };
        Ok((hs, logits))
    }

    pub fn to_checkpoint(&self) -> ModelCheckpoint {
        ModelCheckpoint { config: self.config, params: self.store.to_checkpoint() }
    }

    /// Rebuilds a model from a checkpoint.
    pub fn from_checkpoint(ck: &ModelCheckpoint) -> Result<Self> {
        let mut rng = rand::rngs::mock::StepRng::new(0, 1);
        let mut model = Self::new(ck.config, &mut rng)?;
        model.store.load_checkpoint(&ck.params)?;
        Ok(model)
    }
}

fn batch_normalize<T: Scalar>(norm: &BatchNorm, store: &ParamStore<T>, pre: &[Matrix<T>]) -> Result<Vec<Matrix<T>>> {
    let c = norm.dim;
    let total: usize = pre.iter().map(Matrix::rows).sum();
    if total == 0 {
        return Err(Error::Empty("batch norm over an empty batch".into()));
    }
    let n = T::from_usize(total).unwrap();
    let mut mean = vec![T::zero(); c];
    for p in pre {
        for (m, s) in mean.iter_mut().zip(p.column_sums()) {
            *m = *m + s;
        }
    }
    mean.iter_mut().for_each(|m| *m = *m / n);
    let mut var = vec![T::zero(); c];
    for p in pre {
        for i in 0..p.rows() {
            for j in 0..c {
                let d = p[(i, j)] - mean[j];
                var[j] = var[j] + d * d;
            }
        }
    }
    var.iter_mut().for_each(|v| *v = *v / n);
    let eps = T::from_f64_lossy(BN_EPS);
    let (g, b) = (store.value(norm.gamma), store.value(norm.beta));
    Ok(pre
        .iter()
        .map(|p| {
            let mut out = p.clone();
            for i in 0..out.rows() {
                for j in 0..c {
                    out[(i, j)] = (p[(i, j)] - mean[j]) / (var[j] + eps).sqrt() * g[(0, j)] + b[(0, j)];
                }
            }
            out
        })
        .collect())
}

/// Model configuration plus named tensors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub config: ModelConfig,
    pub params: Checkpoint,
}

impl ModelCheckpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|_| Error::MissingFile(path.to_path_buf()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn classify<T: Scalar>(model: &Model<T>, g: &Graph<T>) -> Result<Matrix<T>> {
    model.predict(&[g])
}

/// Baseline model logits for one graph: `1 x classes` for graph tasks,
/// `n x classes` for node tasks.
pub fn gnn_classify<T: Scalar>(model: &Model<T>, g: &Graph<T>) -> Result<Matrix<T>> {
    match model.config.arch {
        Architecture::Gnn { .. } => classify(model, g),
        _ => Err(Error::Config("not a baseline model".into())),
    }
}

/// k-hop model logits for one graph, shaped as in [`gnn_classify`].
pub fn khop_classify<T: Scalar>(model: &Model<T>, g: &Graph<T>) -> Result<Matrix<T>> {
    match model.config.arch {
        Architecture::KHop { .. } => classify(model, g),
        _ => Err(Error::Config("not a k-hop model".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{cycle, disjoint_union, gnp};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config(arch: &str, task: Task, input_dim: usize) -> ModelConfig {
        ModelConfig { arch: Architecture::preset(arch).unwrap(), task, input_dim, hidden: 4, classes: 3, readout: Readout::Sum }
    }

    #[test]
    fn presets() {
        assert_eq!(Architecture::preset("gnn-3").unwrap().num_layers(), 3);
        assert_eq!(Architecture::preset("khop-2").unwrap(), Architecture::KHop { k: 2, layers: 1 });
        assert!(Architecture::preset("khop-0").is_err());
        assert!(Architecture::preset("mlp-2").is_err());
        assert_eq!(Architecture::preset("khop-3").unwrap().name(), "khop-3");
    }

    #[test]
    fn compiled_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for arch in ["gnn-2", "gnn-3", "khop-1", "khop-2", "khop-3"] {
            for task in [Task::Graph, Task::Node] {
                let graphs: Vec<Graph<f64>> =
                    (0..4).map(|i| gnp(7 + i, 0.35, &mut rng).with_degree_features()).collect();
                let refs: Vec<&Graph<f64>> = graphs.iter().collect();
                let mut model = Model::<f64>::new(config(arch, task, 1), &mut rng).unwrap();
                for id in model.store.ids().collect::<Vec<_>>() {
                    if !model.store.is_trainable(id) {
                        let m = model.store.value_mut(id);
                        for x in m.as_mut_slice() {
                            *x = 0.5 + rng.gen::<f64>();
                        }
                    }
                }
                let (_, expect) = model.reference_forward(&refs, Mode::Eval).unwrap();
                let got = model.predict(&refs).unwrap();
                assert!(got.max_abs_diff(&expect) < 1e-9, "{arch} {task:?}");

                let plan = model.compile(&refs).unwrap();
                let mut tape = Tape::new();
                let out = model.forward(&mut tape, &plan, Mode::Train).unwrap();
                let (_, expect) = model.reference_forward(&refs, Mode::Train).unwrap();
                let got = match task {
                    Task::Graph => tape.value(out.logits).clone(),
                    Task::Node => {
                        let idx = plan.final_class().iter().map(|&c| c as usize).collect();
                        let v = tape.gather(out.logits, idx).unwrap();
                        tape.value(v).clone()
                    }
                };
                assert!(got.max_abs_diff(&expect) < 1e-9, "{arch} {task:?} train");
            }
        }
    }

    #[test]
    fn counterexample_logits() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = cycle::<f64>(6);
        let b = disjoint_union(&cycle(3), &cycle(3));
        let gnn = Model::<f64>::new(config("gnn-2", Task::Graph, 1), &mut rng).unwrap();
        assert_eq!(gnn_classify(&gnn, &a).unwrap(), gnn_classify(&gnn, &b).unwrap());
        let khop = Model::<f64>::new(config("khop-2", Task::Graph, 1), &mut rng).unwrap();
        let (la, lb) = (khop_classify(&khop, &a).unwrap(), khop_classify(&khop, &b).unwrap());
        assert_eq!(la.shape(), (1, 3));
        assert!(la.max_abs_diff(&lb) > 1e-6);
        assert!(gnn_classify(&khop, &a).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let model = Model::<f64>::new(config("khop-2", Task::Graph, 1), &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        model.to_checkpoint().save(&path).unwrap();
        let back = Model::<f64>::from_checkpoint(&ModelCheckpoint::load(&path).unwrap()).unwrap();
        let g = cycle::<f64>(5);
        assert_eq!(back.predict(&[&g]).unwrap(), model.predict(&[&g]).unwrap());
    }
}
