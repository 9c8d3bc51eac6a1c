//! Compiled evaluation of aggregation layers over batches of graphs.
//!
//! Two nodes whose computations coincide (same input row, same multiset of
//! operands at every step) produce bit-identical values, so each distinct
//! computation is evaluated once and its multiplicity is carried along. For
//! the baseline layer the distinct computations are exactly the colors of
//! Weisfeiler-Leman refinement; for the k-hop layer they are the distinct
//! update keys arising across all roots. Values and parameter gradients are
//! the same as evaluating every node separately.

use std::collections::HashMap;

use crate::baseline::GnnLayer;
use crate::graph::Graph;
use crate::khop::{KHopLayer, ModuleKey};
use crate::nn::{Matrix, Mlp, ParamStore, Tape, Var};
use crate::{Error, Result, Scalar};

/// Operand reference: `source << 32 | index`, where source 0 is the layer
/// input and source `s + 1` is the output of stage `s`.
pub type Ref = u64;

fn pack(source: usize, index: usize) -> Ref {
    ((source as u64) << 32) | index as u64
}

fn unpack(r: Ref) -> (usize, usize) {
    ((r >> 32) as usize, (r & 0xffff_ffff) as usize)
}

/// Structure of an aggregation layer, without parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerShape {
    /// One step over direct neighbors.
    Neighborhood,
    /// Ring-ordered updates over the k-hop neighborhood.
    KHop { k: usize },
}

/// Distinct `(self, multiset of operands)` computations of one update step.
#[derive(Clone, Debug, Default)]
pub struct Stage {
    pub module: Option<ModuleKey>,
    pub self_ref: Vec<Ref>,
    pub nbr_start: Vec<usize>,
    /// Distinct operands of each entry, ascending.
    pub nbr_ref: Vec<Ref>,
    /// Multiplicity of each operand.
    pub nbr_count: Vec<u32>,
}

impl Stage {
    fn new(module: Option<ModuleKey>) -> Self {
        Self { module, nbr_start: vec![0], ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.self_ref.len()
    }

    pub fn is_empty(&self) -> bool {
        self.self_ref.is_empty()
    }

    pub fn operands(&self, e: usize) -> (&[Ref], &[u32]) {
        let r = self.nbr_start[e]..self.nbr_start[e + 1];
        (&self.nbr_ref[r.clone()], &self.nbr_count[r])
    }

    /// Number of operands of entry `e`, with multiplicity.
    pub fn degree(&self, e: usize) -> u32 {
        self.operands(e).1.iter().sum()
    }

    fn push(&mut self, self_ref: Ref, sorted_ops: &[Ref]) {
        self.self_ref.push(self_ref);
        let mut i = 0;
        while i < sorted_ops.len() {
            let mut j = i;
            while j < sorted_ops.len() && sorted_ops[j] == sorted_ops[i] {
                j += 1;
            }
            self.nbr_ref.push(sorted_ops[i]);
            self.nbr_count.push((j - i) as u32);
            i = j;
        }
        self.nbr_start.push(self.nbr_ref.len());
    }
}

#[derive(Clone, Debug)]
pub struct LayerPlan {
    pub shape: LayerShape,
    pub num_inputs: usize,
    pub stages: Vec<Stage>,
    /// Output class of every node, flat over the plan's graphs.
    pub node_class: Vec<u32>,
}

impl LayerPlan {
    pub fn num_outputs(&self) -> usize {
        self.stages.last().map_or(0, Stage::len)
    }
}

/// Compiled computation for a list of graphs.
#[derive(Clone, Debug)]
pub struct Plan<T> {
    /// Distinct input feature rows.
    pub leaf: Matrix<T>,
    pub leaf_class: Vec<u32>,
    /// Node range of graph `i` is `graph_offsets[i]..graph_offsets[i + 1]`.
    pub graph_offsets: Vec<usize>,
    pub layers: Vec<LayerPlan>,
}

/// Size summary of a compiled plan.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct PlanStats {
    pub graphs: usize,
    pub nodes: usize,
    pub leaf_rows: usize,
    /// Distinct entries per layer and stage.
    pub stage_rows: Vec<Vec<usize>>,
}

struct Interner {
    map: HashMap<Box<[u64]>, u32>,
    key: Vec<u64>,
}

impl Interner {
    fn new() -> Self {
        Self { map: HashMap::new(), key: Vec::new() }
    }

    /// Interns `(self_ref, operands)`; `ops` is sorted in place.
    fn intern(&mut self, stage: &mut Stage, self_ref: Ref, ops: &mut [Ref]) -> u32 {
        ops.sort_unstable();
        self.key.clear();
        self.key.push(self_ref);
        self.key.extend_from_slice(ops);
        if let Some(&id) = self.map.get(self.key.as_slice()) {
            return id;
        }
        let id = stage.len() as u32;
        stage.push(self_ref, ops);
        self.map.insert(self.key.clone().into_boxed_slice(), id);
        id
    }
}

/// Reusable BFS scratch space.
struct Ball {
    level: Vec<u32>,
    touched: Vec<usize>,
    levels: Vec<Vec<usize>>,
}

const FAR: u32 = u32::MAX;

impl Ball {
    fn new() -> Self {
        Self { level: Vec::new(), touched: Vec::new(), levels: Vec::new() }
    }

    fn explore<T: Scalar>(&mut self, g: &Graph<T>, root: usize, k: usize) {
        if self.level.len() < g.n() {
            self.level.resize(g.n(), FAR);
        }
        for &u in &self.touched {
            self.level[u] = FAR;
        }
        self.touched.clear();
        self.levels.iter_mut().for_each(Vec::clear);
        if self.levels.len() < k + 1 {
            self.levels.resize(k + 1, Vec::new());
        }
        self.level[root] = 0;
        self.touched.push(root);
        self.levels[0].push(root);
        for d in 0..k {
            let (done, rest) = self.levels.split_at_mut(d + 1);
            for &u in &done[d] {
                for &w in g.neighbors(u) {
                    if self.level[w] == FAR {
                        self.level[w] = d as u32 + 1;
                        self.touched.push(w);
                        rest[0].push(w);
                    }
                }
            }
            rest[0].sort_unstable();
        }
    }
}

impl<T: Scalar> Plan<T> {
    /// Compiles `layers` over `graphs`. All graphs must share a feature width.
    pub fn compile(graphs: &[&Graph<T>], layers: &[LayerShape]) -> Result<Self> {
        let dim = graphs.first().map_or(0, |g| g.feature_dim());
        let mut graph_offsets = vec![0];
        let mut leaf_map: HashMap<Vec<u64>, u32> = HashMap::new();
        let mut leaf_rows: Vec<T> = Vec::new();
        let mut leaf_class = Vec::new();
        for g in graphs {
            if g.feature_dim() != dim {
                return Err(Error::Shape(format!("feature width {} vs {dim}", g.feature_dim())));
            }
            for v in 0..g.n() {
                let row = g.features().row(v);
                let key: Vec<u64> = row.iter().map(|x| x.bits()).collect();
                let next = leaf_map.len() as u32;
                let id = *leaf_map.entry(key).or_insert_with(|| {
                    leaf_rows.extend_from_slice(row);
                    next
                });
                leaf_class.push(id);
            }
            graph_offsets.push(leaf_class.len());
        }
        let leaf = Matrix::from_vec(leaf_map.len(), dim, leaf_rows);

        let mut plan_layers = Vec::with_capacity(layers.len());
        let mut input_class = leaf_class.clone();
        let mut num_inputs = leaf.rows();
        for &shape in layers {
            let lp = match shape {
                LayerShape::Neighborhood => compile_neighborhood(graphs, &graph_offsets, &input_class, num_inputs),
                LayerShape::KHop { k } => {
                    if k == 0 {
                        return Err(Error::ZeroRadius);
                    }
                    compile_khop(graphs, &graph_offsets, &input_class, num_inputs, k)
                }
            };
            input_class = lp.node_class.clone();
            num_inputs = lp.num_outputs();
            plan_layers.push(lp);
        }
        Ok(Self { leaf, leaf_class, graph_offsets, layers: plan_layers })
    }

    pub fn num_graphs(&self) -> usize {
        self.graph_offsets.len() - 1
    }

    pub fn num_nodes(&self) -> usize {
        self.leaf_class.len()
    }

    /// Output class of every node after the last layer (leaf class when there
    /// are no layers).
    pub fn final_class(&self) -> &[u32] {
        self.layers.last().map_or(&self.leaf_class, |l| &l.node_class)
    }

    pub fn num_final(&self) -> usize {
        self.layers.last().map_or(self.leaf.rows(), LayerPlan::num_outputs)
    }

    pub fn stats(&self) -> PlanStats {
        PlanStats {
            graphs: self.num_graphs(),
            nodes: self.num_nodes(),
            leaf_rows: self.leaf.rows(),
            stage_rows: self.layers.iter().map(|l| l.stages.iter().map(Stage::len).collect()).collect(),
        }
    }

    /// The sub-plan needed for the listed graphs, with indices compacted.
    pub fn restrict(&self, graphs: &[usize]) -> Result<Self> {
        let mut graph_offsets = vec![0];
        let mut nodes = Vec::new();
        for &gi in graphs {
            if gi >= self.num_graphs() {
                return Err(Error::Dataset(format!("graph {gi} is not in the plan")));
            }
            nodes.extend(self.graph_offsets[gi]..self.graph_offsets[gi + 1]);
            graph_offsets.push(nodes.len());
        }

        let (leaf_keep, leaf_map) = compact(self.leaf.rows(), nodes.iter().map(|&v| self.leaf_class[v] as usize));
        let mut leaf = Matrix::zeros(leaf_keep.len(), self.leaf.cols());
        for (i, &old) in leaf_keep.iter().enumerate() {
            leaf.row_mut(i).copy_from_slice(self.leaf.row(old));
        }
        let leaf_class = nodes.iter().map(|&v| leaf_map[self.leaf_class[v] as usize]).collect();

        let mut layers = Vec::with_capacity(self.layers.len());
        let mut input_map = leaf_map;
        for lp in &self.layers {
            let out_count = lp.num_outputs();
            let (_, out_map) = compact(out_count, nodes.iter().map(|&v| lp.node_class[v] as usize));
            // mark needed entries from the last stage backwards
            let mut needed: Vec<Vec<bool>> = lp.stages.iter().map(|s| vec![false; s.len()]).collect();
            if let Some(last) = needed.last_mut() {
                for (old, &new) in out_map.iter().enumerate() {
                    if new != u32::MAX {
                        last[old] = true;
                    }
                }
            }
            for s in (0..lp.stages.len()).rev() {
                let stage = &lp.stages[s];
                for e in 0..stage.len() {
                    if !needed[s][e] {
                        continue;
                    }
                    let refs = std::iter::once(stage.self_ref[e]).chain(stage.operands(e).0.iter().copied());
                    for r in refs {
                        let (src, idx) = unpack(r);
                        if src == 0 {
                            if input_map[idx] == u32::MAX {
                                return Err(Error::Dataset("plan operand outside the batch".into()));
                            }
                        } else {
                            needed[src - 1][idx] = true;
                        }
                    }
                }
            }
            let maps: Vec<Vec<u32>> = needed
                .iter()
                .map(|mask| {
                    let mut next = 0u32;
                    mask.iter()
                        .map(|&m| {
                            if m {
                                next += 1;
                                next - 1
                            } else {
                                u32::MAX
                            }
                        })
                        .collect()
                })
                .collect();
            let remap = |r: Ref| -> Ref {
                let (src, idx) = unpack(r);
                let new = if src == 0 { input_map[idx] } else { maps[src - 1][idx] };
                pack(src, new as usize)
            };
            let mut stages = Vec::with_capacity(lp.stages.len());
            for (s, stage) in lp.stages.iter().enumerate() {
                let mut out = Stage::new(stage.module);
                for e in 0..stage.len() {
                    if !needed[s][e] {
                        continue;
                    }
                    out.self_ref.push(remap(stage.self_ref[e]));
                    let (refs, counts) = stage.operands(e);
                    let mut ops: Vec<(Ref, u32)> = refs.iter().map(|&r| remap(r)).zip(counts.iter().copied()).collect();
                    ops.sort_unstable();
                    for (r, c) in ops {
                        out.nbr_ref.push(r);
                        out.nbr_count.push(c);
                    }
                    out.nbr_start.push(out.nbr_ref.len());
                }
                stages.push(out);
            }
            let last_map = maps.last().cloned().unwrap_or_default();
            let node_class = nodes.iter().map(|&v| last_map[lp.node_class[v] as usize]).collect();
            layers.push(LayerPlan {
                shape: lp.shape,
                num_inputs: input_map.iter().filter(|&&m| m != u32::MAX).count(),
                stages,
                node_class,
            });
            input_map = last_map;
        }
        Ok(Self { leaf, leaf_class, graph_offsets, layers })
    }
}

/// Kept old indices in ascending order and the old -> new map (`u32::MAX`
/// for dropped ones).
fn compact(total: usize, used: impl Iterator<Item = usize>) -> (Vec<usize>, Vec<u32>) {
    let mut map = vec![u32::MAX; total];
    for u in used {
        map[u] = 0;
    }
    let mut keep = Vec::new();
    for (old, slot) in map.iter_mut().enumerate() {
        if *slot != u32::MAX {
            *slot = keep.len() as u32;
            keep.push(old);
        }
    }
    (keep, map)
}

fn compile_neighborhood<T: Scalar>(graphs: &[&Graph<T>], offsets: &[usize], input: &[u32], num_inputs: usize) -> LayerPlan {
    let mut stage = Stage::new(None);
    let mut interner = Interner::new();
    let mut ops = Vec::new();
    let mut node_class = Vec::with_capacity(input.len());
    for (gi, g) in graphs.iter().enumerate() {
        let base = offsets[gi];
        for v in 0..g.n() {
            ops.clear();
            ops.extend(g.neighbors(v).iter().map(|&u| pack(0, input[base + u] as usize)));
            node_class.push(interner.intern(&mut stage, pack(0, input[base + v] as usize), &mut ops));
        }
    }
    LayerPlan { shape: LayerShape::Neighborhood, num_inputs, stages: vec![stage], node_class }
}

fn compile_khop<T: Scalar>(graphs: &[&Graph<T>], offsets: &[usize], input: &[u32], num_inputs: usize, k: usize) -> LayerPlan {
    let order = KHopLayer::stage_order(k);
    let mut stages: Vec<Stage> = order.iter().map(|&m| Stage::new(Some(m))).collect();
    let mut interners: Vec<Interner> = order.iter().map(|_| Interner::new()).collect();
    let mut node_class = Vec::with_capacity(input.len());
    let mut ball = Ball::new();
    let mut cur: Vec<Ref> = Vec::new();
    let mut ops = Vec::new();
    let mut fresh: Vec<(usize, Ref)> = Vec::new();

    for (gi, g) in graphs.iter().enumerate() {
        let base = offsets[gi];
        if cur.len() < g.n() {
            cur.resize(g.n(), 0);
        }
        for v in 0..g.n() {
            ball.explore(g, v, k);
            for &u in &ball.touched {
                cur[u] = pack(0, input[base + u] as usize);
            }
            for (s, key) in order.iter().enumerate() {
                let d = key.level;
                let want = match key.kind {
                    crate::khop::UpdateKind::Across => d + 1,
                    crate::khop::UpdateKind::Within => d,
                };
                fresh.clear();
                for &u in &ball.levels[d] {
                    ops.clear();
                    ops.extend(
                        g.neighbors(u).iter().filter(|&&w| ball.level[w] == want as u32 && want <= k).map(|&w| cur[w]),
                    );
                    if ops.is_empty() && d > 0 {
                        continue;
                    }
                    let id = interners[s].intern(&mut stages[s], cur[u], &mut ops);
                    fresh.push((u, pack(s + 1, id as usize)));
                }
                // assignment after the whole level keeps within updates
                // synchronous; across updates read the next level only
                for &(u, r) in &fresh {
                    cur[u] = r;
                }
            }
            let (_, id) = unpack(cur[v]);
            node_class.push(id as u32);
        }
    }
    LayerPlan { shape: LayerShape::KHop { k }, num_inputs, stages, node_class }
}

/// Parameters for one compiled layer.
#[derive(Clone, Copy, Debug)]
pub enum LayerParams<'a> {
    Gnn(&'a GnnLayer),
    KHop(&'a KHopLayer),
}

/// Distinct flat rows referenced by `stage` operands, and for every
/// (entry, operand) pair the position in that list.
fn operand_rows(stage: &Stage, flat: &dyn Fn(Ref) -> usize) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut pos: HashMap<usize, usize> = HashMap::new();
    let mut uniq = Vec::new();
    let mut occ_pos = Vec::with_capacity(stage.nbr_ref.len());
    let mut occ_dst = Vec::with_capacity(stage.nbr_ref.len());
    for e in 0..stage.len() {
        for &r in stage.operands(e).0 {
            let f = flat(r);
            let p = *pos.entry(f).or_insert_with(|| {
                uniq.push(f);
                uniq.len() - 1
            });
            occ_pos.push(p);
            occ_dst.push(e);
        }
    }
    (uniq, occ_pos, occ_dst)
}

fn apply_mlp<T: Scalar>(tape: &mut Tape<T>, store: &ParamStore<T>, mlp: &Mlp, x: Var) -> Result<Var> {
    mlp.forward(tape, store, x)
}

/// Records one compiled layer on the tape. `input` has one row per input
/// class; the result has one row per output class (before normalization).
pub fn run_layer<T: Scalar>(
    tape: &mut Tape<T>,
    store: &ParamStore<T>,
    params: LayerParams<'_>,
    lp: &LayerPlan,
    input: Var,
) -> Result<Var> {
    let hidden = tape.shape(input).1;
    match (params, lp.shape) {
        (LayerParams::Gnn(layer), LayerShape::Neighborhood) => {
            let stage = &lp.stages[0];
            let flat = |r: Ref| unpack(r).1;
            let (uniq, occ_pos, occ_dst) = operand_rows(stage, &flat);
            let selfs: Vec<usize> = stage.self_ref.iter().map(|&r| flat(r)).collect();
            match layer {
                GnnLayer::MeanMerge { mlp1, mlp2 } => {
                    let mut weights = Vec::with_capacity(occ_pos.len());
                    for e in 0..stage.len() {
                        let deg = T::from_u32(stage.degree(e)).unwrap();
                        weights.extend(stage.operands(e).1.iter().map(|&c| T::from_u32(c).unwrap() / deg));
                    }
                    let own = tape.gather(input, selfs)?;
                    let nb_in = tape.gather(input, uniq)?;
                    let nb = apply_mlp(tape, store, mlp1, nb_in)?;
                    let occ = tape.gather(nb, occ_pos)?;
                    let agg = tape.scatter_add(occ, occ_dst, Some(weights), stage.len())?;
                    let z = tape.add(own, agg)?;
                    apply_mlp(tape, store, mlp2, z)
                }
                GnnLayer::Integrated { mlp } => {
                    let m = apply_mlp(tape, store, mlp, input)?;
                    let mut rows = Vec::new();
                    let mut dst = Vec::new();
                    let mut weights = Vec::new();
                    for e in 0..stage.len() {
                        let scale = T::from_u32(stage.degree(e) + 1).unwrap();
                        rows.push(selfs[e]);
                        dst.push(e);
                        weights.push(T::one() / scale);
                        let (refs, counts) = stage.operands(e);
                        for (&r, &c) in refs.iter().zip(counts) {
                            rows.push(flat(r));
                            dst.push(e);
                            weights.push(T::from_u32(c).unwrap() / scale);
                        }
                    }
                    let occ = tape.gather(m, rows)?;
                    tape.scatter_add(occ, dst, Some(weights), stage.len())
                }
            }
        }
        (LayerParams::KHop(layer), LayerShape::KHop { k }) if k == layer.k => {
            let mut parts = vec![input];
            let mut starts = vec![0usize, tape.shape(input).0];
            for stage in &lp.stages {
                let key = stage.module.expect("k-hop stages carry their module");
                let module = layer.module(key).ok_or_else(|| Error::Config(format!("missing module {key}")))?;
                if stage.is_empty() {
                    let empty = tape.leaf(Matrix::zeros(0, hidden));
                    parts.push(empty);
                    starts.push(*starts.last().unwrap());
                    continue;
                }
                let src = if parts.len() == 1 { parts[0] } else { tape.concat(&parts)? };
                let flat = |r: Ref| {
                    let (s, i) = unpack(r);
                    starts[s] + i
                };
                let (uniq, occ_pos, occ_dst) = operand_rows(stage, &flat);
                let weights: Vec<T> = stage.nbr_count.iter().map(|&c| T::from_u32(c).unwrap()).collect();
                let selfs: Vec<usize> = stage.self_ref.iter().map(|&r| flat(r)).collect();
                let own_in = tape.gather(src, selfs)?;
                let own = apply_mlp(tape, store, &module.self_mlp, own_in)?;
                let z = if uniq.is_empty() {
                    own
                } else {
                    let nb_in = tape.gather(src, uniq)?;
                    let nb = apply_mlp(tape, store, &module.nbr, nb_in)?;
                    let occ = tape.gather(nb, occ_pos)?;
                    let agg = tape.scatter_add(occ, occ_dst, Some(weights), stage.len())?;
                    tape.add(own, agg)?
                };
                let out = apply_mlp(tape, store, &module.outer, z)?;
                let end = *starts.last().unwrap() + stage.len();
                parts.push(out);
                starts.push(end);
            }
            Ok(*parts.last().unwrap())
        }
        _ => Err(Error::Config("layer parameters do not match the compiled plan".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{cycle, disjoint_union, triangular_prism};

    #[test]
    fn neighborhood_plan_is_color_refinement() {
        // regular graphs collapse to one class
        let a = cycle::<f64>(6);
        let b = disjoint_union(&cycle(3), &cycle(3));
        let plan = Plan::compile(&[&a, &b], &[LayerShape::Neighborhood, LayerShape::Neighborhood]).unwrap();
        assert_eq!(plan.leaf.rows(), 1);
        assert_eq!(plan.layers[0].num_outputs(), 1);
        assert_eq!(plan.layers[1].num_outputs(), 1);
        let path = crate::graph::path::<f64>(5);
        let plan = Plan::compile(&[&path], &[LayerShape::Neighborhood; 3]).unwrap();
        let counts: Vec<usize> = plan.layers.iter().map(|l| l.num_outputs()).collect();
        assert_eq!(counts, vec![2, 3, 3]);
    }

    #[test]
    fn khop_plan_separates_triangles_from_hexagon() {
        let a = cycle::<f64>(6);
        let b = disjoint_union(&cycle(3), &cycle(3));
        let plan = Plan::compile(&[&a, &b], &[LayerShape::KHop { k: 2 }]).unwrap();
        let cls = plan.final_class();
        assert_ne!(cls[0], cls[6]);
        assert!(cls[..6].iter().all(|&c| c == cls[0]));
    }

    #[test]
    fn stage_sizes_on_prism() {
        let g = triangular_prism::<f64>();
        let plan = Plan::compile(&[&g], &[LayerShape::KHop { k: 1 }]).unwrap();
        // (1, within) then (0, across); vertex-transitive graph
        assert_eq!(plan.stats().stage_rows, vec![vec![1, 1]]);
    }

    #[test]
    fn restriction_keeps_only_needed_rows() {
        let a = cycle::<f64>(6);
        let b = crate::graph::path::<f64>(4);
        let plan = Plan::compile(&[&a, &b], &[LayerShape::KHop { k: 2 }]).unwrap();
        let sub = plan.restrict(&[0]).unwrap();
        assert_eq!(sub.num_nodes(), 6);
        assert_eq!(sub.num_final(), 1);
        let sub = plan.restrict(&[1]).unwrap();
        assert_eq!(sub.num_final(), 2);
        assert!(plan.restrict(&[2]).is_err());
    }
}
