//! Distinguishing-power checks: regular counterexample pairs, random-weight
//! audits of both model families, an exact injective multiset encoding, and
//! the ring-level structure behind odd-cycle detection.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::baseline::{GnnVariant, Readout};
use crate::graph::{
    complete_bipartite, cycle, disjoint_union, eccentricity, induced_khop_subgraph, is_bipartite, min_component_diameter,
    path, ring_decompose, same_level_edge_exists, shortest_odd_cycle_length, star, triangular_prism, components,
    Graph, GraphProperty,
};
use crate::model::{Architecture, Mode, Model, ModelConfig, Task};
use crate::nn::Matrix;
use crate::{Error, Result};

/// Two regular graphs of equal size and degree on which `property` differs.
#[derive(Clone, Debug)]
pub struct CounterexamplePair {
    pub name: String,
    pub property: GraphProperty,
    pub g_pos: Graph<f64>,
    pub g_neg: Graph<f64>,
}

impl CounterexamplePair {
    /// Checks the regular-matched precondition and the oracle disagreement.
    pub fn validate(&self) -> Result<()> {
        let (a, b) = (&self.g_pos, &self.g_neg);
        let (da, db) = (a.regular_degree(), b.regular_degree());
        if a.n() != b.n() || da.is_none() || da != db {
            return Err(Error::InvalidGraph(format!("{}: graphs are not regular-matched", self.name)));
        }
        if !self.property.holds(a) || self.property.holds(b) {
            return Err(Error::InvalidGraph(format!("{}: oracles do not separate the pair", self.name)));
        }
        Ok(())
    }
}

/// Hexagon vs two triangles (2-regular on 6 nodes) and `K_{3,3}` vs the
/// triangular prism (the only two 3-regular graphs on 6 nodes).
pub fn build_counterexamples() -> Vec<CounterexamplePair> {
    let hexagon = cycle::<f64>(6);
    let triangles = disjoint_union(&cycle(3), &cycle(3));
    let k33 = complete_bipartite::<f64>(3, 3);
    let prism = triangular_prism::<f64>();
    let pairs = vec![
        CounterexamplePair {
            name: "connectivity".into(),
            property: GraphProperty::Connectivity,
            g_pos: hexagon.clone(),
            g_neg: triangles.clone(),
        },
        CounterexamplePair {
            name: "bipartiteness".into(),
            property: GraphProperty::Bipartiteness,
            g_pos: k33.clone(),
            g_neg: prism.clone(),
        },
        CounterexamplePair {
            name: "triangle-freeness".into(),
            property: GraphProperty::TriangleFreeness,
            g_pos: k33,
            g_neg: prism,
        },
    ];
    for p in &pairs {
        p.validate().expect("built-in counterexamples are valid");
    }
    pairs
}

/// Path and star on four nodes: same size, not regular.
pub fn control_pair() -> (Graph<f64>, Graph<f64>) {
    (path(4), star(3))
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub pair: String,
    pub model: String,
    pub trials: usize,
    /// Largest node-embedding or readout difference over all trials.
    pub max_diff: f64,
    /// Smallest per-trial readout difference.
    pub min_readout_diff: f64,
    /// Fraction of trials whose readouts differ by more than the threshold.
    pub separation_rate: f64,
    /// Trials where all node embeddings and readouts agree within the
    /// threshold.
    pub indistinguishable: usize,
    /// Trials whose readouts agree within the threshold.
    pub identical_readouts: usize,
}

pub const AUDIT_THRESHOLD: f64 = 1e-6;

/// Node embeddings and sum readouts of both graphs under one random draw.
struct Draw {
    node_diff: f64,
    readout_diff: f64,
}

fn randomize_norms(model: &mut Model<f64>, rng: &mut ChaCha8Rng) {
    for bn in model.norms.clone() {
        for x in model.store.value_mut(bn.gamma).as_mut_slice() {
            *x = rng.gen_range(0.5..1.5);
        }
        for x in model.store.value_mut(bn.beta).as_mut_slice() {
            *x = rng.gen_range(-0.5..0.5);
        }
        for x in model.store.value_mut(bn.running_mean).as_mut_slice() {
            *x = rng.gen_range(-0.5..0.5);
        }
        for x in model.store.value_mut(bn.running_var).as_mut_slice() {
            *x = rng.gen_range(0.5..2.0);
        }
    }
}

fn max_row_spread(a: &Matrix<f64>, b: &Matrix<f64>) -> f64 {
    // every node of either graph against the first node of the first graph
    let mut worst = 0.0f64;
    let first = a.row(0);
    for m in [a, b] {
        for i in 0..m.rows() {
            for (x, y) in m.row(i).iter().zip(first) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    worst
}

fn draw(arch: Architecture, a: &Graph<f64>, b: &Graph<f64>, hidden: usize, rng: &mut ChaCha8Rng) -> Result<Draw> {
    let config = ModelConfig { arch, task: Task::Graph, input_dim: a.feature_dim(), hidden, classes: 2, readout: Readout::Sum };
    let mut model = Model::<f64>::new(config, rng)?;
    randomize_norms(&mut model, rng);
    let (hs, _) = model.reference_forward(&[a, b], Mode::Eval)?;
    let ra = hs[0].column_sums();
    let rb = hs[1].column_sums();
    let readout_diff = ra.iter().zip(&rb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(Draw { node_diff: max_row_spread(&hs[0], &hs[1]), readout_diff })
}

/// Runs `trials` random weight draws of `arch` on a pair. Embeddings come
/// from the direct per-node evaluation.
pub fn audit_pair(name: &str, a: &Graph<f64>, b: &Graph<f64>, arch: Architecture, trials: usize, seed: u64) -> Result<AuditReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AuditReport {
        pair: name.to_string(),
        model: arch.name(),
        trials,
        max_diff: 0.0,
        min_readout_diff: f64::INFINITY,
        separation_rate: 0.0,
        indistinguishable: 0,
        identical_readouts: 0,
    };
    let mut separated = 0;
    for _ in 0..trials {
        let d = draw(arch, a, b, 8, &mut rng)?;
        report.max_diff = report.max_diff.max(d.node_diff).max(d.readout_diff);
        report.min_readout_diff = report.min_readout_diff.min(d.readout_diff);
        if d.readout_diff > AUDIT_THRESHOLD {
            separated += 1;
        } else {
            report.identical_readouts += 1;
        }
        if d.node_diff < AUDIT_THRESHOLD && d.readout_diff < AUDIT_THRESHOLD {
            report.indistinguishable += 1;
        }
    }
    if trials > 0 {
        report.separation_rate = separated as f64 / trials as f64;
    }
    Ok(report)
}

/// Baseline audit of a counterexample pair: one report per depth in
/// `{2, 3}`.
pub fn audit_baseline_indistinguishability(pair: &CounterexamplePair, trials: usize, seed: u64) -> Result<Vec<AuditReport>> {
    pair.validate()?;
    [2, 3]
        .iter()
        .map(|&layers| {
            let arch = Architecture::Gnn { layers, variant: GnnVariant::MeanMerge };
            audit_pair(&pair.name, &pair.g_pos, &pair.g_neg, arch, trials, seed ^ layers as u64)
        })
        .collect()
}

/// k-hop audit of a counterexample pair.
pub fn audit_khop_separation(pair: &CounterexamplePair, k: usize, trials: usize, seed: u64) -> Result<AuditReport> {
    pair.validate()?;
    audit_pair(&pair.name, &pair.g_pos, &pair.g_neg, Architecture::KHop { k, layers: 1 }, trials, seed)
}

// ---------------------------------------------------------------------------
// Injective multiset encoding

/// `h_i(c, X) = Z(c) + (r - i)|A| + sum_{x in X} N^(-Z(x))` over an alphabet
/// `A` with an injective `Z: A -> {1, 2, ...}` and multisets of size `< N`.
#[derive(Clone, Debug)]
pub struct MultisetEncoder<E> {
    z: HashMap<E, u32>,
    bound: usize,
    r: usize,
}

impl<E: Clone + Eq + std::hash::Hash + fmt::Debug> MultisetEncoder<E> {
    /// `Z` numbers the alphabet 1, 2, ... in the given order.
    pub fn new(alphabet: &[E], bound: usize, r: usize) -> Result<Self> {
        let mut z = HashMap::new();
        for (i, e) in alphabet.iter().enumerate() {
            if z.insert(e.clone(), i as u32 + 1).is_some() {
                return Err(Error::Config(format!("duplicate alphabet element {e:?}")));
            }
        }
        if bound == 0 {
            return Err(Error::Config("multiset size bound must be positive".into()));
        }
        Ok(Self { z, bound, r })
    }

    pub fn alphabet_size(&self) -> usize {
        self.z.len()
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn radius(&self) -> usize {
        self.r
    }

    fn code(&self, e: &E) -> Result<u32> {
        self.z.get(e).copied().ok_or_else(|| Error::UnknownElement(format!("{e:?}")))
    }

    /// Evaluates `h_i(c, X)` in the field `F`.
    pub fn encode_in<F>(&self, i: usize, c: &E, xs: &[E]) -> Result<F>
    where
        F: Clone + Zero + One + FromPrimitive + std::ops::Add<Output = F> + std::ops::Div<Output = F> + std::ops::Mul<Output = F>,
    {
        if i > self.r {
            return Err(Error::Config(format!("level {i} exceeds r = {}", self.r)));
        }
        if xs.len() >= self.bound {
            return Err(Error::MultisetTooLarge { size: xs.len(), bound: self.bound });
        }
        let int = self.code(c)? as u64 + ((self.r - i) * self.z.len()) as u64;
        let mut value = F::from_u64(int).expect("integer part representable");
        let n = F::from_usize(self.bound).expect("bound representable");
        for x in xs {
            let mut p = F::one();
            for _ in 0..self.code(x)? {
                p = p * n.clone();
            }
            value = value + F::one() / p;
        }
        Ok(value)
    }

    /// Exact value.
    pub fn encode(&self, i: usize, c: &E, xs: &[E]) -> Result<BigRational> {
        self.encode_in(i, c, xs)
    }
}

/// Exact encoding of `(i, c, X)`.
pub fn encode_multiset<E: Clone + Eq + std::hash::Hash + fmt::Debug>(
    enc: &MultisetEncoder<E>,
    i: usize,
    c: &E,
    xs: &[E],
) -> Result<BigRational> {
    enc.encode(i, c, xs)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct InjectivityReport {
    pub configurations: usize,
    pub inputs: usize,
    pub collisions: usize,
    pub float_collisions: usize,
}

/// Multisets of size `< bound` over symbols `0..alphabet`, as sorted lists.
fn multisets(alphabet: usize, bound: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 1..bound {
        let mut next = Vec::new();
        for m in &frontier {
            let from = m.last().copied().unwrap_or(0);
            for s in from..alphabet {
                let mut m2: Vec<usize> = m.clone();
                m2.push(s);
                next.push(m2);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Encodes every `(i, c, X)` for each configuration with alphabet size
/// `<= max_alphabet`, `N <= max_bound`, `r <= max_r` and counts exact
/// collisions (distinct inputs with equal codes). The same inputs are also
/// encoded in `f64` and float collisions are counted for comparison.
pub fn lemma2_exhaustive(max_alphabet: usize, max_bound: usize, max_r: usize) -> Result<InjectivityReport> {
    let mut report = InjectivityReport::default();
    for a in 1..=max_alphabet {
        let alphabet: Vec<usize> = (0..a).collect();
        for bound in 1..=max_bound {
            let sets = multisets(a, bound);
            for r in 0..=max_r {
                let enc = MultisetEncoder::new(&alphabet, bound, r)?;
                report.configurations += 1;
                let mut exact: HashMap<BigRational, usize> = HashMap::new();
                let mut float: HashMap<u64, usize> = HashMap::new();
                for i in 0..=r {
                    for c in &alphabet {
                        for xs in &sets {
                            report.inputs += 1;
                            *exact.entry(enc.encode(i, c, xs)?).or_default() += 1;
                            *float.entry(enc.encode_in::<f64>(i, c, xs)?.to_bits()).or_default() += 1;
                        }
                    }
                }
                report.collisions += exact.values().map(|&c| c - 1).sum::<usize>();
                report.float_collisions += float.values().map(|&c| c - 1).sum::<usize>();
            }
        }
    }
    Ok(report)
}

/// Exact `p / q`.
pub fn rational(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

// ---------------------------------------------------------------------------
// Ring-level structure

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RingWitness {
    pub root: usize,
    pub k: usize,
    /// Sizes of `R_0 .. R_k`, including trailing empty rings.
    pub ring_sizes: Vec<usize>,
    /// Same-level edges `(level, u, w)` with `u < w`.
    pub same_level_edges: Vec<(usize, usize, usize)>,
    /// First `i` with `R_i` empty, if any within `0..=k`.
    pub first_empty_ring: Option<usize>,
    pub eccentricity: usize,
    pub component_diameter: usize,
    pub min_component_diameter: Option<usize>,
    pub shortest_odd_cycle: Option<usize>,
    pub khop_subgraph_bipartite: bool,
}

/// Structural facts about the k-hop neighborhood of `v` that decide the
/// three properties.
pub fn ring_level_witness(g: &Graph<f64>, v: usize, k: usize) -> Result<RingWitness> {
    let rd = ring_decompose(g, v, k)?;
    let ring_sizes: Vec<usize> = (0..=k).map(|d| rd.level_members(d).len()).collect();
    let mut same_level_edges = Vec::new();
    for m in rd.members() {
        for &w in &m.within {
            if m.node < w {
                same_level_edges.push((m.level, m.node, w));
            }
        }
    }
    let comp = components(g).into_iter().find(|c| c.contains(&v)).unwrap_or_default();
    let sub = crate::graph::induced_subgraph(g, &comp)?;
    let component_diameter = (0..sub.n()).map(|u| eccentricity(&sub, u)).max().unwrap_or(0);
    Ok(RingWitness {
        root: v,
        k,
        first_empty_ring: ring_sizes.iter().position(|&s| s == 0),
        ring_sizes,
        same_level_edges,
        eccentricity: eccentricity(g, v),
        component_diameter,
        min_component_diameter: min_component_diameter(g),
        shortest_odd_cycle: shortest_odd_cycle_length(g),
        khop_subgraph_bipartite: is_bipartite(&induced_khop_subgraph(g, v, k)?),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RootCoverage {
    /// Every node of every graph.
    All,
    /// Node 0 only. Since all labelings are enumerated, swapping the labels
    /// of `v` and `0` maps each rooted graph `(G, v)` onto an enumerated
    /// `(G', 0)` with isomorphic rings and k-hop subgraph, so this covers the
    /// same rooted isomorphism classes at a fraction of the cost.
    First,
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma3Report {
    pub max_nodes: usize,
    pub roots: RootCoverage,
    pub graphs: usize,
    pub cases: usize,
    pub disagreements: usize,
}

/// Every connected labeled graph on `1..=max_nodes` nodes and every `k` in
/// `1..n` (larger radii give the same neighborhood): compares "some node has
/// a same-level neighbor" with "the k-hop subgraph is not bipartite".
pub fn lemma3_exhaustive(max_nodes: usize, roots: RootCoverage) -> Result<Lemma3Report> {
    let mut report = Lemma3Report { max_nodes, roots, graphs: 0, cases: 0, disagreements: 0 };
    for n in 1..=max_nodes {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |w| (u, w))).collect();
        let root_count = match roots {
            RootCoverage::All => n,
            RootCoverage::First => 1,
        };
        let mut edges = Vec::with_capacity(pairs.len());
        for mask in 0u64..(1u64 << pairs.len()) {
            edges.clear();
            edges.extend(pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p));
            if !edges_connected(n, &edges) {
                continue;
            }
            let g = Graph::<f64>::from_edges(n, &edges)?;
            report.graphs += 1;
            for v in 0..root_count {
                for k in 1..n.max(2) {
                    report.cases += 1;
                    if !lemma3_holds(&g, v, k)? {
                        report.disagreements += 1;
                    }
                }
            }
        }
    }
    Ok(report)
}

/// `same_level_edge_exists(ring_decompose(g, v, k)) == !is_bipartite(G_v^k)`.
pub fn lemma3_holds(g: &Graph<f64>, v: usize, k: usize) -> Result<bool> {
    let rd = ring_decompose(g, v, k)?;
    Ok(same_level_edge_exists(&rd) == !is_bipartite(&induced_khop_subgraph(g, v, k)?))
}

fn edges_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let mut parts = n;
    for &(u, w) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, w));
        if a != b {
            parent[a] = b;
            parts -= 1;
        }
    }
    parts <= 1
}
