//! Node-role benchmark: a ring with small shapes hanging off it.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::{Error, Result};

pub const CYCLE_LEN: usize = 40;
pub const INSTANCES: usize = 10;
pub const PERTURB_FRACTION: f64 = 0.10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    House,
    Fan,
    Star,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 3] = [ShapeKind::House, ShapeKind::Fan, ShapeKind::Star];

    pub fn template(self) -> ShapeTemplate {
        match self {
            // square 0-1-2-3 with roof 4 over the edge 0-1, hung from the roof
            ShapeKind::House => ShapeTemplate {
                kind: self,
                n: 5,
                edges: vec![(0, 1), (1, 2), (2, 3), (3, 0), (4, 0), (4, 1)],
                anchor: 4,
            },
            // hub 0 joined to every node of the path 1-2-3-4-5
            ShapeKind::Fan => ShapeTemplate {
                kind: self,
                n: 6,
                edges: vec![(1, 2), (2, 3), (3, 4), (4, 5), (0, 1), (0, 2), (0, 3), (0, 4), (0, 5)],
                anchor: 0,
            },
            ShapeKind::Star => ShapeTemplate {
                kind: self,
                n: 6,
                edges: vec![(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)],
                anchor: 0,
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::House => "house",
            ShapeKind::Fan => "fan",
            ShapeKind::Star => "star",
        }
    }
}

/// Small graph attached to the ring by one edge from `anchor`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapeTemplate {
    pub kind: ShapeKind,
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub anchor: usize,
}

impl ShapeTemplate {
    pub fn graph(&self) -> Graph<f64> {
        Graph::from_edges(self.n, &self.edges).expect("templates are simple graphs")
    }

    /// Orbits of the automorphisms that fix the anchor, by exhaustive search
    /// over permutations. Orbit `j` contains the smallest node not in orbits
    /// `0..j`; the result maps node -> orbit index.
    pub fn orbits(&self) -> Vec<usize> {
        let g = self.graph();
        let mut orbit_of: Vec<usize> = (0..self.n).collect();
        let mut perm: Vec<usize> = (0..self.n).collect();
        permutations(&mut perm, 0, &mut |p| {
            if p[self.anchor] == self.anchor && g.edges().all(|(u, v)| g.has_edge(p[u], p[v])) {
                for v in 0..self.n {
                    // union the orbit representatives
                    let (a, b) = (find(&mut orbit_of, v), find(&mut orbit_of, p[v]));
                    if a != b {
                        orbit_of[a.max(b)] = a.min(b);
                    }
                }
            }
        });
        let roots: Vec<usize> = (0..self.n).map(|v| find(&mut orbit_of, v)).collect();
        let mut ids: Vec<usize> = roots.clone();
        ids.sort_unstable();
        ids.dedup();
        roots.iter().map(|r| ids.binary_search(r).unwrap()).collect()
    }

    pub fn num_orbits(&self) -> usize {
        self.orbits().iter().max().map_or(0, |m| m + 1)
    }
}

fn find(p: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while p[r] != r {
        r = p[r];
    }
    p[x] = r;
    r
}

fn permutations(p: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, f);
        p.swap(k, i);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeConfig {
    Basic,
    BasicPerturbed,
    Varied,
    VariedPerturbed,
}

impl ShapeConfig {
    pub const ALL: [ShapeConfig; 4] =
        [ShapeConfig::Basic, ShapeConfig::BasicPerturbed, ShapeConfig::Varied, ShapeConfig::VariedPerturbed];

    pub fn varied(self) -> bool {
        matches!(self, ShapeConfig::Varied | ShapeConfig::VariedPerturbed)
    }

    pub fn perturbed(self) -> bool {
        matches!(self, ShapeConfig::BasicPerturbed | ShapeConfig::VariedPerturbed)
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeConfig::Basic => "basic",
            ShapeConfig::BasicPerturbed => "basic-perturbed",
            ShapeConfig::Varied => "varied",
            ShapeConfig::VariedPerturbed => "varied-perturbed",
        }
    }
}

impl fmt::Display for ShapeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeConfig {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown shape configuration {s:?}")))
    }
}

/// One generated role-classification graph.
#[derive(Clone, Debug)]
pub struct SyntheticNodeDataset {
    /// Degree features; node labels hold the role classes.
    pub graph: Graph<f64>,
    pub roles: Vec<usize>,
    pub num_classes: usize,
    /// Human-readable role names, indexed by class.
    pub class_names: Vec<String>,
    pub config: ShapeConfig,
    pub seed: u64,
    /// Kind and first node of every attached instance.
    pub instances: Vec<(ShapeKind, usize, usize)>,
    /// Edge count before perturbation.
    pub base_edges: usize,
}

/// Builds the ring of 40 nodes with attached shapes and role labels.
///
/// Roles: plain ring node (0), ring node carrying a shape (1), then one class
/// per anchor-fixing orbit of each shape kind present, kinds in
/// house/fan/star order.
pub fn gen_shape_cycle(config: ShapeConfig, seed: u64) -> Result<SyntheticNodeDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds: Vec<ShapeKind> = if config.varied() {
        let mut ks: Vec<ShapeKind> = ShapeKind::ALL.iter().flat_map(|&k| std::iter::repeat_n(k, INSTANCES)).collect();
        ks.shuffle(&mut rng);
        ks
    } else {
        vec![*ShapeKind::ALL.choose(&mut rng).unwrap(); INSTANCES]
    };
    let present: Vec<ShapeKind> = ShapeKind::ALL.iter().copied().filter(|k| kinds.contains(k)).collect();
    let mut class_names = vec!["ring".to_string(), "ring-anchor".to_string()];
    let mut orbit_base = Vec::new();
    for &k in &present {
        orbit_base.push((k, class_names.len()));
        let t = k.template();
        for o in 0..t.num_orbits() {
            class_names.push(format!("{}-{o}", k.name()));
        }
    }

    let positions = placements(kinds.len(), config.varied(), &mut rng);
    let mut edges: Vec<(usize, usize)> = (0..CYCLE_LEN).map(|i| (i, (i + 1) % CYCLE_LEN)).collect();
    let mut roles = vec![0usize; CYCLE_LEN];
    let mut instances = Vec::new();
    let mut next = CYCLE_LEN;
    for (&kind, &pos) in kinds.iter().zip(&positions) {
        let t = kind.template();
        let orbits = t.orbits();
        let base = orbit_base.iter().find(|(k, _)| *k == kind).unwrap().1;
        for &(u, v) in &t.edges {
            edges.push((next + u, next + v));
        }
        edges.push((pos, next + t.anchor));
        roles[pos] = 1;
        roles.extend(orbits.iter().map(|o| base + o));
        instances.push((kind, pos, next));
        next += t.n;
    }
    let n = next;
    let base_edges = edges.len();
    if config.perturbed() {
        let extra = (PERTURB_FRACTION * base_edges as f64).round() as usize;
        add_random_edges(n, &mut edges, extra, &mut rng)?;
    }
    let graph = Graph::from_edges(n, &edges)?.with_degree_features().with_node_labels(roles.clone())?;
    Ok(SyntheticNodeDataset { graph, num_classes: class_names.len(), roles, class_names, config, seed, instances, base_edges })
}

/// Evenly spaced ring positions; in varied layouts each position moves by
/// -1, 0 or +1 when the target is still free.
fn placements<R: Rng>(count: usize, jitter: bool, rng: &mut R) -> Vec<usize> {
    let mut pos: Vec<usize> =
        (0..count).map(|i| ((i as f64 * CYCLE_LEN as f64 / count as f64).round() as usize) % CYCLE_LEN).collect();
    if jitter {
        let mut taken = [false; CYCLE_LEN];
        pos.iter().for_each(|&p| taken[p] = true);
        for p in pos.iter_mut() {
            let shift: i64 = rng.gen_range(-1..=1);
            let target = (*p as i64 + shift).rem_euclid(CYCLE_LEN as i64) as usize;
            if !taken[target] {
                taken[*p] = false;
                taken[target] = true;
                *p = target;
            }
        }
    }
    pos
}

/// Adds `extra` edges drawn uniformly from the absent non-loop pairs.
pub fn add_random_edges<R: Rng>(n: usize, edges: &mut Vec<(usize, usize)>, extra: usize, rng: &mut R) -> Result<()> {
    let mut present: std::collections::HashSet<(usize, usize)> =
        edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
    let mut absent: Vec<(usize, usize)> =
        (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).filter(|p| !present.contains(p)).collect();
    if extra > absent.len() {
        return Err(Error::Infeasible { n, d: extra });
    }
    let (chosen, _) = absent.partial_shuffle(rng, extra);
    for &mut p in chosen {
        present.insert(p);
        edges.push(p);
    }
    Ok(())
}
