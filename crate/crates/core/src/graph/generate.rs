use rand::seq::SliceRandom;
use rand::Rng;

use super::Graph;
use crate::nn::Matrix;
use crate::{Error, Result, Scalar};

const PAIRING_ATTEMPTS: usize = 200_000;

pub fn cycle<T: Scalar>(n: usize) -> Graph<T> {
    let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Graph::from_edges(n, &edges).expect("cycle needs n >= 3")
}

pub fn path<T: Scalar>(n: usize) -> Graph<T> {
    let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
    Graph::from_edges(n, &edges).unwrap()
}

pub fn complete<T: Scalar>(n: usize) -> Graph<T> {
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    Graph::from_edges(n, &edges).unwrap()
}

/// Hub `0` with `leaves` pendant nodes.
pub fn star<T: Scalar>(leaves: usize) -> Graph<T> {
    let edges: Vec<(usize, usize)> = (1..=leaves).map(|v| (0, v)).collect();
    Graph::from_edges(leaves + 1, &edges).unwrap()
}

/// Parts `0..a` and `a..a+b`.
pub fn complete_bipartite<T: Scalar>(a: usize, b: usize) -> Graph<T> {
    let edges: Vec<(usize, usize)> = (0..a).flat_map(|u| (a..a + b).map(move |v| (u, v))).collect();
    Graph::from_edges(a + b, &edges).unwrap()
}

/// Two triangles `0,1,2` and `3,4,5` joined by the matching `i -- i+3`.
pub fn triangular_prism<T: Scalar>() -> Graph<T> {
    Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 5)]).unwrap()
}

/// `a` on nodes `0..a.n()`, `b` shifted after it. Node labels survive only
/// if both graphs carry them; the graph label is dropped.
pub fn disjoint_union<T: Scalar>(a: &Graph<T>, b: &Graph<T>) -> Graph<T> {
    assert_eq!(a.feature_dim(), b.feature_dim(), "feature dims differ");
    let off = a.n();
    let mut adj: Vec<Vec<usize>> = (0..a.n()).map(|v| a.neighbors(v).to_vec()).collect();
    adj.extend((0..b.n()).map(|v| b.neighbors(v).iter().map(|&u| u + off).collect()));
    let mut data = a.features().as_slice().to_vec();
    data.extend_from_slice(b.features().as_slice());
    let g = Graph::from_sorted_adjacency(adj)
        .with_features(Matrix::from_vec(a.n() + b.n(), a.feature_dim(), data))
        .unwrap();
    match (a.node_labels(), b.node_labels()) {
        (Some(la), Some(lb)) => g.with_node_labels(la.iter().chain(lb).copied().collect()).unwrap(),
        _ => g,
    }
}

pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Erdős–Rényi `G(n, p)`.
pub fn gnp<T: Scalar, R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph<T> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

/// Uniform random simple `d`-regular graph on `n` nodes from the pairing
/// (configuration) model, rejecting any pairing that creates a self-loop or a
/// repeated edge. Pairings are drawn one pair at a time so a rejection aborts
/// early; accepted graphs are still uniform over simple graphs.
pub fn random_regular<T: Scalar, R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Graph<T>> {
    if d >= n || (n * d) % 2 == 1 {
        return Err(Error::Infeasible { n, d });
    }
    let mut points: Vec<usize> = (0..n * d).map(|p| p / d).collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(d); n];
    'attempt: for _ in 0..PAIRING_ATTEMPTS {
        adj.iter_mut().for_each(Vec::clear);
        let total = points.len();
        let mut i = 0;
        while i < total {
            let j = rng.gen_range(i..total);
            points.swap(i, j);
            let j = rng.gen_range(i + 1..total);
            points.swap(i + 1, j);
            let (u, v) = (points[i], points[i + 1]);
            if u == v || adj[u].contains(&v) {
                continue 'attempt;
            }
            adj[u].push(v);
            adj[v].push(u);
            i += 2;
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        return Ok(Graph::from_sorted_adjacency(adj));
    }
    Err(Error::BudgetExhausted { attempts: PAIRING_ATTEMPTS, what: format!("simple {d}-regular graph on {n} nodes") })
}

/// Uniform random simple `d`-regular bipartite graph with parts `0..half`
/// and `half..2*half`, from the bipartite pairing model with rejection of
/// repeated edges.
pub fn random_bipartite_regular<T: Scalar, R: Rng + ?Sized>(half: usize, d: usize, rng: &mut R) -> Result<Graph<T>> {
    if d > half || half == 0 {
        return Err(Error::Infeasible { n: 2 * half, d });
    }
    let n = 2 * half;
    let mut right: Vec<usize> = (0..half * d).map(|p| half + p / d).collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(d); n];
    'attempt: for _ in 0..PAIRING_ATTEMPTS {
        adj.iter_mut().for_each(Vec::clear);
        let total = right.len();
        for i in 0..total {
            let j = rng.gen_range(i..total);
            right.swap(i, j);
            let (u, v) = (i / d, right[i]);
            if adj[u].contains(&v) {
                continue 'attempt;
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        return Ok(Graph::from_sorted_adjacency(adj));
    }
    Err(Error::BudgetExhausted { attempts: PAIRING_ATTEMPTS, what: format!("simple {d}-regular bipartite graph on {n} nodes") })
}
