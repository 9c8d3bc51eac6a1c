//! Undirected simple graphs with node features, plus traversal, ring
//! decomposition of k-hop neighborhoods, exact property oracles and
//! random generators.

mod generate;
mod properties;
mod rings;

pub use generate::{
    complete, complete_bipartite, cycle, disjoint_union, gnp, path, random_bipartite_regular,
    random_permutation, random_regular, star, triangular_prism,
};
pub use properties::{
    components, eccentricity, is_bipartite, is_connected, is_triangle_free,
    min_component_diameter, shortest_odd_cycle_length, shortest_path_lengths, triangle_count,
    GraphProperty, PropertyLabel,
};
pub use rings::{induced_khop_subgraph, induced_subgraph, ring_decompose, same_level_edge_exists, RingDecomposition, RingMember};

use std::fmt::Write as _;

use crate::nn::Matrix;
use crate::{Error, Result, Scalar};

/// Immutable undirected graph in compressed sorted-neighbor form.
///
/// Neighbor lists are sorted ascending and there are no self-loops or
/// duplicate edges. `features` always has exactly `n` rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph<T = f64> {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    features: Matrix<T>,
    node_labels: Option<Vec<usize>>,
    graph_label: Option<usize>,
}

impl<T: Scalar> Graph<T> {
    /// Builds a graph from an undirected edge list. Each unordered pair may
    /// appear once, in either orientation. Node features default to a single
    /// constant column of ones.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidNode { node: u.max(v), n });
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidGraph(format!("duplicate edge at node {u}")));
            }
        }
        Ok(Self::from_sorted_adjacency(adj))
    }

    /// `adj` must already be symmetric, sorted, loop-free and duplicate-free.
    pub(crate) fn from_sorted_adjacency(adj: Vec<Vec<usize>>) -> Self {
        let n = adj.len();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut targets = Vec::with_capacity(adj.iter().map(Vec::len).sum());
        for list in adj {
            targets.extend_from_slice(&list);
            offsets.push(targets.len());
        }
        Self { offsets, targets, features: Matrix::filled(n, 1, T::one()), node_labels: None, graph_label: None }
    }

    pub fn with_features(mut self, features: Matrix<T>) -> Result<Self> {
        if features.rows() != self.n() {
            return Err(Error::Shape(format!(
                "feature matrix has {} rows for {} nodes",
                features.rows(),
                self.n()
            )));
        }
        self.features = features;
        Ok(self)
    }

    pub fn with_node_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::Shape(format!("{} node labels for {} nodes", labels.len(), self.n())));
        }
        self.node_labels = Some(labels);
        Ok(self)
    }

    pub fn with_graph_label(mut self, label: usize) -> Self {
        self.graph_label = Some(label);
        self
    }

    /// One feature column holding each node's degree.
    pub fn with_degree_features(self) -> Self {
        let degs: Vec<T> = (0..self.n()).map(|v| T::from_usize(self.degree(v)).unwrap()).collect();
        let n = self.n();
        self.with_features(Matrix::from_vec(n, 1, degs)).expect("row count matches")
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn m(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && v < self.n() && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u).iter().copied().filter(move |&v| u < v).map(move |v| (u, v))
        })
    }

    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn node_labels(&self) -> Option<&[usize]> {
        self.node_labels.as_deref()
    }

    pub fn graph_label(&self) -> Option<usize> {
        self.graph_label
    }

    /// Common degree if the graph is regular. The empty graph is not regular.
    pub fn regular_degree(&self) -> Option<usize> {
        if self.n() == 0 {
            return None;
        }
        let d = self.degree(0);
        (0..self.n()).all(|v| self.degree(v) == d).then_some(d)
    }

    pub fn check_node(&self, v: usize) -> Result<()> {
        if v < self.n() {
            Ok(())
        } else {
            Err(Error::InvalidNode { node: v, n: self.n() })
        }
    }

    /// Relabels nodes so that old node `v` becomes `perm[v]`. Features and
    /// node labels move with their nodes.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        if perm.len() != n {
            return Err(Error::NotAPermutation(n));
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::NotAPermutation(n));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for v in 0..n {
            let mut list: Vec<usize> = self.neighbors(v).iter().map(|&u| perm[u]).collect();
            list.sort_unstable();
            adj[perm[v]] = list;
        }
        let mut features = Matrix::zeros(n, self.feature_dim());
        for v in 0..n {
            features.row_mut(perm[v]).copy_from_slice(self.features.row(v));
        }
        let node_labels = self.node_labels.as_ref().map(|labels| {
            let mut out = vec![0; n];
            for v in 0..n {
                out[perm[v]] = labels[v];
            }
            out
        });
        let mut g = Self::from_sorted_adjacency(adj);
        g.features = features;
        g.node_labels = node_labels;
        g.graph_label = self.graph_label;
        Ok(g)
    }

    /// Same structure and labels with features converted to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Graph<U> {
        Graph {
            offsets: self.offsets.clone(),
            targets: self.targets.clone(),
            features: self.features.cast(),
            node_labels: self.node_labels.clone(),
            graph_label: self.graph_label,
        }
    }

    /// Debug edge-list text: one `u v` pair per line, 0-indexed.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for (u, v) in self.edges() {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }

    /// Parses the debug edge-list format. Without `n`, the node count is one
    /// more than the largest id mentioned. Blank lines and `#` comments are
    /// skipped.
    pub fn from_edge_list(text: &str, n: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse = |tok: Option<&str>| -> Result<usize> {
                tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse {
                    file: "edge list".into(),
                    line: i + 1,
                    msg: format!("expected `u v`, got {line:?}"),
                })
            };
            let mut toks = line.split_whitespace();
            let (u, v) = (parse(toks.next())?, parse(toks.next())?);
            if toks.next().is_some() {
                return Err(Error::Parse { file: "edge list".into(), line: i + 1, msg: "trailing tokens".into() });
            }
            edges.push((u, v));
        }
        let n = n.unwrap_or_else(|| edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0));
        Self::from_edges(n, &edges)
    }
}

/// Relabels `g` by `perm` (old node `v` becomes `perm[v]`).
pub fn permute_graph<T: Scalar>(g: &Graph<T>, perm: &[usize]) -> Result<Graph<T>> {
    g.permute(perm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_loops_duplicates_and_bad_ids() {
        assert!(Graph::<f64>::from_edges(3, &[(0, 0)]).is_err());
        assert!(Graph::<f64>::from_edges(3, &[(0, 1), (1, 0)]).is_err());
        assert!(matches!(Graph::<f64>::from_edges(3, &[(0, 3)]), Err(Error::InvalidNode { .. })));
    }

    #[test]
    fn adjacency_is_symmetric_and_sorted() {
        let g = Graph::<f64>::from_edges(4, &[(2, 0), (0, 1), (3, 0)]).unwrap();
        assert_eq!(g.neighbors(0), &[1, 2, 3]);
        assert_eq!(g.neighbors(3), &[0]);
        assert_eq!(g.m(), 3);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (0, 3)]);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = cycle::<f64>(6);
        let text = g.to_edge_list();
        assert_eq!(text.lines().count(), 6);
        assert_eq!(Graph::<f64>::from_edge_list(&text, None).unwrap(), g);
        assert!(Graph::<f64>::from_edge_list("0 1 2\n", None).is_err());
        assert!(Graph::<f64>::from_edge_list("0 x\n", None).is_err());
    }

    #[test]
    fn identity_permutation_is_equal() {
        let g = triangular_prism::<f64>();
        let id: Vec<usize> = (0..g.n()).collect();
        assert_eq!(g.permute(&id).unwrap(), g);
    }

    #[test]
    fn reversal_of_c6_is_a_cycle() {
        let g = cycle::<f64>(6);
        let rev: Vec<usize> = (0..6).rev().collect();
        let p = permute_graph(&g, &rev).unwrap();
        assert_eq!(p.regular_degree(), Some(2));
        assert!(is_connected(&p));
        assert_eq!(p, g);
    }

    #[test]
    fn non_bijective_permutation_rejected() {
        let g = cycle::<f64>(4);
        assert!(matches!(g.permute(&[0, 0, 1, 2]), Err(Error::NotAPermutation(4))));
        assert!(g.permute(&[0, 1, 2]).is_err());
        assert!(g.permute(&[0, 1, 2, 4]).is_err());
    }

    #[test]
    fn permutation_moves_features_and_labels() {
        let g = path::<f64>(3)
            .with_features(Matrix::from_vec(3, 1, vec![10.0, 20.0, 30.0]))
            .unwrap()
            .with_node_labels(vec![7, 8, 9])
            .unwrap();
        let p = g.permute(&[2, 0, 1]).unwrap();
        assert_eq!(p.features().as_slice(), &[20.0, 30.0, 10.0]);
        assert_eq!(p.node_labels().unwrap(), &[8, 9, 7]);
        // old 1 (middle of the path) is new 0
        assert_eq!(p.degree(0), 2);
    }
}
