use std::collections::HashMap;

use super::Graph;
use crate::{Error, Result, Scalar};

/// One node of a k-hop neighborhood together with its level and its
/// across (`B`) and within (`D`) neighbor sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingMember {
    pub node: usize,
    pub level: usize,
    /// Neighbors one level farther from the root.
    pub across: Vec<usize>,
    /// Neighbors on the same level.
    pub within: Vec<usize>,
}

/// BFS rings `R_0(v) = {v}, R_1(v), ..., R_k(v)` of a root, with trailing
/// empty rings dropped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingDecomposition {
    root: usize,
    k: usize,
    members: Vec<RingMember>,
    level_starts: Vec<usize>,
    /// Member position per node id, `usize::MAX` outside the neighborhood.
    index: Vec<usize>,
}

impl RingDecomposition {
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn radius(&self) -> usize {
        self.k
    }

    /// Number of non-empty levels, including level 0.
    pub fn depth(&self) -> usize {
        self.level_starts.len() - 1
    }

    /// Members of level `d`, sorted by node id. Empty past the last level.
    pub fn level_members(&self, d: usize) -> &[RingMember] {
        if d >= self.depth() {
            return &[];
        }
        &self.members[self.level_starts[d]..self.level_starts[d + 1]]
    }

    /// Node ids at level `d`, ascending.
    pub fn level(&self, d: usize) -> Vec<usize> {
        self.level_members(d).iter().map(|m| m.node).collect()
    }

    pub fn levels(&self) -> Vec<Vec<usize>> {
        (0..self.depth()).map(|d| self.level(d)).collect()
    }

    /// All members, ordered by level and then node id.
    pub fn members(&self) -> &[RingMember] {
        &self.members
    }

    pub fn member(&self, node: usize) -> Option<&RingMember> {
        match self.index.get(node) {
            Some(&i) if i != usize::MAX => Some(&self.members[i]),
            _ => None,
        }
    }

    pub fn level_of(&self, node: usize) -> Option<usize> {
        self.member(node).map(|m| m.level)
    }

    pub fn across(&self, node: usize) -> &[usize] {
        self.member(node).map_or(&[], |m| &m.across)
    }

    pub fn within(&self, node: usize) -> &[usize] {
        self.member(node).map_or(&[], |m| &m.within)
    }

    /// `N_k(v) ∪ {v}` in ascending id order.
    pub fn nodes_sorted(&self) -> Vec<usize> {
        let mut nodes: Vec<usize> = self.members.iter().map(|m| m.node).collect();
        nodes.sort_unstable();
        nodes
    }
}

/// Depth-limited BFS from `root` producing the ring decomposition of its
/// k-hop neighborhood.
pub fn ring_decompose<T: Scalar>(g: &Graph<T>, root: usize, k: usize) -> Result<RingDecomposition> {
    g.check_node(root)?;
    if k == 0 {
        return Err(Error::ZeroRadius);
    }
    const OUT: usize = usize::MAX;
    let mut level_of = vec![OUT; g.n()];
    let mut levels: Vec<Vec<usize>> = vec![vec![root]];
    level_of[root] = 0;
    for d in 0..k {
        let mut next: Vec<usize> = Vec::new();
        for &u in &levels[d] {
            for &w in g.neighbors(u) {
                if level_of[w] == OUT {
                    level_of[w] = d + 1;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        levels.push(next);
    }

    let mut index = vec![OUT; g.n()];
    let mut level_starts = Vec::with_capacity(levels.len() + 1);
    let mut members = Vec::new();
    for (d, level) in levels.iter().enumerate() {
        level_starts.push(members.len());
        for &u in level {
            index[u] = members.len();
            let mut m = RingMember { node: u, level: d, across: Vec::new(), within: Vec::new() };
            for &w in g.neighbors(u) {
                match level_of[w] {
                    lw if lw == d + 1 => m.across.push(w),
                    lw if lw == d => m.within.push(w),
                    _ => {}
                }
            }
            members.push(m);
        }
    }
    level_starts.push(members.len());
    Ok(RingDecomposition { root, k, members, level_starts, index })
}

/// True iff some node of the decomposition has a neighbor on its own level.
/// Such an edge closes an odd cycle through the root.
pub fn same_level_edge_exists(rd: &RingDecomposition) -> bool {
    rd.members().iter().any(|m| !m.within.is_empty())
}

/// Subgraph induced by `nodes` (relabelled `0..nodes.len()` in the given
/// order), carrying features and node labels along.
pub fn induced_subgraph<T: Scalar>(g: &Graph<T>, nodes: &[usize]) -> Result<Graph<T>> {
    let mut pos: HashMap<usize, usize> = HashMap::with_capacity(nodes.len());
    for (i, &u) in nodes.iter().enumerate() {
        g.check_node(u)?;
        if pos.insert(u, i).is_some() {
            return Err(Error::InvalidGraph(format!("node {u} listed twice")));
        }
    }
    let mut adj = vec![Vec::new(); nodes.len()];
    for (i, &u) in nodes.iter().enumerate() {
        adj[i] = g.neighbors(u).iter().filter_map(|w| pos.get(w).copied()).collect();
        adj[i].sort_unstable();
    }
    let mut features = crate::nn::Matrix::zeros(nodes.len(), g.feature_dim());
    for (i, &u) in nodes.iter().enumerate() {
        features.row_mut(i).copy_from_slice(g.features().row(u));
    }
    let sub = Graph::from_sorted_adjacency(adj).with_features(features)?;
    let sub = match g.node_labels() {
        Some(labels) => sub.with_node_labels(nodes.iter().map(|&u| labels[u]).collect())?,
        None => sub,
    };
    Ok(sub)
}

/// The neighborhood subgraph `G_v^k`: induced on `N_k(v) ∪ {v}`, nodes in
/// ascending original id order.
pub fn induced_khop_subgraph<T: Scalar>(g: &Graph<T>, v: usize, k: usize) -> Result<Graph<T>> {
    let rd = ring_decompose(g, v, k)?;
    induced_subgraph(g, &rd.nodes_sorted())
}

#[cfg(test)]
mod tests {
    use super::super::{complete, cycle, is_bipartite, path, triangular_prism};
    use super::*;

    /// v1..v5 as 0..4.
    fn five_node_example() -> Graph {
        Graph::from_edges(5, &[(0, 1), (0, 2), (1, 2), (1, 3), (1, 4)]).unwrap()
    }

    #[test]
    fn worked_example_rings() {
        let rd = ring_decompose(&five_node_example(), 0, 2).unwrap();
        assert_eq!(rd.levels(), vec![vec![0], vec![1, 2], vec![3, 4]]);
        assert_eq!(rd.across(1), &[3, 4]);
        assert!(rd.across(2).is_empty());
        assert_eq!(rd.within(1), &[2]);
        assert_eq!(rd.within(2), &[1]);
        assert!(rd.within(3).is_empty() && rd.within(4).is_empty());
        assert!(rd.across(3).is_empty());
    }

    #[test]
    fn isolated_node_has_single_level() {
        let g = Graph::<f64>::from_edges(1, &[]).unwrap();
        for k in 1..4 {
            let rd = ring_decompose(&g, 0, k).unwrap();
            assert_eq!(rd.levels(), vec![vec![0]]);
            assert!(rd.across(0).is_empty() && rd.within(0).is_empty());
        }
    }

    #[test]
    fn six_cycle_rings() {
        let g = cycle::<f64>(6);
        for v in 0..6 {
            let rd = ring_decompose(&g, v, 3).unwrap();
            let sizes: Vec<usize> = rd.levels().iter().map(Vec::len).collect();
            assert_eq!(sizes, vec![1, 2, 2, 1]);
            assert!(rd.members().iter().all(|m| m.within.is_empty()));
            assert!(!same_level_edge_exists(&rd));
        }
    }

    #[test]
    fn errors() {
        let g = cycle::<f64>(4);
        assert!(matches!(ring_decompose(&g, 4, 1), Err(Error::InvalidNode { .. })));
        assert!(matches!(ring_decompose(&g, 0, 0), Err(Error::ZeroRadius)));
        assert!(induced_khop_subgraph(&g, 9, 1).is_err());
    }

    #[test]
    fn frontier_has_no_across() {
        let g = cycle::<f64>(10);
        let rd = ring_decompose(&g, 0, 3).unwrap();
        assert!(rd.level_members(3).iter().all(|m| m.across.is_empty()));
    }

    #[test]
    fn induced_examples() {
        let tri = induced_khop_subgraph(&five_node_example(), 0, 1).unwrap();
        assert_eq!(tri, complete::<f64>(3));
        let k4 = complete::<f64>(4);
        assert_eq!(induced_khop_subgraph(&k4, 2, 1).unwrap(), k4);
        let p = induced_khop_subgraph(&cycle::<f64>(6), 0, 2).unwrap();
        assert_eq!(p.n(), 5);
        assert_eq!(p.m(), 4);
        let mut degs: Vec<usize> = (0..5).map(|v| p.degree(v)).collect();
        degs.sort_unstable();
        assert_eq!(degs, vec![1, 1, 2, 2, 2]);
        // centered: the root (node 0 of C6, first in sorted order) has degree 2
        // and both neighbors of it have degree 2 as well
        assert_eq!(p.degree(0), 2);
        assert!(p.neighbors(0).iter().all(|&u| p.degree(u) == 2));
        assert!(is_bipartite(&p));
    }

    #[test]
    fn same_level_edge_examples() {
        let prism = triangular_prism::<f64>();
        for v in 0..6 {
            assert!(same_level_edge_exists(&ring_decompose(&prism, v, 1).unwrap()));
        }
        let edge = path::<f64>(2);
        assert!(!same_level_edge_exists(&ring_decompose(&edge, 0, 1).unwrap()));
        assert!(!same_level_edge_exists(&ring_decompose(&edge, 1, 1).unwrap()));
    }
}
