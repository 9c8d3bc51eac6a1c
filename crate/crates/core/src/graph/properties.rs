use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphProperty {
    Connectivity,
    Bipartiteness,
    TriangleFreeness,
}

impl GraphProperty {
    pub const ALL: [GraphProperty; 3] =
        [GraphProperty::Connectivity, GraphProperty::Bipartiteness, GraphProperty::TriangleFreeness];

    /// Exact oracle for the property.
    pub fn holds<T: Scalar>(self, g: &Graph<T>) -> bool {
        match self {
            GraphProperty::Connectivity => is_connected(g),
            GraphProperty::Bipartiteness => is_bipartite(g),
            GraphProperty::TriangleFreeness => is_triangle_free(g),
        }
    }

    pub fn label<T: Scalar>(self, g: &Graph<T>) -> PropertyLabel {
        PropertyLabel { property: self, satisfied: self.holds(g) }
    }

    pub fn name(self) -> &'static str {
        match self {
            GraphProperty::Connectivity => "connectivity",
            GraphProperty::Bipartiteness => "bipartiteness",
            GraphProperty::TriangleFreeness => "triangle-freeness",
        }
    }
}

impl std::str::FromStr for GraphProperty {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "connectivity" | "connected" => Ok(Self::Connectivity),
            "bipartiteness" | "bipartite" => Ok(Self::Bipartiteness),
            "triangle-freeness" | "triangle-free" | "triangle" => Ok(Self::TriangleFreeness),
            _ => Err(format!("unknown property {s:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyLabel {
    pub property: GraphProperty,
    pub satisfied: bool,
}

/// BFS distances from `src`; `None` for unreachable nodes.
pub fn shortest_path_lengths<T: Scalar>(g: &Graph<T>, src: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.n()];
    dist[src] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap();
        for &w in g.neighbors(u) {
            if dist[w].is_none() {
                dist[w] = Some(du + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Largest finite distance from `v`.
pub fn eccentricity<T: Scalar>(g: &Graph<T>, v: usize) -> usize {
    shortest_path_lengths(g, v).into_iter().flatten().max().unwrap_or(0)
}

/// Connected components as sorted node lists, ordered by smallest member.
pub fn components<T: Scalar>(g: &Graph<T>) -> Vec<Vec<usize>> {
    let mut comp = vec![usize::MAX; g.n()];
    let mut out = Vec::new();
    for s in 0..g.n() {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![s];
        comp[s] = id;
        let mut i = 0;
        while i < members.len() {
            let u = members[i];
            i += 1;
            for &w in g.neighbors(u) {
                if comp[w] == usize::MAX {
                    comp[w] = id;
                    members.push(w);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// The empty graph counts as connected.
pub fn is_connected<T: Scalar>(g: &Graph<T>) -> bool {
    g.n() == 0 || shortest_path_lengths(g, 0).iter().all(Option::is_some)
}

/// BFS two-colouring.
pub fn is_bipartite<T: Scalar>(g: &Graph<T>) -> bool {
    let mut color: Vec<Option<bool>> = vec![None; g.n()];
    for s in 0..g.n() {
        if color[s].is_some() {
            continue;
        }
        color[s] = Some(false);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            let cu = color[u].unwrap();
            for &w in g.neighbors(u) {
                match color[w] {
                    None => {
                        color[w] = Some(!cu);
                        queue.push_back(w);
                    }
                    Some(cw) if cw == cu => return false,
                    Some(_) => {}
                }
            }
        }
    }
    true
}

/// Number of triangles, each counted once, via sorted-adjacency intersection
/// over edges `u < v` and common neighbors `w > v`.
pub fn triangle_count<T: Scalar>(g: &Graph<T>) -> usize {
    let mut count = 0;
    for (u, v) in g.edges() {
        let (a, b) = (g.neighbors(u), g.neighbors(v));
        let (mut i, mut j) = (a.partition_point(|&x| x <= v), b.partition_point(|&x| x <= v));
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    count
}

pub fn is_triangle_free<T: Scalar>(g: &Graph<T>) -> bool {
    triangle_count(g) == 0
}

/// Minimum over connected components of the component diameter. Zero for an
/// isolated node; `None` for the empty graph.
pub fn min_component_diameter<T: Scalar>(g: &Graph<T>) -> Option<usize> {
    components(g)
        .iter()
        .map(|comp| comp.iter().map(|&v| eccentricity(g, v)).max().unwrap_or(0))
        .min()
}

/// Length of the shortest odd cycle, or `None` if the graph is bipartite.
///
/// From every source, an edge joining two nodes at equal BFS depth `d`
/// closes an odd closed walk of length `2d + 1`; the minimum over sources
/// and such edges is exactly the shortest odd cycle.
pub fn shortest_odd_cycle_length<T: Scalar>(g: &Graph<T>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for s in 0..g.n() {
        let dist = shortest_path_lengths(g, s);
        for (u, w) in g.edges() {
            if let (Some(du), Some(dw)) = (dist[u], dist[w]) {
                if du == dw {
                    let len = 2 * du + 1;
                    best = Some(best.map_or(len, |b| b.min(len)));
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::super::{complete, complete_bipartite, cycle, disjoint_union, path, triangular_prism};
    use super::*;

    fn two_triangles() -> Graph {
        disjoint_union(&complete(3), &complete(3))
    }

    #[test]
    fn counterexample_graph_oracles() {
        let g1 = two_triangles();
        assert!(!is_connected(&g1) && !is_triangle_free(&g1) && !is_bipartite(&g1));
        let g2 = cycle::<f64>(6);
        assert!(is_connected(&g2) && is_triangle_free(&g2) && is_bipartite(&g2));
        let k33 = complete_bipartite::<f64>(3, 3);
        assert!(is_bipartite(&k33) && is_triangle_free(&k33));
        let prism = triangular_prism::<f64>();
        assert!(!is_bipartite(&prism) && !is_triangle_free(&prism));
        assert_eq!(triangle_count(&prism), 2);
        assert_eq!(triangle_count(&complete::<f64>(4)), 4);
    }

    #[test]
    fn diameters_and_odd_cycles() {
        assert_eq!(min_component_diameter(&two_triangles()), Some(1));
        assert_eq!(shortest_odd_cycle_length(&two_triangles()), Some(3));
        assert_eq!(min_component_diameter(&cycle::<f64>(6)), Some(3));
        assert_eq!(shortest_odd_cycle_length(&cycle::<f64>(6)), None);
        assert_eq!(min_component_diameter(&triangular_prism::<f64>()), Some(2));
        assert_eq!(shortest_odd_cycle_length(&triangular_prism::<f64>()), Some(3));
        assert_eq!(shortest_odd_cycle_length(&cycle::<f64>(7)), Some(7));
        let g = disjoint_union(&path::<f64>(4), &Graph::from_edges(1, &[]).unwrap());
        assert_eq!(min_component_diameter(&g), Some(0));
    }

    #[test]
    fn empty_and_trivial_graphs() {
        let empty = Graph::<f64>::from_edges(0, &[]).unwrap();
        assert!(is_connected(&empty) && is_bipartite(&empty) && is_triangle_free(&empty));
        assert_eq!(min_component_diameter(&empty), None);
        let two = Graph::<f64>::from_edges(2, &[]).unwrap();
        assert!(!is_connected(&two));
    }

    #[test]
    fn components_are_sorted() {
        let g = Graph::<f64>::from_edges(5, &[(4, 0), (1, 2)]).unwrap();
        assert_eq!(components(&g), vec![vec![0, 4], vec![1, 2], vec![3]]);
    }
}
