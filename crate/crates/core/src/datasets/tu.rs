//! Reader and writer for the TU benchmark text layout:
//!
//! * `DS_A.txt`: one `row, col` pair per line, 1-based global node ids, both
//!   directions listed;
//! * `DS_graph_indicator.txt`: graph id (1-based) of every node;
//! * `DS_graph_labels.txt`: one label per graph;
//! * `DS_node_labels.txt` (optional): one label per node.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::nn::Matrix;
use crate::{Error, Result};

/// Graph-classification dataset. Features are one-hot node labels, or the
/// node degree when the dataset has none.
#[derive(Clone, Debug)]
pub struct TuDataset {
    pub name: String,
    pub graphs: Vec<Graph<f64>>,
    /// Original graph label of each class index.
    pub graph_label_values: Vec<i64>,
    /// Original node label of each one-hot position; empty when the
    /// dataset has no node labels.
    pub node_label_values: Vec<i64>,
    pub self_loops_dropped: usize,
}

impl TuDataset {
    pub fn num_classes(&self) -> usize {
        self.graph_label_values.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.graphs.iter().map(|g| g.graph_label().expect("labeled")).collect()
    }

    pub fn feature_dim(&self) -> usize {
        self.graphs.first().map_or(0, |g| g.feature_dim())
    }
}

fn find_prefix(dir: &Path) -> Result<String> {
    let entries = fs::read_dir(dir).map_err(|_| Error::MissingFile(dir.to_path_buf()))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str().map(str::to_string))
        .filter_map(|n| n.strip_suffix("_A.txt").map(str::to_string))
        .collect();
    names.sort();
    names.into_iter().next().ok_or_else(|| Error::MissingFile(dir.join("<name>_A.txt")))
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|_| Error::MissingFile(path.to_path_buf()))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty())
        .collect())
}

fn parse_int(path: &Path, line: usize, s: &str) -> Result<i64> {
    s.trim().parse::<i64>().map_err(|_| Error::Parse { file: path.display().to_string(), line, msg: format!("not an integer: {s:?}") })
}

fn read_ints(path: &Path) -> Result<Vec<i64>> {
    read_lines(path)?
        .into_iter()
        .map(|(line, l)| {
            // label files may carry extra comma-separated columns; the first is the label
            let first = l.split(',').next().unwrap_or("");
            parse_int(path, line, first)
        })
        .collect()
}

/// Loads a dataset directory. The dataset name is taken from the `*_A.txt`
/// file.
pub fn tu_load(dir: &Path) -> Result<TuDataset> {
    let name = find_prefix(dir)?;
    let file = |suffix: &str| -> PathBuf { dir.join(format!("{name}_{suffix}.txt")) };

    let indicator = read_ints(&file("graph_indicator"))?;
    let graph_labels_raw = read_ints(&file("graph_labels"))?;
    let num_graphs = graph_labels_raw.len();
    let total = indicator.len();
    let mut graph_of = Vec::with_capacity(total);
    let mut counts = vec![0usize; num_graphs];
    for (i, &gid) in indicator.iter().enumerate() {
        if gid < 1 || gid as usize > num_graphs {
            return Err(Error::Parse {
                file: file("graph_indicator").display().to_string(),
                line: i + 1,
                msg: format!("graph id {gid} outside 1..={num_graphs}"),
            });
        }
        graph_of.push(gid as usize - 1);
        counts[gid as usize - 1] += 1;
    }
    if indicator.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Dataset("graph indicator is not grouped by graph".into()));
    }
    let mut first = vec![0usize; num_graphs + 1];
    for g in 0..num_graphs {
        first[g + 1] = first[g] + counts[g];
    }

    let a_path = file("A");
    let mut directed: HashSet<(usize, usize)> = HashSet::new();
    let mut self_loops = 0;
    for (line, l) in read_lines(&a_path)? {
        let mut parts = l.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse { file: a_path.display().to_string(), line, msg: "expected `row, col`".into() });
        };
        let (a, b) = (parse_int(&a_path, line, a)?, parse_int(&a_path, line, b)?);
        for x in [a, b] {
            if x < 1 || x as usize > total {
                return Err(Error::Parse { file: a_path.display().to_string(), line, msg: format!("dangling node index {x}") });
            }
        }
        let (u, v) = (a as usize - 1, b as usize - 1);
        if graph_of[u] != graph_of[v] {
            return Err(Error::Parse { file: a_path.display().to_string(), line, msg: format!("edge {a},{b} joins two graphs") });
        }
        if u == v {
            self_loops += 1;
            continue;
        }
        directed.insert((u, v));
    }
    if let Some(&(u, v)) = directed.iter().find(|&&(u, v)| !directed.contains(&(v, u))) {
        return Err(Error::Dataset(format!("asymmetric edge list: {},{} has no reverse", u + 1, v + 1)));
    }

    let label_values: Vec<i64> = graph_labels_raw.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let node_labels_path = file("node_labels");
    let node_labels = if node_labels_path.exists() { Some(read_ints(&node_labels_path)?) } else { None };
    if let Some(nl) = &node_labels {
        if nl.len() != total {
            return Err(Error::Dataset(format!("{} node labels for {total} nodes", nl.len())));
        }
    }
    let node_label_values: Vec<i64> = node_labels
        .as_ref()
        .map(|nl| nl.iter().copied().collect::<BTreeSet<_>>().into_iter().collect())
        .unwrap_or_default();

    let mut edges_per_graph: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_graphs];
    let mut sorted: Vec<(usize, usize)> = directed.into_iter().filter(|&(u, v)| u < v).collect();
    sorted.sort_unstable();
    for (u, v) in sorted {
        let g = graph_of[u];
        edges_per_graph[g].push((u - first[g], v - first[g]));
    }

    let mut graphs = Vec::with_capacity(num_graphs);
    for g in 0..num_graphs {
        let n = counts[g];
        let graph = Graph::from_edges(n, &edges_per_graph[g])?;
        let graph = match &node_labels {
            Some(nl) => {
                let idx: Vec<usize> =
                    (0..n).map(|i| node_label_values.binary_search(&nl[first[g] + i]).unwrap()).collect();
                let mut feats = Matrix::zeros(n, node_label_values.len());
                for (i, &j) in idx.iter().enumerate() {
                    feats[(i, j)] = 1.0;
                }
                graph.with_features(feats)?.with_node_labels(idx)?
            }
            None => graph.with_degree_features(),
        };
        let class = label_values.binary_search(&graph_labels_raw[g]).unwrap();
        graphs.push(graph.with_graph_label(class));
    }
    Ok(TuDataset { name, graphs, graph_label_values: label_values, node_label_values, self_loops_dropped: self_loops })
}

/// Writes graphs (with graph labels, and node labels when present on every
/// graph) in the TU layout under `dir` with file prefix `name`.
pub fn tu_write(dir: &Path, name: &str, graphs: &[Graph<f64>], graph_label_values: &[i64], node_label_values: &[i64]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut a = String::new();
    let mut ind = String::new();
    let mut gl = String::new();
    let mut nl = String::new();
    let with_nodes = !node_label_values.is_empty() && graphs.iter().all(|g| g.node_labels().is_some());
    let mut offset = 0;
    for (gi, g) in graphs.iter().enumerate() {
        for v in 0..g.n() {
            for &u in g.neighbors(v) {
                a.push_str(&format!("{}, {}\n", offset + v + 1, offset + u + 1));
            }
            ind.push_str(&format!("{}\n", gi + 1));
            if with_nodes {
                nl.push_str(&format!("{}\n", node_label_values[g.node_labels().unwrap()[v]]));
            }
        }
        let label = g.graph_label().ok_or_else(|| Error::Dataset(format!("graph {gi} has no label")))?;
        let value = graph_label_values.get(label).copied().unwrap_or(label as i64);
        gl.push_str(&format!("{value}\n"));
        offset += g.n();
    }
    fs::write(dir.join(format!("{name}_A.txt")), a)?;
    fs::write(dir.join(format!("{name}_graph_indicator.txt")), ind)?;
    fs::write(dir.join(format!("{name}_graph_labels.txt")), gl)?;
    if with_nodes {
        fs::write(dir.join(format!("{name}_node_labels.txt")), nl)?;
    }
    Ok(())
}

/// Metadata stored next to generated datasets.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Sidecar {
    pub name: String,
    /// `roles` (node classification on one graph) or `property`.
    pub task: String,
    pub config: serde_json::Value,
    pub seed: u64,
    /// Role class per node (roles task) or property label per graph.
    pub labels: Vec<usize>,
    pub num_classes: usize,
    #[serde(default)]
    pub class_names: Vec<String>,
}

pub const SIDECAR_FILE: &str = "meta.json";

impl Sidecar {
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(SIDECAR_FILE), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Option<Self>> {
        let p = dir.join(SIDECAR_FILE);
        if !p.exists() {
            return Ok(None);
        }
        Ok(Some(serde_json::from_str(&fs::read_to_string(p)?)?))
    }
}
