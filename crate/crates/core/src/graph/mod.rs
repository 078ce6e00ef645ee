//! Graph representation, dataset containers and basic queries.
//!
//! Graphs are undirected, simple (no self-loops, no duplicate edges) and
//! 0-based. Loaders for the two supported text formats live in [`tu`] and
//! [`edgelist`]; conversion from 1-based external indexing happens only
//! there.

mod edgelist;
mod tu;

pub use edgelist::{load_edge_list, save_edge_list};
pub use tu::load_tu_dataset;

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// An undirected graph with optional node features, node labels and a
/// graph-level label. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    /// Canonical (i, j) with i < j.
    edges: BTreeSet<(usize, usize)>,
    /// Sorted neighbor lists, derived from `edges` at construction.
    neighbors: Vec<Vec<usize>>,
    node_features: Option<Vec<Vec<f64>>>,
    node_labels: Option<Vec<usize>>,
    graph_label: Option<usize>,
}

impl Graph {
    /// Build a graph from an edge iterator. Edges are deduplicated and
    /// stored canonically; self-loops and out-of-range endpoints are
    /// rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::Invalid(format!("self-loop ({a}, {b}) is not allowed")));
            }
            if a >= n || b >= n {
                return Err(Error::Index(format!(
                    "edge ({a}, {b}) references a node >= n = {n}"
                )));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &set {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Graph {
            n,
            edges: set,
            neighbors,
            node_features: None,
            node_labels: None,
            graph_label: None,
        })
    }

    /// Attach an n x d feature matrix.
    pub fn with_features(mut self, features: Vec<Vec<f64>>) -> Result<Self> {
        if features.len() != self.n {
            return Err(Error::Dimension(format!(
                "feature row count {} != node count {}",
                features.len(),
                self.n
            )));
        }
        let dim = features.first().map_or(0, Vec::len);
        if features.iter().any(|row| row.len() != dim) {
            return Err(Error::Dimension("ragged feature rows".into()));
        }
        self.node_features = Some(features);
        Ok(self)
    }

    /// Attach per-node integer labels.
    pub fn with_node_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::Dimension(format!(
                "node label count {} != node count {}",
                labels.len(),
                self.n
            )));
        }
        self.node_labels = Some(labels);
        Ok(self)
    }

    /// Attach a graph-level class label.
    pub fn with_label(mut self, label: usize) -> Self {
        self.graph_label = Some(label);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical (i, j) pairs with i < j, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    pub fn node_features(&self) -> Option<&Vec<Vec<f64>>> {
        self.node_features.as_ref()
    }

    pub fn feature_dim(&self) -> usize {
        self.node_features
            .as_ref()
            .map_or(0, |f| f.first().map_or(0, Vec::len))
    }

    pub fn node_labels(&self) -> Option<&[usize]> {
        self.node_labels.as_deref()
    }

    pub fn graph_label(&self) -> Option<usize> {
        self.graph_label
    }

    /// Copy of this graph with a different edge set; node count, features
    /// and labels are preserved.
    pub fn with_edge_subset(&self, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Graph::new(self.n, edges)?;
        g.node_features = self.node_features.clone();
        g.node_labels = self.node_labels.clone();
        g.graph_label = self.graph_label;
        Ok(g)
    }
}

/// Sparse symmetric 0/1 matrix with zero diagonal. Both orientations of
/// every entry are stored, so the entry set is symmetric by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryAdjacency {
    n: usize,
    entries: BTreeSet<(usize, usize)>,
}

impl BinaryAdjacency {
    /// Build from undirected pairs; each pair contributes both (i, j) and
    /// (j, i). Diagonal positions are rejected.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut entries = BTreeSet::new();
        for (a, b) in pairs {
            if a == b {
                return Err(Error::Invalid(format!("diagonal entry ({a}, {a}) is not allowed")));
            }
            if a >= n || b >= n {
                return Err(Error::Index(format!("entry ({a}, {b}) out of range for n = {n}")));
            }
            entries.insert((a, b));
            entries.insert((b, a));
        }
        Ok(BinaryAdjacency { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored (row, col) positions; twice the undirected pair count.
    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.entries.contains(&(i, j))
    }

    /// All (row, col) positions in sorted order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries.iter().copied()
    }

    /// Canonical undirected pairs (i < j).
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries.iter().copied().filter(|&(i, j)| i < j)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.entries.range((i, 0)..(i + 1, 0)).count()
    }

    /// Row-major neighbor lists.
    pub fn neighbor_lists(&self) -> Vec<Vec<usize>> {
        let mut lists = vec![Vec::new(); self.n];
        for &(i, j) in &self.entries {
            lists[i].push(j);
        }
        lists
    }

    /// Union of entry sets. Both operands must share the dimension.
    pub fn union(&self, other: &BinaryAdjacency) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "adjacency union: {} vs {}",
                self.n, other.n
            )));
        }
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().copied());
        Ok(BinaryAdjacency { n: self.n, entries })
    }
}

/// An ordered collection of graphs sharing one feature space and label set.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graphs: Vec<Graph>,
    pub num_classes: usize,
    pub feature_dim: usize,
}

impl Dataset {
    /// Assemble a dataset and check the shared invariants: every graph
    /// label lies in `[0, num_classes)` and all graphs agree on the
    /// feature dimension.
    pub fn new(name: impl Into<String>, graphs: Vec<Graph>, num_classes: usize) -> Result<Self> {
        let feature_dim = graphs.first().map_or(0, Graph::feature_dim);
        for (idx, g) in graphs.iter().enumerate() {
            if g.feature_dim() != feature_dim {
                return Err(Error::Dimension(format!(
                    "graph {idx} has feature dim {} but the dataset uses {feature_dim}",
                    g.feature_dim()
                )));
            }
            if let Some(label) = g.graph_label() {
                if label >= num_classes {
                    return Err(Error::Invalid(format!(
                        "graph {idx} label {label} outside [0, {num_classes})"
                    )));
                }
            }
        }
        Ok(Dataset {
            name: name.into(),
            graphs,
            num_classes,
            feature_dim,
        })
    }

    pub fn labels(&self) -> Vec<usize> {
        self.graphs
            .iter()
            .map(|g| g.graph_label().expect("dataset graph without label"))
            .collect()
    }
}

/// First-order adjacency matrix of `g`: entry (i, j) present iff {i, j} is
/// an edge.
pub fn adjacency(g: &Graph) -> BinaryAdjacency {
    BinaryAdjacency::from_pairs(g.n(), g.edges()).expect("graph invariants guarantee validity")
}

/// Shortest-path hop distances from `source`. Unreachable nodes are `None`.
pub fn bfs_distances(g: &Graph, source: usize) -> Result<Vec<Option<usize>>> {
    if source >= g.n() {
        return Err(Error::Index(format!(
            "bfs source {source} >= node count {}",
            g.n()
        )));
    }
    let mut dist = vec![None; g.n()];
    dist[source] = Some(0);
    let mut queue = std::collections::VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap();
        for &v in g.neighbors(u) {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    Ok(dist)
}
