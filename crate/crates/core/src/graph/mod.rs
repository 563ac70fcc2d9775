//! Undirected simple graphs with dense node indices.

mod distance;
mod generators;
mod io;

pub use distance::{apsp_bfs, bfs_hops, connected_components, DistanceMatrix, UNREACHABLE};
pub use generators::{
    generate_grid_random, generate_sierpinski, generate_tree, MAX_GRID_NODES, MAX_SIERPINSKI_ORDER,
};
pub use io::{load_edge_list, load_gml, to_edge_list};

use serde::Serialize;

use crate::error::{GraphError, ParseError};

/// Counts of input records discarded while normalizing to a simple graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DropCounts {
    pub self_loops: usize,
    pub duplicates: usize,
}

impl DropCounts {
    pub fn total(&self) -> usize {
        self.self_loops + self.duplicates
    }
}

/// An undirected simple graph.
///
/// Edges are stored once as `(u, v)` with `u < v`; adjacency lists are sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    labels: Option<Vec<String>>,
    weights: Option<Vec<f64>>,
    dropped: DropCounts,
}

impl Graph {
    /// Builds a graph from raw edges, dropping self-loops and duplicates.
    ///
    /// Duplicate edges keep the first occurrence (and its weight).
    pub fn from_edges(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        let mut builder = GraphBuilder::new(node_count);
        for (u, v) in edges {
            builder.add_edge(u, v, None)?;
        }
        Ok(builder.build())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.node_count && self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Original identifier of a node, or its index when the graph is unlabeled.
    pub fn label(&self, node: usize) -> String {
        match &self.labels {
            Some(labels) => labels[node].clone(),
            None => node.to_string(),
        }
    }

    /// Per-edge weights, parallel to [`Graph::edges`].
    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    pub fn dropped(&self) -> DropCounts {
        self.dropped
    }

    /// Mean degree `2|E| / |V|`.
    pub fn avg_degree(&self) -> Result<f64, GraphError> {
        if self.node_count == 0 {
            return Err(GraphError::Empty);
        }
        Ok(2.0 * self.edges.len() as f64 / self.node_count as f64)
    }
}

/// Free-function form of [`Graph::avg_degree`].
pub fn avg_degree(g: &Graph) -> Result<f64, GraphError> {
    g.avg_degree()
}

/// Incremental construction with simple-graph normalization.
#[derive(Debug)]
pub(crate) struct GraphBuilder {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    weights: Vec<Option<f64>>,
    seen: std::collections::HashSet<(usize, usize)>,
    labels: Option<Vec<String>>,
    dropped: DropCounts,
}

impl GraphBuilder {
    pub(crate) fn new(node_count: usize) -> Self {
        Self {
            node_count,
            edges: Vec::new(),
            weights: Vec::new(),
            seen: Default::default(),
            labels: None,
            dropped: DropCounts::default(),
        }
    }

    pub(crate) fn with_labels(labels: Vec<String>) -> Self {
        let mut b = Self::new(labels.len());
        b.labels = Some(labels);
        b
    }

    pub(crate) fn add_edge(&mut self, u: usize, v: usize, weight: Option<f64>) -> Result<(), GraphError> {
        let n = self.node_count;
        if u >= n || v >= n {
            return Err(GraphError::NodeOutOfRange { node: u.max(v), node_count: n });
        }
        if u == v {
            self.dropped.self_loops += 1;
            return Ok(());
        }
        let key = (u.min(v), u.max(v));
        if !self.seen.insert(key) {
            self.dropped.duplicates += 1;
            return Ok(());
        }
        self.edges.push(key);
        self.weights.push(weight);
        Ok(())
    }

    pub(crate) fn build(self) -> Graph {
        let mut adjacency = vec![Vec::new(); self.node_count];
        for &(u, v) in &self.edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        // A graph is weighted when any input edge carried a weight; the rest default to 1.
        let weights = if self.weights.iter().any(Option::is_some) {
            Some(self.weights.iter().map(|w| w.unwrap_or(1.0)).collect())
        } else {
            None
        };
        Graph {
            node_count: self.node_count,
            edges: self.edges,
            adjacency,
            labels: self.labels,
            weights,
            dropped: self.dropped,
        }
    }
}

pub(crate) fn parse_error(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}
