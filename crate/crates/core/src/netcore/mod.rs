//! Graph data model: directed multigraphs over a dense node vocabulary, edge
//! list IO, degree statistics and reproducible train/test splits.

mod degree;
mod io;
mod split;

pub use degree::{degree_stats, DegreeStats};
pub use io::{
    load_edge_list, load_edge_list_with, load_labels, parse_edge_list, parse_edge_list_with,
    save_edge_list, save_labels,
    save_weighted_edge_list, LoadedGraph, WeightMode,
};
pub use split::{split_edges, SplitSpec};

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense node index in `0..J`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Directed edge. Self-loops are allowed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub sender: NodeId,
    pub receiver: NodeId,
}

impl Edge {
    pub fn new(sender: u32, receiver: u32) -> Self {
        Edge {
            sender: NodeId(sender),
            receiver: NodeId(receiver),
        }
    }
}

/// Ordered edge sequence; repeated edges encode weight.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiGraph {
    num_nodes: usize,
    edges: Vec<Edge>,
}

impl MultiGraph {
    pub fn new(num_nodes: usize, edges: Vec<Edge>) -> Result<Self> {
        if let Some(e) = edges
            .iter()
            .find(|e| e.sender.index() >= num_nodes || e.receiver.index() >= num_nodes)
        {
            return Err(Error::InvalidParameter(format!(
                "edge ({}, {}) references a node outside 0..{num_nodes}",
                e.sender, e.receiver
            )));
        }
        Ok(MultiGraph { num_nodes, edges })
    }

    pub fn from_pairs(num_nodes: usize, pairs: &[(u32, u32)]) -> Result<Self> {
        MultiGraph::new(num_nodes, pairs.iter().map(|&(s, r)| Edge::new(s, r)).collect())
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Distinct ordered pairs with their multiplicities, in first-appearance order.
    pub fn weighted_pairs(&self) -> Vec<(Edge, u64)> {
        let mut index: HashMap<Edge, usize> = HashMap::new();
        let mut out: Vec<(Edge, u64)> = Vec::new();
        for &e in &self.edges {
            match index.get(&e) {
                Some(&i) => out[i].1 += 1,
                None => {
                    index.insert(e, out.len());
                    out.push((e, 1));
                }
            }
        }
        out
    }

    /// The simple graph: one copy of every distinct pair.
    pub fn simple(&self) -> MultiGraph {
        MultiGraph {
            num_nodes: self.num_nodes,
            edges: self.weighted_pairs().into_iter().map(|(e, _)| e).collect(),
        }
    }

    pub fn num_unique_edges(&self) -> usize {
        self.weighted_pairs().len()
    }

    /// Fraction of the `J²` ordered pairs that carry at least one edge.
    pub fn density(&self) -> f64 {
        if self.num_nodes == 0 {
            return 0.0;
        }
        self.num_unique_edges() as f64 / (self.num_nodes as f64).powi(2)
    }

    /// Nodes that occur in at least one edge.
    pub fn active_nodes(&self) -> Vec<bool> {
        let mut active = vec![false; self.num_nodes];
        for e in &self.edges {
            active[e.sender.index()] = true;
            active[e.receiver.index()] = true;
        }
        active
    }
}

/// Bijection between external labels and dense [`NodeId`]s.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Vocabulary whose labels are the decimal ids `0..n`.
    pub fn numeric(n: usize) -> Self {
        let mut v = Vocabulary::new();
        for i in 0..n {
            v.intern(&i.to_string());
        }
        v
    }

    pub fn intern(&mut self, label: &str) -> NodeId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = NodeId(self.labels.len() as u32);
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    pub fn get(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.labels[id.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_nodes() {
        assert!(MultiGraph::from_pairs(2, &[(0, 2)]).is_err());
        assert!(MultiGraph::from_pairs(3, &[(0, 2), (2, 2)]).is_ok());
    }

    #[test]
    fn weighted_pairs_in_first_appearance_order() {
        let g = MultiGraph::from_pairs(3, &[(1, 2), (0, 1), (1, 2), (1, 2)]).unwrap();
        assert_eq!(
            g.weighted_pairs(),
            vec![(Edge::new(1, 2), 3), (Edge::new(0, 1), 1)]
        );
        assert_eq!(g.simple().num_edges(), 2);
        assert!((g.density() - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn vocabulary_is_a_bijection() {
        let mut v = Vocabulary::new();
        let a = v.intern("a");
        let b = v.intern("b");
        assert_eq!(v.intern("a"), a);
        assert_eq!(v.label(b), "b");
        assert_eq!(v.get("b"), Some(b));
        assert_eq!(v.len(), 2);
    }
}
