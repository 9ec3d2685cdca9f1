//! Directed q-regular topologies stored as per-node ordered in-neighbor lists.
//!
//! A node *reads* from the nodes in its in-list; information flows from each
//! listed source to the owner of the list. Every node must have exactly `q`
//! distinct, non-self in-neighbors and appear in exactly `q` in-lists.

mod churn;
mod edgelist;
mod lattice;
mod rewire;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lattice::LatticeSpec;
pub use rewire::RewireEvent;

/// In-degree of the Moore neighborhood.
pub const MOORE_DEGREE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(u32);

impl NodeId {
    pub fn new(index: usize) -> Self {
        NodeId(u32::try_from(index).expect("node index exceeds u32"))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<usize> for NodeId {
    fn from(index: usize) -> Self {
        NodeId::new(index)
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid lattice spec: {0}")]
    InvalidSpec(String),
    #[error("node {node} out of range (n_nodes = {n_nodes})")]
    NodeOutOfRange { node: usize, n_nodes: usize },
    #[error("slot {slot} out of range (q = {q})")]
    SlotOutOfRange { slot: usize, q: usize },
    #[error("exchange requires two distinct nodes, got {0} twice")]
    SameNode(NodeId),
    #[error("network too small: {n_nodes} nodes cannot lose a node and stay {q}-regular")]
    TooSmall { n_nodes: usize, q: usize },
    #[error("in-list of node {node} has length {len}, expected {q}")]
    ListLength { node: usize, len: usize, q: usize },
    #[error("degree must be at least 1")]
    ZeroDegree,
    #[error("topology violates {} invariant(s), first: {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),
    #[error("could not place node {0} without breaking regularity")]
    ChurnFailed(NodeId),
    #[error("edge list line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which structural invariant a [`Violation`] breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum Rule {
    /// The entry refers to a node that does not exist.
    OutOfRange { value: usize },
    /// The entry equals the owner of the list.
    SelfLoop,
    /// The entry repeats the one stored at `first_slot`.
    Duplicate { first_slot: usize },
    /// The node appears in more than `q` in-lists.
    ///
    /// Lists have fixed length, so the total edge count is always `q * n`
    /// and every deficit is matched by an excess elsewhere; reporting the
    /// over-subscribed side is sufficient.
    OutDegreeExcess { out_degree: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub node: NodeId,
    /// In-list slot of `node`; `None` for per-node rules.
    pub slot: Option<usize>,
    #[serde(flatten)]
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.slot, self.rule) {
            (Some(s), Rule::OutOfRange { value }) => {
                write!(f, "node {} slot {s}: entry {value} out of range", self.node)
            }
            (Some(s), Rule::SelfLoop) => write!(f, "node {} slot {s}: self-loop", self.node),
            (Some(s), Rule::Duplicate { first_slot }) => {
                write!(f, "node {} slot {s}: duplicates slot {first_slot}", self.node)
            }
            (_, Rule::OutDegreeExcess { out_degree }) => {
                write!(f, "node {}: out-degree {out_degree}", self.node)
            }
            (None, rule) => write!(f, "node {}: {rule:?}", self.node),
        }
    }
}

/// A directed graph in which every node keeps an ordered list of exactly `q`
/// in-neighbors. Stored flat: slot `s` of node `i` lives at `i * q + s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    q: usize,
    in_edges: Vec<NodeId>,
}

impl Topology {
    /// Builds a topology from explicit in-lists and checks every invariant.
    pub fn from_in_lists(q: usize, lists: Vec<Vec<NodeId>>) -> Result<Self, GraphError> {
        let topology = Self::from_in_lists_unchecked(q, lists)?;
        let violations = topology.validate();
        if violations.is_empty() {
            Ok(topology)
        } else {
            Err(GraphError::Invalid(violations))
        }
    }

    /// Only list lengths are checked; use [`Topology::validate`] to inspect
    /// the result.
    pub fn from_in_lists_unchecked(q: usize, lists: Vec<Vec<NodeId>>) -> Result<Self, GraphError> {
        if q == 0 {
            return Err(GraphError::ZeroDegree);
        }
        let mut in_edges = Vec::with_capacity(lists.len() * q);
        for (node, list) in lists.into_iter().enumerate() {
            if list.len() != q {
                return Err(GraphError::ListLength {
                    node,
                    len: list.len(),
                    q,
                });
            }
            in_edges.extend(list);
        }
        Ok(Topology { q, in_edges })
    }

    pub(crate) fn from_flat(q: usize, in_edges: Vec<NodeId>) -> Self {
        debug_assert!(q > 0 && in_edges.len().is_multiple_of(q));
        Topology { q, in_edges }
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.in_edges.len() / self.q
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn edge_count(&self) -> usize {
        self.in_edges.len()
    }

    #[inline]
    pub fn in_list(&self, node: NodeId) -> &[NodeId] {
        let start = node.index() * self.q;
        &self.in_edges[start..start + self.q]
    }

    #[inline]
    pub(crate) fn in_list_mut(&mut self, node: NodeId) -> &mut [NodeId] {
        let start = node.index() * self.q;
        &mut self.in_edges[start..start + self.q]
    }

    /// All in-lists, flattened in node order then slot order.
    pub fn in_edges(&self) -> &[NodeId] {
        &self.in_edges
    }

    pub fn in_lists(&self) -> impl ExactSizeIterator<Item = &[NodeId]> + '_ {
        self.in_edges.chunks_exact(self.q)
    }

    /// Number of in-lists each node appears in. Out-of-range entries are
    /// ignored.
    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n_nodes()];
        for e in &self.in_edges {
            if let Some(d) = deg.get_mut(e.index()) {
                *d += 1;
            }
        }
        deg
    }

    /// Every `(reader, slot)` whose in-list holds `source`.
    pub fn readers_of(&self, source: NodeId) -> Vec<(NodeId, usize)> {
        self.in_edges
            .iter()
            .enumerate()
            .filter(|(_, &e)| e == source)
            .map(|(flat, _)| (NodeId::new(flat / self.q), flat % self.q))
            .collect()
    }

    /// `true` iff `j` reads from `i` whenever `i` reads from `j`.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n_nodes()).map(NodeId::new).all(|i| {
            self.in_list(i)
                .iter()
                .all(|&j| j.index() < self.n_nodes() && self.in_list(j).contains(&i))
        })
    }

    pub(crate) fn check_node(&self, node: NodeId) -> Result<(), GraphError> {
        if node.index() >= self.n_nodes() {
            return Err(GraphError::NodeOutOfRange {
                node: node.index(),
                n_nodes: self.n_nodes(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_slot(&self, slot: usize) -> Result<(), GraphError> {
        if slot >= self.q {
            return Err(GraphError::SlotOutOfRange { slot, q: self.q });
        }
        Ok(())
    }

    /// Lists every broken invariant; empty iff the topology is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.n_nodes();
        let mut violations = Vec::new();
        for (node, list) in self.in_lists().enumerate() {
            let owner = NodeId::new(node);
            for (slot, &entry) in list.iter().enumerate() {
                let rule = if entry.index() >= n {
                    Some(Rule::OutOfRange { value: entry.index() })
                } else if entry == owner {
                    Some(Rule::SelfLoop)
                } else {
                    list[..slot]
                        .iter()
                        .position(|&e| e == entry)
                        .map(|first_slot| Rule::Duplicate { first_slot })
                };
                if let Some(rule) = rule {
                    violations.push(Violation {
                        node: owner,
                        slot: Some(slot),
                        rule,
                    });
                }
            }
        }
        for (node, out_degree) in self.out_degrees().into_iter().enumerate() {
            if out_degree > self.q {
                violations.push(Violation {
                    node: NodeId::new(node),
                    slot: None,
                    rule: Rule::OutDegreeExcess { out_degree },
                });
            }
        }
        violations
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }
}
