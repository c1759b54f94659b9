//! Hypergraphs with labelled hyperedges and ordered tentacles.
//!
//! A [`Hypergraph`] is a set of nodes plus a set of hyperedges. Each hyperedge carries a
//! [`Label`] and an ordered list of tentacles, one per position of the label's arity. Position
//! matters: for the GCM library the component edge `f` is `(manager-port, location, store)`.
//!
//! Graphs are plain values. The `add_*` methods return a new graph and leave `self` untouched;
//! the `insert_*` methods mutate in place and are what builders and the engine use internally.

mod dot;
mod iso;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dot::to_dot;
pub use iso::is_isomorphic;

/// Identity of a node within one graph. Allocated by a per-graph monotone counter and never
/// reused, so it carries allocation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(u32);

impl NodeId {
    pub fn raw(self) -> u32 {
        self.0
    }

    pub(crate) fn from_raw(raw: u32) -> Self {
        NodeId(raw)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(u32);

impl EdgeId {
    pub fn raw(self) -> u32 {
        self.0
    }

    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) fn from_raw(raw: u32) -> Self {
        EdgeId(raw)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// An edge label together with the number of tentacles every edge of that label has.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Label {
    name: String,
    arity: usize,
}

impl Label {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Label {
            name: name.into(),
            arity,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hyperedge {
    id: EdgeId,
    label: Label,
    tentacles: Vec<NodeId>,
    name: Option<String>,
}

impl Hyperedge {
    pub fn id(&self) -> EdgeId {
        self.id
    }

    pub fn label(&self) -> &Label {
        &self.label
    }

    /// Tentacle targets, in positional order.
    pub fn tentacles(&self) -> &[NodeId] {
        &self.tentacles
    }

    /// Optional user-facing name (e.g. `W1`). Not part of the edge's identity.
    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("label {label} expects {expected} tentacles, got {found}")]
    ArityMismatch {
        label: String,
        expected: usize,
        found: usize,
    },
    #[error("node {0} is not part of the graph")]
    UnknownNode(NodeId),
    #[error("edge {0} is not part of the graph")]
    UnknownEdge(EdgeId),
}

#[derive(Clone, Debug, Default)]
pub struct Hypergraph {
    nodes: BTreeMap<NodeId, String>,
    edges: BTreeMap<EdgeId, Hyperedge>,
    next_node: u32,
    next_edge: u32,
}

// Allocation counters are bookkeeping, not structure.
impl PartialEq for Hypergraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl Eq for Hypergraph {}

impl Hypergraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns a copy of the graph with one more (isolated) node.
    pub fn add_node(&self, display_name: impl Into<String>) -> (Hypergraph, NodeId) {
        let mut graph = self.clone();
        let id = graph.insert_node(display_name);
        (graph, id)
    }

    /// Returns a copy of the graph with one more edge.
    pub fn add_edge(
        &self,
        label: &Label,
        tentacles: &[NodeId],
    ) -> Result<(Hypergraph, EdgeId), GraphError> {
        let mut graph = self.clone();
        let id = graph.insert_edge(label, tentacles)?;
        Ok((graph, id))
    }

    pub fn insert_node(&mut self, display_name: impl Into<String>) -> NodeId {
        let id = NodeId(self.next_node);
        self.next_node += 1;
        self.nodes.insert(id, display_name.into());
        id
    }

    /// Inserts a node under an id handed out by a [`crate::production::FreshAllocator`] seeded from
    /// this graph. Bumps the counter past it.
    pub(crate) fn insert_node_with_id(&mut self, id: NodeId, display_name: String) {
        self.nodes.insert(id, display_name);
        self.next_node = self.next_node.max(id.0 + 1);
    }

    pub fn insert_edge(&mut self, label: &Label, tentacles: &[NodeId]) -> Result<EdgeId, GraphError> {
        self.insert_named_edge(label, tentacles, None)
    }

    pub fn insert_named_edge(
        &mut self,
        label: &Label,
        tentacles: &[NodeId],
        name: Option<String>,
    ) -> Result<EdgeId, GraphError> {
        if tentacles.len() != label.arity {
            return Err(GraphError::ArityMismatch {
                label: label.name.clone(),
                expected: label.arity,
                found: tentacles.len(),
            });
        }
        if let Some(missing) = tentacles.iter().find(|n| !self.nodes.contains_key(n)) {
            return Err(GraphError::UnknownNode(*missing));
        }
        let id = EdgeId(self.next_edge);
        self.next_edge += 1;
        self.edges.insert(
            id,
            Hyperedge {
                id,
                label: label.clone(),
                tentacles: tentacles.to_vec(),
                name,
            },
        );
        Ok(id)
    }

    pub fn remove_edge(&mut self, id: EdgeId) -> Result<Hyperedge, GraphError> {
        self.edges.remove(&id).ok_or(GraphError::UnknownEdge(id))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    /// Nodes with their display names, in id order.
    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &str)> + '_ {
        self.nodes.iter().map(|(id, name)| (*id, name.as_str()))
    }

    pub fn node_set(&self) -> BTreeSet<NodeId> {
        self.nodes.keys().copied().collect()
    }

    pub fn display_name(&self, id: NodeId) -> Option<&str> {
        self.nodes.get(&id).map(String::as_str)
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.nodes
            .iter()
            .find(|(_, n)| n.as_str() == name)
            .map(|(id, _)| *id)
    }

    /// Edges in id order.
    pub fn edges(&self) -> impl Iterator<Item = &Hyperedge> + '_ {
        self.edges.values()
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Hyperedge> {
        self.edges.get(&id)
    }

    pub fn edge_by_name(&self, name: &str) -> Option<&Hyperedge> {
        self.edges.values().find(|e| e.name.as_deref() == Some(name))
    }

    pub fn edges_with_label<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a Hyperedge> + 'a {
        self.edges.values().filter(move |e| e.label.name == label)
    }

    /// Next id [`Hypergraph::insert_node`] would hand out.
    pub fn next_node_raw(&self) -> u32 {
        self.next_node
    }

    /// Every `(edge, tentacle position)` whose tentacle targets `node`, ordered by edge id then
    /// position.
    pub fn attached(&self, node: NodeId) -> Result<Vec<(EdgeId, usize)>, GraphError> {
        if !self.nodes.contains_key(&node) {
            return Err(GraphError::UnknownNode(node));
        }
        Ok(self
            .edges
            .values()
            .flat_map(|e| {
                e.tentacles
                    .iter()
                    .enumerate()
                    .filter(move |(_, t)| **t == node)
                    .map(move |(i, _)| (e.id, i))
            })
            .collect())
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.edges
            .values()
            .map(|e| e.tentacles.iter().filter(|t| **t == node).count())
            .sum()
    }

    /// Redirects every tentacle through `subst` and drops the nodes that were mapped away.
    ///
    /// Chains (`a -> b`, `b -> c`) are followed to their end. A representative that is not yet
    /// a node of the graph is added under the display name of the first node mapped onto it.
    pub fn apply_substitution(&self, subst: &BTreeMap<NodeId, NodeId>) -> Hypergraph {
        let resolve = |start: NodeId| {
            let mut cur = start;
            let mut hops = 0;
            while let Some(next) = subst.get(&cur) {
                if *next == cur || hops > subst.len() {
                    break;
                }
                cur = *next;
                hops += 1;
            }
            cur
        };

        let mut out = self.clone();
        for from in subst.keys() {
            let rep = resolve(*from);
            if rep == *from {
                continue;
            }
            if let Some(name) = out.nodes.remove(from) {
                if !out.nodes.contains_key(&rep) && !subst.contains_key(&rep) {
                    out.insert_node_with_id(rep, name);
                }
            }
        }
        for edge in out.edges.values_mut() {
            for t in edge.tentacles.iter_mut() {
                *t = resolve(*t);
            }
        }
        out
    }

    /// Stable hash over ids, names and structure. Two graphs with equal fingerprints are equal
    /// including their id assignment.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for (id, name) in &self.nodes {
            hasher.update(format!("n{}:{:?};", id.0, name));
        }
        for e in self.edges.values() {
            hasher.update(format!("e{}:{}:{:?}:{:?};", e.id.0, e.label, e.tentacles, e.name));
        }
        hex::encode(hasher.finalize())
    }

    /// True when every edge has `arity` tentacles and every tentacle targets a member node.
    pub fn is_well_formed(&self) -> bool {
        self.edges.values().all(|e| {
            e.tentacles.len() == e.label.arity && e.tentacles.iter().all(|t| self.nodes.contains_key(t))
        })
    }
}
